use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::TransportMap;
use crate::geom;
use crate::mesh::{Dissection, TetMesh};
use crate::Point3;

/// The protrusion Ω^e and the merged domain Ω̃.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpandedDomain {
    pub omega_e: TetMesh,
    pub omega_tilde: TetMesh,
    pub t: f64,
    pub layer_count: usize,
    /// Boundary faces of Ω^e forming the transported patch Γ_{1,t}.
    pub gamma_top: Vec<usize>,
    /// Boundary faces of Ω^e lying on Γ.
    pub gamma_bottom: Vec<usize>,
    /// Lateral boundary faces of Ω^e (Ψ_t).
    pub psi_faces: Vec<usize>,
    /// Γ vertex (index in Ω) → column of Ω̃ vertices, layer 0 first.
    pub vertex_map: BTreeMap<usize, Vec<usize>>,
    /// Ω^e vertex → Ω̃ vertex.
    pub e_to_tilde: Vec<usize>,
    /// Π loops transported to the top layer, as Ω̃ vertex cycles.
    pub pi_t: Vec<Vec<usize>>,
    pub pi_t_exceptional: Vec<usize>,
}

impl ExpandedDomain {
    /// Ω̃ index of a Γ vertex transported to `layer`.
    pub fn tilde_vertex(&self, gamma_vertex: usize, layer: usize) -> Option<usize> {
        self.vertex_map.get(&gamma_vertex).map(|c| c[layer])
    }
}

/// `min(t0 / 2, 0.25 h_min / κ)` with `h_min` the shortest Γ edge.
pub fn default_thickness(t0: f64, mesh: &TetMesh, dissection: &Dissection, kappa: f64) -> f64 {
    let h_min = dissection
        .gamma_edges(mesh)
        .iter()
        .map(|e| mesh.vertices[e[0]].distance(mesh.vertices[e[1]]))
        .fold(f64::INFINITY, f64::min);
    (0.5 * t0).min(0.25 * h_min / kappa)
}

/// Split of the prism over `(i, j, k)` with `i < j < k` and primed top
/// vertices; every shared quad gets the diagonal from its lower-index
/// bottom vertex to the higher-index top vertex.
fn split_prism(bottom: [usize; 3], top: [usize; 3], odd: bool) -> [[usize; 4]; 3] {
    let [i, j, k] = bottom;
    let [i2, j2, k2] = top;
    let mut t = [[i, j, k, k2], [i, j, k2, j2], [i, i2, j2, k2]];
    if odd {
        for tet in &mut t {
            tet.swap(0, 1);
        }
    }
    t
}

/// Extrude Γ along the transport map into `layers` prism layers.
pub fn build_protrusion(mesh: &TetMesh, dissection: &Dissection, map: &TransportMap, t: f64, layers: usize) -> Result<ExpandedDomain> {
    extrude(mesh, dissection, map, t, layers, true)
}

/// Like [`build_protrusion`] but keeps folded prisms, reoriented, so the
/// result can be inspected for overlaps past the admissible thickness.
pub fn build_protrusion_unchecked(
    mesh: &TetMesh,
    dissection: &Dissection,
    map: &TransportMap,
    t: f64,
    layers: usize,
) -> Result<ExpandedDomain> {
    extrude(mesh, dissection, map, t, layers, false)
}

fn extrude(mesh: &TetMesh, dissection: &Dissection, map: &TransportMap, t: f64, layers: usize, strict: bool) -> Result<ExpandedDomain> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidThickness(t));
    }
    if layers == 0 {
        return Err(Error::InvalidParameter("layers must be at least 1".into()));
    }
    let gv = dissection.gamma_vertices(mesh);
    let ng = gv.len();
    let local: BTreeMap<usize, usize> = gv.iter().enumerate().map(|(a, &v)| (v, a)).collect();
    // Ω^e numbering: layer k occupies k*ng .. (k+1)*ng.
    let mut e_vertices = Vec::with_capacity(ng * (layers + 1));
    let dirs: Vec<Point3> = gv.iter().map(|&v| map.field().direction(mesh.vertices[v])).collect();
    for k in 0..=layers {
        let s = t * k as f64 / layers as f64;
        for (a, &v) in gv.iter().enumerate() {
            let p = mesh.vertices[v];
            e_vertices.push(if k == 0 { p } else { p + dirs[a] * s });
        }
    }
    let diag = mesh.bbox().diagonal();
    let vol_tol = 1e-12 * diag * diag * diag;
    let mut e_tets = Vec::with_capacity(3 * layers * dissection.gamma_faces.len());
    for &f in &dissection.gamma_faces {
        let tri = mesh.boundary_faces[f];
        let mut sorted = tri;
        sorted.sort_unstable();
        // parity of the permutation taking the outward triangle to sorted order
        let pos = |v: usize| tri.iter().position(|&w| w == v).unwrap();
        let perm = [pos(sorted[0]), pos(sorted[1]), pos(sorted[2])];
        let odd = !matches!(perm, [0, 1, 2] | [1, 2, 0] | [2, 0, 1]);
        for k in 0..layers {
            let idx = |v: usize, layer: usize| layer * ng + local[&v];
            let bottom = sorted.map(|v| idx(v, k));
            let top = sorted.map(|v| idx(v, k + 1));
            for tet in split_prism(bottom, top, odd) {
                let vol = geom::tet_signed_volume(
                    e_vertices[tet[0]],
                    e_vertices[tet[1]],
                    e_vertices[tet[2]],
                    e_vertices[tet[3]],
                );
                if strict && vol <= vol_tol {
                    return Err(Error::InvertedPrism { face: f, layer: k, volume: vol });
                }
                e_tets.push(tet);
            }
        }
    }
    let make = if strict { TetMesh::new_strict } else { TetMesh::new };
    let omega_e = make(e_vertices.clone(), e_tets.clone())?;

    let nv = mesh.num_vertices();
    let e_to_tilde: Vec<usize> = (0..e_vertices.len())
        .map(|i| {
            let (k, a) = (i / ng, i % ng);
            if k == 0 {
                gv[a]
            } else {
                nv + (k - 1) * ng + a
            }
        })
        .collect();
    let mut t_vertices = mesh.vertices.clone();
    t_vertices.extend_from_slice(&e_vertices[ng..]);
    let mut t_tets = mesh.tets.clone();
    t_tets.extend(e_tets.iter().map(|tet| tet.map(|v| e_to_tilde[v])));
    let omega_tilde = make(t_vertices, t_tets)?;

    let vertex_map: BTreeMap<usize, Vec<usize>> = gv
        .iter()
        .enumerate()
        .map(|(a, &v)| (v, (0..=layers).map(|k| e_to_tilde[k * ng + a]).collect()))
        .collect();

    let mut gamma_top = Vec::new();
    let mut gamma_bottom = Vec::new();
    let mut psi_faces = Vec::new();
    for (fi, f) in omega_e.boundary_faces.iter().enumerate() {
        let layers_of: BTreeSet<usize> = f.iter().map(|&v| v / ng).collect();
        match (layers_of.len(), layers_of.first()) {
            (1, Some(&0)) => gamma_bottom.push(fi),
            (1, Some(&k)) if k == layers => gamma_top.push(fi),
            _ => psi_faces.push(fi),
        }
    }
    let top = |v: usize| vertex_map[&v][layers];
    let pi_t = dissection.pi_chains.iter().map(|c| c.iter().map(|&v| top(v)).collect()).collect();
    let pi_t_exceptional = dissection.exceptional_points.iter().map(|&v| top(v)).collect();
    Ok(ExpandedDomain {
        omega_e,
        omega_tilde,
        t,
        layer_count: layers,
        gamma_top,
        gamma_bottom,
        psi_faces,
        vertex_map,
        e_to_tilde,
        pi_t,
        pi_t_exceptional,
    })
}

/// Images of Π and its exceptional points under `p ↦ p + t v̂(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportedDissection {
    pub t: f64,
    pub pi_t: Vec<Vec<Point3>>,
    pub exceptional_points: Vec<Point3>,
}

pub fn transported_dissection(mesh: &TetMesh, dissection: &Dissection, map: &TransportMap, t: f64) -> Result<TransportedDissection> {
    if !(t > 0.0) {
        return Err(Error::InvalidThickness(t));
    }
    let go = |v: usize| map.transport(mesh.vertices[v], t);
    Ok(TransportedDissection {
        t,
        pi_t: dissection.pi_chains.iter().map(|c| c.iter().map(|&v| go(v)).collect()).collect(),
        exceptional_points: dissection.exceptional_points.iter().map(|&v| go(v)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, dissect_boundary, select_faces, single_tet, FacePredicate};
    use crate::transversal::{build_box_cover, build_field, ConstantField};
    use std::sync::Arc;

    fn constant(d: Point3) -> TransportMap {
        TransportMap::new(Arc::new(ConstantField::new(d).unwrap()))
    }

    fn cube_top(n: usize) -> (TetMesh, Dissection) {
        let m = box_mesh(n, n, n);
        let g = select_faces(&m, &FacePredicate::parse("z==1").unwrap());
        let d = dissect_boundary(&m, &g).unwrap();
        (m, d)
    }

    #[test]
    fn single_triangle_prism() {
        let m = single_tet();
        let f = m.find_boundary_face([1, 2, 3]).unwrap();
        let d = dissect_boundary(&m, &[f]).unwrap();
        let n = m.face_normal(f);
        let e = build_protrusion(&m, &d, &constant(n), 0.3, 1).unwrap();
        assert_eq!(e.omega_e.num_tets(), 3);
        assert!((e.omega_e.volume() - m.face_area(f) * 0.3).abs() < 1e-12);
    }

    #[test]
    fn cube_slab_volume() {
        let (m, d) = cube_top(1);
        let e = build_protrusion(&m, &d, &constant(Point3::new(0., 0., 1.)), 0.2, 1).unwrap();
        assert!((e.omega_e.volume() - 0.2).abs() < 1e-12);
        assert!((e.omega_tilde.volume() - 1.2).abs() < 1e-12);
        assert_eq!(e.gamma_top.len(), 2);
        assert_eq!(e.gamma_bottom.len(), 2);
        assert_eq!(e.psi_faces.len(), 8);
    }

    #[test]
    fn layer_count_does_not_change_the_solid() {
        let (m, d) = cube_top(2);
        let map = constant(Point3::new(0.2, -0.1, 1.0));
        let vols: Vec<f64> = [1, 2, 4]
            .iter()
            .map(|&l| build_protrusion(&m, &d, &map, 0.2, l).unwrap().omega_e.volume())
            .collect();
        assert!((vols[0] - vols[1]).abs() < 1e-12 && (vols[0] - vols[2]).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_thickness_rejected() {
        let (m, d) = cube_top(1);
        let map = constant(Point3::new(0., 0., 1.));
        assert!(matches!(build_protrusion(&m, &d, &map, 0.0, 1), Err(Error::InvalidThickness(_))));
        assert!(matches!(build_protrusion(&m, &d, &map, -1.0, 1), Err(Error::InvalidThickness(_))));
    }

    #[test]
    fn tangential_field_inverts_prisms() {
        let (m, d) = cube_top(1);
        let map = constant(Point3::new(1., 0., 0.));
        assert!(matches!(build_protrusion(&m, &d, &map, 0.2, 1), Err(Error::InvertedPrism { .. })));
    }

    #[test]
    fn pi_t_is_the_transported_top_square() {
        let (m, d) = cube_top(2);
        let field = build_field(build_box_cover(&m, &d).unwrap()).unwrap();
        let map = TransportMap::new(Arc::new(field));
        let e = build_protrusion(&m, &d, &map, 0.2, 2).unwrap();
        let td = transported_dissection(&m, &d, &map, 0.2).unwrap();
        assert_eq!(td.exceptional_points.len(), d.exceptional_points.len());
        for (chain, pts) in e.pi_t.iter().zip(&td.pi_t) {
            for (&v, p) in chain.iter().zip(pts) {
                assert_eq!(e.omega_tilde.vertices[v], *p);
            }
        }
        let corner = td.exceptional_points.iter().find(|p| p.x > 1.0 && p.y > 1.0).unwrap();
        let expect = Point3::splat(1.0) + Point3::splat(0.2 / 3f64.sqrt());
        assert!((*corner - expect).norm() < 1e-15);
    }
}
