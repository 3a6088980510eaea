//! Tetrahedral meshes: storage, boundary extraction and point location.

mod dissection;
mod generate;
mod io;
mod locate;
mod select;
mod vtk;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use dissection::{dissect_boundary, Dissection};
pub use generate::{box_mesh, box_mesh_in, generate_box_mesh, lshape_mesh, single_tet, slab_mesh};
pub use io::{load_mesh, parse_mesh, write_mesh};
pub use locate::PointLocator;
pub use select::{select_faces, FacePredicate};
pub use vtk::{write_vtk, VtkData};

use crate::error::{Error, Result};
use crate::geom::{self, Aabb};
use crate::Point3;

/// Barycentric tolerance used by point location.
pub const LOCATE_TOL: f64 = 1e-10;

/// Local faces of a tetrahedron, face `k` opposite local vertex `k`,
/// ordered so that they are outward for a positively oriented tetrahedron.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// Local edges of a tetrahedron.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TetMesh {
    pub vertices: Vec<Point3>,
    pub tets: Vec<[usize; 4]>,
    /// Boundary triangles oriented with outward normals.
    pub boundary_faces: Vec<[usize; 3]>,
    /// Tetrahedron owning each boundary face.
    pub boundary_owner: Vec<usize>,
    /// Optional integer labels for boundary faces (from `f` lines).
    pub face_labels: Vec<Option<i64>>,
    #[serde(skip)]
    locator: OnceLock<Arc<PointLocator>>,
}

fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut s = f;
    s.sort_unstable();
    s
}

impl TetMesh {
    /// Build a mesh, reorienting negatively oriented tetrahedra.
    pub fn new(vertices: Vec<Point3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        Self::build(vertices, tets, true)
    }

    /// Build a mesh, refusing tetrahedra that are not positively oriented.
    pub fn new_strict(vertices: Vec<Point3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        Self::build(vertices, tets, false)
    }

    fn build(vertices: Vec<Point3>, mut tets: Vec<[usize; 4]>, reorient: bool) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Invariant(format!("vertex {i} is not finite")));
            }
        }
        if tets.is_empty() {
            return Err(Error::Topology("mesh has no tetrahedra".into()));
        }
        let bbox = Aabb::from_points(vertices.iter().copied());
        let diag = bbox.diagonal();
        let vol_tol = 1e-12 * diag * diag * diag;
        for (i, t) in tets.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Topology(format!("tet {i} references a missing vertex")));
            }
            let mut q = *t;
            q.sort_unstable();
            if q.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DegenerateTet { index: i, volume: 0.0 });
            }
            let vol = geom::tet_signed_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]);
            if vol.abs() <= vol_tol {
                return Err(Error::DegenerateTet { index: i, volume: vol });
            }
            if vol < 0.0 {
                if reorient {
                    t.swap(0, 1);
                } else {
                    return Err(Error::DegenerateTet { index: i, volume: vol });
                }
            }
        }
        let mut face_count: HashMap<[usize; 3], (usize, usize, [usize; 3])> = HashMap::new();
        for (ti, t) in tets.iter().enumerate() {
            for lf in TET_FACES {
                let f = [t[lf[0]], t[lf[1]], t[lf[2]]];
                let e = face_count.entry(sorted3(f)).or_insert((0, ti, f));
                e.0 += 1;
            }
        }
        let mut boundary: Vec<([usize; 3], usize)> = Vec::new();
        for (key, (count, owner, f)) in &face_count {
            match count {
                1 => boundary.push((*f, *owner)),
                2 => {}
                _ => return Err(Error::Topology(format!("face {key:?} shared by {count} tetrahedra"))),
            }
        }
        boundary.sort_unstable_by_key(|(f, _)| sorted3(*f));
        // Every boundary edge must be shared by exactly two boundary faces.
        let mut edge_count: HashMap<[usize; 2], usize> = HashMap::new();
        for (f, _) in &boundary {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edge_count.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        if let Some((e, c)) = edge_count.iter().find(|(_, &c)| c != 2) {
            return Err(Error::Topology(format!("non-manifold boundary edge {e:?} ({c} faces)")));
        }
        let n = boundary.len();
        let (boundary_faces, boundary_owner) = boundary.into_iter().unzip();
        Ok(Self {
            vertices,
            tets,
            boundary_faces,
            boundary_owner,
            face_labels: vec![None; n],
            locator: OnceLock::new(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_points(&self, t: usize) -> [Point3; 4] {
        self.tets[t].map(|i| self.vertices[i])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let p = self.tet_points(t);
        geom::tet_signed_volume(p[0], p[1], p[2], p[3])
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn bbox(&self) -> Aabb<f64> {
        Aabb::from_points(self.vertices.iter().copied())
    }

    pub fn face_points(&self, f: usize) -> [Point3; 3] {
        self.boundary_faces[f].map(|i| self.vertices[i])
    }

    /// Area-weighted outward normal of boundary face `f`.
    pub fn face_area_normal(&self, f: usize) -> Point3 {
        let p = self.face_points(f);
        geom::triangle_area_normal(p[0], p[1], p[2])
    }

    pub fn face_normal(&self, f: usize) -> Point3 {
        self.face_area_normal(f).normalize()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_area_normal(f).norm()
    }

    pub fn face_centroid(&self, f: usize) -> Point3 {
        let p = self.face_points(f);
        (p[0] + p[1] + p[2]) * (1.0 / 3.0)
    }

    pub fn boundary_area(&self) -> f64 {
        (0..self.boundary_faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Index of the boundary face with the given vertex set.
    pub fn find_boundary_face(&self, verts: [usize; 3]) -> Option<usize> {
        let key = sorted3(verts);
        self.boundary_faces
            .binary_search_by(|f| sorted3(*f).cmp(&key))
            .ok()
    }

    /// Boundary faces incident to each vertex.
    pub fn vertex_boundary_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (f, tri) in self.boundary_faces.iter().enumerate() {
            for &v in tri {
                out[v].push(f);
            }
        }
        out
    }

    /// Map from sorted boundary edge to its two incident boundary faces.
    pub fn boundary_edge_faces(&self) -> HashMap<[usize; 2], Vec<usize>> {
        let mut m: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for (f, tri) in self.boundary_faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                m.entry([a.min(b), a.max(b)]).or_default().push(f);
            }
        }
        m
    }

    /// Largest circumscribed-sphere diameter over all tetrahedra.
    pub fn mesh_size(&self) -> f64 {
        (0..self.tets.len())
            .map(|t| 2.0 * circumradius(&self.tet_points(t)))
            .fold(0.0, f64::max)
    }

    pub fn locator(&self) -> &PointLocator {
        self.locator.get_or_init(|| Arc::new(PointLocator::new(self)))
    }

    /// Lowest-index tetrahedron containing `q`, or `None` (outside).
    pub fn locate(&self, q: Point3) -> Option<usize> {
        self.locator().locate(self, q)
    }

    /// Like [`locate`](Self::locate) but also returns barycentric coordinates.
    pub fn locate_with_barycentric(&self, q: Point3) -> Option<(usize, [f64; 4])> {
        let t = self.locate(q)?;
        Some((t, geom::tet_barycentric(&self.tet_points(t), q).expect("non-degenerate tet")))
    }

    pub fn contains(&self, q: Point3) -> bool {
        self.locate(q).is_some()
    }

    /// Brute-force point location used as an oracle.
    pub fn locate_brute_force(&self, q: Point3) -> Option<usize> {
        (0..self.tets.len()).find(|&t| {
            geom::tet_barycentric(&self.tet_points(t), q)
                .map(|l| l.iter().all(|&x| x >= -LOCATE_TOL))
                .unwrap_or(false)
        })
    }

    /// Distance from `q` to the boundary surface.
    pub fn boundary_distance(&self, q: Point3) -> f64 {
        self.locator().boundary_distance(self, q)
    }

    /// Signed distance to the boundary, positive inside.
    pub fn signed_distance(&self, q: Point3) -> f64 {
        let d = self.boundary_distance(q);
        if self.contains(q) {
            d
        } else {
            -d
        }
    }

    pub fn with_labels(mut self, labels: Vec<Option<i64>>) -> Self {
        assert_eq!(labels.len(), self.boundary_faces.len());
        self.face_labels = labels;
        self
    }
}

/// Circumradius of a tetrahedron.
pub fn circumradius(p: &[Point3; 4]) -> f64 {
    let a = p[1] - p[0];
    let b = p[2] - p[0];
    let c = p[3] - p[0];
    let num = b.cross(c) * a.norm_squared() + c.cross(a) * b.norm_squared() + a.cross(b) * c.norm_squared();
    let den = 2.0 * a.dot(b.cross(c));
    (num * (1.0 / den)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_tet_has_four_outward_faces() {
        let m = single_tet();
        assert_eq!(m.boundary_faces.len(), 4);
        let c = Point3::new(0.25, 0.25, 0.25);
        for f in 0..4 {
            assert!(m.face_normal(f).dot(m.face_centroid(f) - c) > 0.0);
        }
    }

    #[test]
    fn box_mesh_closed_surface() {
        let m = box_mesh(2, 3, 1);
        let s: Point3 = (0..m.boundary_faces.len()).map(|f| m.face_area_normal(f)).sum();
        assert!(s.norm() < 1e-12);
        assert!((m.volume() - 1.0).abs() < 1e-14);
        assert!((m.boundary_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn reorients_negative_tets() {
        let v = vec![
            Point3::new(0., 0., 0.),
            Point3::new(0., 1., 0.),
            Point3::new(1., 0., 0.),
            Point3::new(0., 0., 1.),
        ];
        let m = TetMesh::new(v.clone(), vec![[0, 1, 2, 3]]).unwrap();
        assert!(m.tet_volume(0) > 0.0);
        assert!(TetMesh::new_strict(v, vec![[0, 1, 2, 3]]).is_err());
    }

    #[test]
    fn degenerate_tet_rejected() {
        let v = vec![
            Point3::new(0., 0., 0.),
            Point3::new(1., 0., 0.),
            Point3::new(0., 1., 0.),
            Point3::new(1., 1., 0.),
        ];
        assert!(matches!(TetMesh::new(v, vec![[0, 1, 2, 3]]), Err(Error::DegenerateTet { .. })));
    }

    #[test]
    fn point_location_examples() {
        let m = box_mesh(1, 1, 1);
        let (t, l) = m.locate_with_barycentric(Point3::new(0.5, 0.5, 0.5)).unwrap();
        assert!(t < 6);
        assert!(l.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
        assert_eq!(m.locate(Point3::new(2.0, 0.0, 0.0)), None);
    }

    #[test]
    fn shared_face_tie_break_is_lowest_index() {
        let m = box_mesh(1, 1, 1);
        // find an interior face and a point on it
        let mut seen: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
        for (t, tet) in m.tets.iter().enumerate() {
            for lf in TET_FACES {
                seen.entry(sorted3([tet[lf[0]], tet[lf[1]], tet[lf[2]]])).or_default().push(t);
            }
        }
        let mut checked = 0;
        for (f, owners) in seen {
            if owners.len() == 2 {
                let c = (m.vertices[f[0]] + m.vertices[f[1]] + m.vertices[f[2]]) * (1.0 / 3.0);
                assert_eq!(m.locate(c), Some(owners[0].min(owners[1])));
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn circumradius_of_cube_corner_tet() {
        let m = box_mesh(1, 1, 1);
        assert!((m.mesh_size() - 3f64.sqrt()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn locator_matches_brute_force(x in -0.2f64..1.2, y in -0.2f64..1.2, z in -0.2f64..1.2) {
            let m = box_mesh(2, 2, 2);
            let q = Point3::new(x, y, z);
            prop_assert_eq!(m.locate(q), m.locate_brute_force(q));
        }
    }
}
