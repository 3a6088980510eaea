use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TetMesh;

/// Angular threshold (radians) for tangent jumps along Π.
pub const KINK_TOL: f64 = 1e-6;

/// Partition of the boundary into Γ, the interface Π and Γ₂.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dissection {
    /// Boundary faces forming Γ (sorted).
    pub gamma_faces: Vec<usize>,
    /// Remaining boundary faces (sorted).
    pub gamma2_faces: Vec<usize>,
    /// Closed loops of Π as vertex cycles (first vertex not repeated), oriented
    /// along the boundary orientation of Γ.
    pub pi_chains: Vec<Vec<usize>>,
    /// Π edges as sorted vertex pairs (sorted).
    pub pi_edges: Vec<[usize; 2]>,
    /// Vertices of Π where the tangent jumps (sorted).
    pub exceptional_points: Vec<usize>,
    /// Per boundary face: part of Γ.
    pub in_gamma: Vec<bool>,
}

/// Split the boundary of `mesh` into Γ (the given faces), Π and Γ₂.
pub fn dissect_boundary(mesh: &TetMesh, gamma_labels: &[usize]) -> Result<Dissection> {
    let nf = mesh.boundary_faces.len();
    let gamma: BTreeSet<usize> = gamma_labels.iter().copied().collect();
    if gamma.is_empty() {
        return Err(Error::Dissection("Γ is empty".into()));
    }
    if let Some(&bad) = gamma.iter().find(|&&f| f >= nf) {
        return Err(Error::Dissection(format!("face {bad} is not a boundary face")));
    }
    if gamma.len() == nf {
        return Err(Error::Dissection("Γ covers the whole boundary; Γ₂ must be nonempty".into()));
    }
    let in_gamma: Vec<bool> = (0..nf).map(|f| gamma.contains(&f)).collect();
    // directed Π edges, oriented as in the Γ face cycle
    let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut pi_edges = Vec::new();
    let edge_faces = mesh.boundary_edge_faces();
    let mut keys: Vec<&[usize; 2]> = edge_faces.keys().collect();
    keys.sort_unstable();
    for e in keys {
        let faces = &edge_faces[e];
        let ng = faces.iter().filter(|&&f| in_gamma[f]).count();
        if ng != 1 {
            continue;
        }
        let gf = *faces.iter().find(|&&f| in_gamma[f]).unwrap();
        let tri = mesh.boundary_faces[gf];
        let (a, b) = (0..3)
            .map(|k| (tri[k], tri[(k + 1) % 3]))
            .find(|&(a, b)| [a.min(b), a.max(b)] == *e)
            .unwrap();
        next.entry(a).or_default().push(b);
        pi_edges.push(*e);
    }
    if pi_edges.is_empty() {
        return Err(Error::Dissection("Γ has no boundary curve Π".into()));
    }
    let mut indeg: HashMap<usize, usize> = HashMap::new();
    for outs in next.values() {
        for &b in outs {
            *indeg.entry(b).or_default() += 1;
        }
    }
    for (&v, outs) in &next {
        if outs.len() != 1 || indeg.get(&v).copied().unwrap_or(0) != 1 {
            return Err(Error::Dissection(format!(
                "Π is not a union of simple closed loops at vertex {v}"
            )));
        }
    }
    if indeg.keys().any(|v| !next.contains_key(v)) {
        return Err(Error::Dissection("Π has a dangling edge".into()));
    }
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    let mut chains = Vec::new();
    for &start in next.keys() {
        if visited.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start);
        let mut cur = next[&start][0];
        while cur != start {
            if !visited.insert(cur) {
                return Err(Error::Dissection("Π loop revisits a vertex".into()));
            }
            chain.push(cur);
            cur = *next
                .get(&cur)
                .and_then(|v| v.first())
                .ok_or_else(|| Error::Dissection("Π has a dangling edge".into()))?;
        }
        chains.push(chain);
    }
    let mut exceptional = Vec::new();
    for chain in &chains {
        let n = chain.len();
        for i in 0..n {
            let u = mesh.vertices[chain[(i + n - 1) % n]];
            let v = mesh.vertices[chain[i]];
            let w = mesh.vertices[chain[(i + 1) % n]];
            let t0 = (v - u).normalize();
            let t1 = (w - v).normalize();
            let angle = t0.cross(t1).norm().atan2(t0.dot(t1));
            if angle > KINK_TOL {
                exceptional.push(chain[i]);
            }
        }
    }
    exceptional.sort_unstable();
    pi_edges.sort_unstable();
    Ok(Dissection {
        gamma_faces: gamma.iter().copied().collect(),
        gamma2_faces: (0..nf).filter(|f| !in_gamma[*f]).collect(),
        pi_chains: chains,
        pi_edges,
        exceptional_points: exceptional,
        in_gamma,
    })
}

impl Dissection {
    /// Sorted vertices of Γ̄ (including Π).
    pub fn gamma_vertices(&self, mesh: &TetMesh) -> Vec<usize> {
        let s: BTreeSet<usize> = self
            .gamma_faces
            .iter()
            .flat_map(|&f| mesh.boundary_faces[f])
            .collect();
        s.into_iter().collect()
    }

    /// Sorted edges (vertex pairs) of Γ̄.
    pub fn gamma_edges(&self, mesh: &TetMesh) -> Vec<[usize; 2]> {
        let mut s = BTreeSet::new();
        for &f in &self.gamma_faces {
            let t = mesh.boundary_faces[f];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                s.insert([a.min(b), a.max(b)]);
            }
        }
        s.into_iter().collect()
    }

    /// Sorted vertices lying on Π.
    pub fn pi_vertices(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.pi_chains.iter().flatten().copied().collect();
        s.into_iter().collect()
    }

    /// Per-vertex flag for membership in Γ̄.
    pub fn gamma_vertex_flags(&self, mesh: &TetMesh) -> Vec<bool> {
        let mut flags = vec![false; mesh.num_vertices()];
        for v in self.gamma_vertices(mesh) {
            flags[v] = true;
        }
        flags
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, select_faces, FacePredicate};

    fn faces(mesh: &TetMesh, expr: &str) -> Vec<usize> {
        select_faces(mesh, &FacePredicate::parse(expr).unwrap())
    }

    #[test]
    fn cube_top_has_one_square_loop() {
        let m = box_mesh(2, 2, 2);
        let d = dissect_boundary(&m, &faces(&m, "z==1")).unwrap();
        assert_eq!(d.pi_chains.len(), 1);
        assert_eq!(d.pi_chains[0].len(), 8);
        assert_eq!(d.exceptional_points.len(), 4);
        assert_eq!(d.pi_edges.len(), 8);
    }

    #[test]
    fn opposite_faces_give_two_loops() {
        let m = box_mesh(1, 1, 1);
        let d = dissect_boundary(&m, &faces(&m, "z==1|z==0")).unwrap();
        assert_eq!(d.pi_chains.len(), 2);
        assert_eq!(d.exceptional_points.len(), 8);
    }

    #[test]
    fn pi_edges_have_one_gamma_and_one_gamma2_face() {
        let m = box_mesh(2, 2, 2);
        let d = dissect_boundary(&m, &faces(&m, "z==1|x==0")).unwrap();
        let ef = m.boundary_edge_faces();
        for e in &d.pi_edges {
            let fs = &ef[e];
            assert_eq!(fs.len(), 2);
            assert_eq!(fs.iter().filter(|&&f| d.in_gamma[f]).count(), 1);
        }
    }

    #[test]
    fn invalid_gammas() {
        let m = box_mesh(1, 1, 1);
        let all: Vec<usize> = (0..m.boundary_faces.len()).collect();
        assert!(matches!(dissect_boundary(&m, &all), Err(Error::Dissection(_))));
        assert!(matches!(dissect_boundary(&m, &[]), Err(Error::Dissection(_))));
    }

    #[test]
    fn pinched_gamma_rejected() {
        // two top triangles of different cells touching at one vertex
        let m = box_mesh(2, 2, 1);
        let top = faces(&m, "z==1");
        let touching: Vec<usize> = top
            .iter()
            .copied()
            .filter(|&f| {
                let c = m.face_centroid(f);
                (c.x < 0.5 && c.y < 0.5) || (c.x > 0.5 && c.y > 0.5)
            })
            .collect();
        assert!(dissect_boundary(&m, &touching).is_err());
    }
}
