//! Lowest-order Whitney forms on a single tetrahedron.

use crate::geom;
use crate::mesh::{TET_EDGES, TET_FACES};
use crate::Point3;

/// Geometry of one tetrahedron with the data needed to evaluate its
/// Whitney basis in global orientation.
#[derive(Clone, Debug)]
pub struct LocalTet {
    pub points: [Point3; 4],
    pub grads: [Point3; 4],
    pub volume: f64,
    /// Sign of each local edge `TET_EDGES[k]` relative to the global
    /// low-to-high orientation.
    pub edge_sign: [f64; 6],
    /// `+1` where the global orientation of the face opposite local vertex
    /// `l` points out of the tetrahedron.
    pub face_sign: [f64; 4],
}

impl LocalTet {
    pub fn new(points: [Point3; 4], vertex_ids: [usize; 4]) -> Self {
        let grads = geom::barycentric_gradients(&points).expect("non-degenerate tetrahedron");
        let volume = geom::tet_signed_volume(points[0], points[1], points[2], points[3]);
        let edge_sign = TET_EDGES.map(|[i, j]| if vertex_ids[i] < vertex_ids[j] { 1.0 } else { -1.0 });
        let face_sign = std::array::from_fn(|l| {
            let mut f = super::face_of(vertex_ids, l);
            f.sort_unstable();
            let pos = |v: usize| vertex_ids.iter().position(|&w| w == v).unwrap();
            let [a, b, c] = f.map(|v| points[pos(v)]);
            if geom::tet_signed_volume(a, b, c, points[l]) < 0.0 {
                1.0
            } else {
                -1.0
            }
        });
        Self { points, grads, volume, edge_sign, face_sign }
    }

    pub fn barycentric(&self, p: Point3) -> [f64; 4] {
        let l: [f64; 3] = [1, 2, 3].map(|i| self.grads[i].dot(p - self.points[0]));
        [1.0 - l[0] - l[1] - l[2], l[0], l[1], l[2]]
    }

    /// Edge basis for local edge `k` at `p`, globally oriented.
    pub fn edge_basis(&self, k: usize, lambda: &[f64; 4]) -> Point3 {
        let [i, j] = TET_EDGES[k];
        (self.grads[j] * lambda[i] - self.grads[i] * lambda[j]) * self.edge_sign[k]
    }

    pub fn edge_curl(&self, k: usize) -> Point3 {
        let [i, j] = TET_EDGES[k];
        self.grads[i].cross(self.grads[j]) * (2.0 * self.edge_sign[k])
    }

    /// Face basis for the face opposite local vertex `l` at `p`.
    pub fn face_basis(&self, l: usize, p: Point3) -> Point3 {
        (p - self.points[l]) * (self.face_sign[l] / (3.0 * self.volume))
    }

    pub fn face_div(&self, l: usize) -> f64 {
        self.face_sign[l] / self.volume
    }

    /// Local vertex triple of the face opposite `l`, as in [`TET_FACES`].
    pub fn face_vertices(l: usize) -> [usize; 3] {
        TET_FACES[l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> LocalTet {
        let p = [
            Point3::new(0.1, 0.0, 0.0),
            Point3::new(1.0, 0.2, 0.0),
            Point3::new(0.0, 1.0, 0.1),
            Point3::new(0.2, 0.1, 0.9),
        ];
        LocalTet::new(p, [4, 1, 7, 2])
    }

    #[test]
    fn edge_basis_has_unit_circulation_on_its_edge() {
        let t = reference();
        for k in 0..6 {
            for (m, &[i, j]) in TET_EDGES.iter().enumerate() {
                let (a, b) = (t.points[i], t.points[j]);
                let mut acc = 0.0;
                for s in [0.2113248654051871, 0.7886751345948129] {
                    let x = a.lerp(b, s);
                    acc += 0.5 * t.edge_basis(k, &t.barycentric(x)).dot(b - a);
                }
                let want = if m == k { t.edge_sign[k] } else { 0.0 };
                assert!((acc - want).abs() < 1e-13, "{k} {m} {acc}");
            }
        }
    }

    #[test]
    fn face_basis_has_unit_outward_flux() {
        let t = reference();
        for l in 0..4 {
            for m in 0..4 {
                let [i, j, k] = TET_FACES[m];
                let (a, b, c) = (t.points[i], t.points[j], t.points[k]);
                let n = (b - a).cross(c - a) * 0.5;
                let flux = t.face_basis(l, (a + b + c) * (1.0 / 3.0)).dot(n);
                let want = if m == l { t.face_sign[l] } else { 0.0 };
                assert!((flux - want).abs() < 1e-13, "{l} {m} {flux}");
            }
        }
    }
}
