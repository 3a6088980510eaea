//! Extensions of finite element functions beyond the mesh.
//!
//! Balls at Γ₂ vertices stick out of Ω, so the smoothing needs the basis
//! functions on a neighbourhood of Ω̄. On an axis-aligned box whose Γ is a
//! union of whole sides, functions are folded (reflected) across Γ₂ sides
//! and set to zero beyond Γ sides. Reflection is a pullback, so it commutes
//! with grad, curl and div; the zero part commutes on functions with
//! vanishing trace on Γ. Other meshes fall back to the plain zero
//! extension, which does not commute across Γ₂.

use serde::{Deserialize, Serialize};

use crate::fe::{Space, Value};
use crate::geom::{Aabb, Plane};
use crate::mesh::{Dissection, TetMesh};
use crate::projector::clip::{clip_polygon, clip_simplex, Polyhedron, Simplex};
use crate::Point3;

const SIDE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Extension {
    /// Reflect across the sides of `[lo, hi]`; zero beyond sides flagged in
    /// `zero[axis][side]` (side 0 is `lo`).
    BoxFold { lo: Point3, hi: Point3, zero: [[bool; 2]; 3] },
    /// Zero outside the mesh.
    Zero,
}

impl Extension {
    /// Fold extension when `mesh` fills its bounding box and Γ is a union of
    /// whole box sides; the zero extension otherwise.
    pub fn for_dissection(mesh: &TetMesh, dissection: &Dissection) -> Self {
        Self::box_fold(mesh, Some(dissection)).unwrap_or(Extension::Zero)
    }

    /// Fold across every side (no boundary condition anywhere).
    pub fn fold_all(mesh: &TetMesh) -> Option<Self> {
        Self::box_fold(mesh, None)
    }

    fn box_fold(mesh: &TetMesh, dissection: Option<&Dissection>) -> Option<Self> {
        let b = mesh.bbox();
        let box_vol = (0..3).map(|k| b.max[k] - b.min[k]).product::<f64>();
        if (mesh.volume() - box_vol).abs() > 1e-10 * box_vol {
            return None;
        }
        let tol = SIDE_TOL * b.diagonal();
        // per side: (has Γ faces, has Γ₂ faces)
        let mut seen = [[(false, false); 2]; 3];
        for (f, tri) in mesh.boundary_faces.iter().enumerate() {
            let side = (0..3).find_map(|k| {
                [b.min[k], b.max[k]]
                    .iter()
                    .position(|&v| tri.iter().all(|&i| (mesh.vertices[i][k] - v).abs() <= tol))
                    .map(|s| (k, s))
            })?;
            let g = dissection.map(|d| d.in_gamma[f]).unwrap_or(false);
            let e = &mut seen[side.0][side.1];
            if g {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
        if seen.iter().flatten().any(|&(g, o)| g && o) {
            return None;
        }
        Some(Extension::BoxFold { lo: b.min, hi: b.max, zero: seen.map(|a| a.map(|(g, _)| g)) })
    }

    pub fn commutes(&self) -> bool {
        matches!(self, Extension::BoxFold { .. })
    }

    /// Folded image of `p` and the per-axis reflection signs, or `None`
    /// where the extension vanishes.
    pub fn map_point(&self, p: Point3) -> Option<(Point3, [f64; 3])> {
        match self {
            Extension::Zero => Some((p, [1.0; 3])),
            Extension::BoxFold { lo, hi, zero } => {
                let mut q = p;
                let mut s = [1.0; 3];
                for k in 0..3 {
                    if p[k] < lo[k] {
                        if zero[k][0] {
                            return None;
                        }
                        q[k] = 2.0 * lo[k] - p[k];
                        s[k] = -1.0;
                    } else if p[k] > hi[k] {
                        if zero[k][1] {
                            return None;
                        }
                        q[k] = 2.0 * hi[k] - p[k];
                        s[k] = -1.0;
                    }
                }
                Some((q, s))
            }
        }
    }

    /// Value at `p` of the extension of a form of type `space` whose values
    /// on the mesh are given by `eval` (`None` outside the mesh).
    pub fn pullback(&self, space: Space, p: Point3, eval: impl Fn(Point3) -> Option<Value>) -> Option<Value> {
        let (q, s) = self.map_point(p)?;
        let det = s[0] * s[1] * s[2];
        let v = eval(q)?;
        Some(match (space, v) {
            (Space::G, v) => v,
            (Space::C, Value::Vector(w)) => Value::Vector(Point3::new(s[0] * w.x, s[1] * w.y, s[2] * w.z)),
            (Space::D, Value::Vector(w)) => Value::Vector(Point3::new(s[0] * w.x, s[1] * w.y, s[2] * w.z) * det),
            (Space::O, Value::Scalar(z)) => Value::Scalar(det * z),
            (_, v) => v,
        })
    }

    /// Pieces of the folded simplex, each carrying the pulled-back
    /// orientation; integrating a form over them integrates its extension
    /// over `s`.
    pub fn pieces(&self, s: &Simplex<f64>) -> Vec<Simplex<f64>> {
        let Extension::BoxFold { lo, hi, zero } = self else {
            return vec![*s];
        };
        let bb = Aabb::from_points(s.vertices().iter().copied());
        let mut cur = vec![*s];
        for k in 0..3 {
            let below = bb.min[k] < lo[k];
            let above = bb.max[k] > hi[k];
            if !below && !above {
                continue;
            }
            let e = crate::geom::Vec3::axis(k);
            let mut next = Vec::with_capacity(cur.len() * 2);
            for piece in &cur {
                // lo <= x_k <= hi
                next.extend(clip_simplex(piece, &[Plane::new(e, hi[k]), Plane::new(-e, -lo[k])]));
                if below && !zero[k][0] {
                    for p in clip_simplex(piece, &[Plane::new(e, lo[k])]) {
                        next.push(p.map(|mut v| {
                            v[k] = 2.0 * lo[k] - v[k];
                            v
                        }));
                    }
                }
                if above && !zero[k][1] {
                    for p in clip_simplex(piece, &[Plane::new(-e, -hi[k])]) {
                        next.push(p.map(|mut v| {
                            v[k] = 2.0 * hi[k] - v[k];
                            v
                        }));
                    }
                }
            }
            cur = next;
        }
        cur
    }
}

impl Extension {
    /// Polygonal pieces of the folded triangle `v`; vertex order is carried
    /// through the reflections, which flips the normal as a pullback does.
    pub fn triangle_pieces(&self, v: [Point3; 3]) -> Vec<Vec<Point3>> {
        let Extension::BoxFold { lo, hi, zero } = self else {
            return vec![v.to_vec()];
        };
        let bb = Aabb::from_points(v.iter().copied());
        let mut cur = vec![v.to_vec()];
        for k in 0..3 {
            let below = bb.min[k] < lo[k];
            let above = bb.max[k] > hi[k];
            if !below && !above {
                continue;
            }
            let e = crate::geom::Vec3::axis(k);
            let keep = |p: Vec<Point3>| (p.len() >= 3).then_some(p);
            let mirror = |p: Vec<Point3>, at: f64| {
                p.into_iter()
                    .map(|mut q| {
                        q[k] = 2.0 * at - q[k];
                        q
                    })
                    .collect::<Vec<_>>()
            };
            let mut next = Vec::with_capacity(cur.len() * 2);
            for poly in &cur {
                next.extend(keep(clip_polygon(&clip_polygon(poly, &Plane::new(e, hi[k])), &Plane::new(-e, -lo[k]))));
                if below && !zero[k][0] {
                    next.extend(keep(clip_polygon(poly, &Plane::new(e, lo[k]))).map(|p| mirror(p, lo[k])));
                }
                if above && !zero[k][1] {
                    next.extend(keep(clip_polygon(poly, &Plane::new(-e, -hi[k]))).map(|p| mirror(p, hi[k])));
                }
            }
            cur = next;
        }
        cur
    }

    /// Polyhedral pieces of the folded tetrahedron `v` with the sign its
    /// orientation and reflections give to a density.
    pub fn tet_pieces(&self, v: [Point3; 4]) -> Vec<(Polyhedron<f64>, f64)> {
        let sign = crate::geom::tet_signed_volume(v[0], v[1], v[2], v[3]).signum();
        let start = Polyhedron::from_tet(v);
        let Extension::BoxFold { lo, hi, zero } = self else {
            return vec![(start, sign)];
        };
        let bb = Aabb::from_points(v.iter().copied());
        let mut cur = vec![(start, sign)];
        for k in 0..3 {
            let below = bb.min[k] < lo[k];
            let above = bb.max[k] > hi[k];
            if !below && !above {
                continue;
            }
            let e = crate::geom::Vec3::axis(k);
            let mut next = Vec::with_capacity(cur.len() * 2);
            for (poly, s) in &cur {
                let inner = poly.clip(&Plane::new(e, hi[k])).clip(&Plane::new(-e, -lo[k]));
                if !inner.is_empty() {
                    next.push((inner, *s));
                }
                if below && !zero[k][0] {
                    let p = poly.clip(&Plane::new(e, lo[k]));
                    if !p.is_empty() {
                        next.push((p.reflect(k, lo[k]), -s));
                    }
                }
                if above && !zero[k][1] {
                    let p = poly.clip(&Plane::new(-e, -hi[k]));
                    if !p.is_empty() {
                        next.push((p.reflect(k, hi[k]), -s));
                    }
                }
            }
            cur = next;
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, dissect_boundary, lshape_mesh, select_faces, FacePredicate};

    fn top(mesh: &TetMesh) -> Dissection {
        dissect_boundary(mesh, &select_faces(mesh, &FacePredicate::parse("z==1").unwrap())).unwrap()
    }

    #[test]
    fn detects_box_with_top_gamma() {
        let m = box_mesh(2, 2, 2);
        let e = Extension::for_dissection(&m, &top(&m));
        let Extension::BoxFold { zero, .. } = e else { panic!("{e:?}") };
        assert_eq!(zero, [[false, false], [false, false], [false, true]]);
        let l = lshape_mesh(2);
        let d = dissect_boundary(&l, &select_faces(&l, &FacePredicate::parse("z==1").unwrap())).unwrap();
        assert_eq!(Extension::for_dissection(&l, &d), Extension::Zero);
    }

    #[test]
    fn partial_side_falls_back_to_zero() {
        let m = box_mesh(2, 2, 2);
        let faces = select_faces(&m, &FacePredicate::parse("z==1 & x<=0.5").unwrap());
        let d = dissect_boundary(&m, &faces).unwrap();
        assert_eq!(Extension::for_dissection(&m, &d), Extension::Zero);
    }

    #[test]
    fn folded_segment_keeps_length_and_lands_inside() {
        let m = box_mesh(1, 1, 1);
        let e = Extension::for_dissection(&m, &top(&m));
        let s = Simplex::Segment([Point3::new(-0.2, 0.5, 0.9), Point3::new(0.3, 0.5, 1.2)]);
        let pieces = e.pieces(&s);
        let len: f64 = pieces.iter().map(|p| p.measure()).sum();
        // the part above z = 1 is dropped
        let full = (s.vertices()[1] - s.vertices()[0]).norm();
        assert!((len - full * (0.1 / 0.3)).abs() < 1e-14, "{len}");
        for p in &pieces {
            for v in p.vertices() {
                assert!(v.x >= -1e-15 && v.z <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn folded_tet_volume_changes_sign_per_reflection() {
        let m = box_mesh(1, 1, 1);
        let e = Extension::fold_all(&m).unwrap();
        let shift = Point3::new(-0.5, -0.5, 0.2);
        let t = [Point3::new(0.1, 0.1, 0.1), Point3::new(0.3, 0.1, 0.1), Point3::new(0.1, 0.3, 0.1), Point3::new(0.1, 0.1, 0.3)]
            .map(|p| p + shift);
        // fully in the x<0, y<0 octant: two reflections keep orientation
        let v: f64 = e.pieces(&Simplex::Tet(t)).iter().map(|p| p.measure()).sum();
        let v0 = Simplex::Tet(t).measure();
        assert!((v - v0).abs() < 1e-15);
        let t1 = t.map(|p| p + Point3::new(0.5, 0.0, 0.0));
        let v1: f64 = e.pieces(&Simplex::Tet(t1)).iter().map(|p| p.measure()).sum();
        assert!(v1 < 0.0 && (v1 + v0).abs() < 1e-15);
    }
}
