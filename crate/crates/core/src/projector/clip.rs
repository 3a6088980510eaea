//! Clipping of oriented simplices against half-spaces.
//!
//! A half-space is the side `plane.eval(x) <= 0`. Pieces keep the
//! orientation of the simplex they were cut from, so integrals of forms
//! over the pieces add up to the integral over the whole simplex.

use smallvec::SmallVec;

use crate::geom::{self, Plane, Vec3};
use crate::scalar::Real;

/// Vertex loop of one face; a tet cut by four planes stays within this.
pub type Polygon<T> = SmallVec<[Vec3<T>; 8]>;

/// An oriented simplex of dimension 0 to 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Simplex<T> {
    Point(Vec3<T>),
    Segment([Vec3<T>; 2]),
    Triangle([Vec3<T>; 3]),
    Tet([Vec3<T>; 4]),
}

impl<T: Real> Simplex<T> {
    pub fn vertices(&self) -> &[Vec3<T>] {
        match self {
            Simplex::Point(p) => std::slice::from_ref(p),
            Simplex::Segment(v) => v,
            Simplex::Triangle(v) => v,
            Simplex::Tet(v) => v,
        }
    }

    pub fn map(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        match self {
            Simplex::Point(p) => Simplex::Point(f(*p)),
            Simplex::Segment(v) => Simplex::Segment(v.map(f)),
            Simplex::Triangle(v) => Simplex::Triangle(v.map(f)),
            Simplex::Tet(v) => Simplex::Tet(v.map(f)),
        }
    }

    pub fn centroid(&self) -> Vec3<T> {
        let v = self.vertices();
        let mut c = Vec3::zero();
        for &p in v {
            c += p;
        }
        c * (T::one() / T::lit(v.len() as f64))
    }

    /// Length, area or volume with orientation sign (volume only).
    pub fn measure(&self) -> T {
        match self {
            Simplex::Point(_) => T::one(),
            Simplex::Segment([a, b]) => (*b - *a).norm(),
            Simplex::Triangle([a, b, c]) => geom::triangle_area(*a, *b, *c),
            Simplex::Tet([a, b, c, d]) => geom::tet_signed_volume(*a, *b, *c, *d),
        }
    }
}

/// Sutherland-Hodgman step; keeps vertex order.
pub fn clip_polygon<T: Real>(poly: &[Vec3<T>], plane: &Plane<T>) -> Vec<Vec3<T>> {
    let eps = snap_tolerance(plane, poly.iter().copied());
    let ev: SmallVec<[T; 8]> = poly.iter().map(|&p| snapped(plane, p, eps)).collect();
    clip_polygon_with(poly, &ev).0.into_vec()
}

/// Evaluations of `plane` with magnitude below this are treated as zero.
fn snap_tolerance<T: Real>(plane: &Plane<T>, pts: impl Iterator<Item = Vec3<T>>) -> T {
    let scale = pts.fold(T::zero(), |m, p| m.max(p.max_abs())) + T::one();
    T::lit(1e-13) * plane.normal.norm() * scale
}

fn snapped<T: Real>(plane: &Plane<T>, p: Vec3<T>, eps: T) -> T {
    let e = plane.eval(p);
    if e.abs() <= eps {
        T::zero()
    } else {
        e
    }
}

/// Clip with precomputed vertex evaluations; also returns the flags of
/// output vertices lying on the plane.
fn clip_polygon_with<T: Real>(poly: &[Vec3<T>], ev: &[T]) -> (Polygon<T>, SmallVec<[bool; 8]>) {
    let n = poly.len();
    let mut out = Polygon::new();
    let mut on = SmallVec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let (p, q) = (poly[i], poly[j]);
        let (dp, dq) = (ev[i], ev[j]);
        if dp <= T::zero() {
            out.push(p);
            on.push(dp == T::zero());
        }
        if (dp < T::zero() && dq > T::zero()) || (dp > T::zero() && dq < T::zero()) {
            out.push(p.lerp(q, dp / (dp - dq)));
            on.push(true);
        }
    }
    (out, on)
}

/// Convex polyhedron as outward-oriented polygonal faces.
#[derive(Clone, Debug)]
pub struct Polyhedron<T> {
    pub faces: SmallVec<[Polygon<T>; 8]>,
}

impl<T: Real> Polyhedron<T> {
    /// Positively oriented tetrahedron (faces outward).
    pub fn from_tet(v: [Vec3<T>; 4]) -> Self {
        let v = if geom::tet_signed_volume(v[0], v[1], v[2], v[3]) < T::zero() { [v[1], v[0], v[2], v[3]] } else { v };
        Self {
            faces: crate::mesh::TET_FACES.iter().map(|f| f.iter().map(|&i| v[i]).collect()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        self.faces.iter().flatten().copied()
    }

    /// Mirror image across `x_axis = at`, with faces kept outward.
    pub fn reflect(&self, axis: usize, at: T) -> Self {
        let faces = self
            .faces
            .iter()
            .map(|f| {
                f.iter()
                    .rev()
                    .map(|&p| {
                        let mut q = p;
                        q[axis] = at + at - p[axis];
                        q
                    })
                    .collect()
            })
            .collect();
        Self { faces }
    }

    pub fn clip(&self, plane: &Plane<T>) -> Self {
        let eps = snap_tolerance(plane, self.faces.iter().flatten().copied());
        let evals: SmallVec<[SmallVec<[T; 8]>; 8]> =
            self.faces.iter().map(|f| f.iter().map(|&p| snapped(plane, p, eps)).collect()).collect();
        let all = || evals.iter().flatten();
        // a face lying in the plane must not be doubled by the cap
        if !all().any(|&e| e > T::zero()) {
            return self.clone();
        }
        if !all().any(|&e| e < T::zero()) {
            return Self { faces: SmallVec::new() };
        }
        let mut faces = SmallVec::new();
        let mut cut: SmallVec<[Vec3<T>; 16]> = SmallVec::new();
        for (f, ev) in self.faces.iter().zip(&evals) {
            let (c, on) = clip_polygon_with(f, ev);
            cut.extend(c.iter().zip(&on).filter(|(_, &o)| o).map(|(p, _)| *p));
            if c.len() >= 3 {
                faces.push(c);
            }
        }
        if let Some(cap) = cap_polygon(&cut, plane.normal) {
            faces.push(cap);
        }
        Self { faces }
    }

    pub fn volume(&self) -> T {
        let Some(o) = self.faces.first().and_then(|f| f.first()).copied() else {
            return T::zero();
        };
        let mut v = T::zero();
        for f in &self.faces {
            for k in 1..f.len().saturating_sub(1) {
                v += geom::tet_signed_volume(o, f[0], f[k], f[k + 1]);
            }
        }
        v
    }

    /// Positively oriented tetrahedra filling the polyhedron.
    pub fn tets(&self) -> Vec<[Vec3<T>; 4]> {
        let mut out = Vec::new();
        let Some(o) = self.faces.first().and_then(|f| f.first()).copied() else {
            return out;
        };
        for f in &self.faces {
            for k in 1..f.len().saturating_sub(1) {
                let t = [o, f[0], f[k], f[k + 1]];
                if geom::tet_signed_volume(t[0], t[1], t[2], t[3]) > T::zero() {
                    out.push(t);
                }
            }
        }
        out
    }
}

/// Convex polygon through `pts` (all on one plane), oriented along `normal`.
fn cap_polygon<T: Real>(pts: &[Vec3<T>], normal: Vec3<T>) -> Option<Polygon<T>> {
    let mut uniq: Polygon<T> = Polygon::new();
    let scale = pts.iter().fold(T::zero(), |m, p| m.max(p.max_abs())) + T::one();
    for &p in pts {
        if !uniq.iter().any(|q| (*q - p).max_abs() <= T::lit(1e-13) * scale) {
            uniq.push(p);
        }
    }
    if uniq.len() < 3 {
        return None;
    }
    let mut c = Vec3::zero();
    for &p in &uniq {
        c += p;
    }
    c = c * (T::one() / T::lit(uniq.len() as f64));
    let e1 = normal.any_orthonormal();
    let e2 = normal.cross(e1);
    uniq.sort_by(|a, b| {
        let (da, db) = (*a - c, *b - c);
        let ta = da.dot(e2).atan2(da.dot(e1));
        let tb = db.dot(e2).atan2(db.dot(e1));
        ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal)
    });
    Some(uniq)
}

/// Part of `s` inside every half-space in `planes`, as oriented simplices.
pub fn clip_simplex<T: Real>(s: &Simplex<T>, planes: &[Plane<T>]) -> Vec<Simplex<T>> {
    match s {
        Simplex::Point(p) => {
            if planes.iter().all(|pl| pl.eval(*p) <= T::zero()) {
                vec![*s]
            } else {
                vec![]
            }
        }
        Simplex::Segment([a, b]) => {
            let (mut lo, mut hi) = (T::zero(), T::one());
            for pl in planes {
                let (da, db) = (pl.eval(*a), pl.eval(*b));
                if da > T::zero() && db > T::zero() {
                    return vec![];
                }
                if da > T::zero() {
                    lo = lo.max(da / (da - db));
                } else if db > T::zero() {
                    hi = hi.min(da / (da - db));
                }
            }
            if hi > lo {
                vec![Simplex::Segment([a.lerp(*b, lo), a.lerp(*b, hi)])]
            } else {
                vec![]
            }
        }
        Simplex::Triangle(v) => {
            let mut poly = v.to_vec();
            for pl in planes {
                poly = clip_polygon(&poly, pl);
                if poly.len() < 3 {
                    return vec![];
                }
            }
            (1..poly.len() - 1).map(|k| Simplex::Triangle([poly[0], poly[k], poly[k + 1]])).collect()
        }
        Simplex::Tet(v) => {
            let negative = geom::tet_signed_volume(v[0], v[1], v[2], v[3]) < T::zero();
            let mut poly = Polyhedron::from_tet(*v);
            for pl in planes {
                poly = poly.clip(pl);
                if poly.is_empty() {
                    return vec![];
                }
            }
            poly.tets()
                .into_iter()
                .map(|t| Simplex::Tet(if negative { [t[1], t[0], t[2], t[3]] } else { t }))
                .collect()
        }
    }
}

/// Signed volume of the part of the tetrahedron `v` inside `planes`.
pub fn clipped_tet_volume<T: Real>(v: [Vec3<T>; 4], planes: &[Plane<T>]) -> T {
    let negative = geom::tet_signed_volume(v[0], v[1], v[2], v[3]) < T::zero();
    let mut poly = Polyhedron::from_tet(v);
    for pl in planes {
        poly = poly.clip(pl);
        if poly.is_empty() {
            return T::zero();
        }
    }
    let vol = poly.volume();
    if negative {
        -vol
    } else {
        vol
    }
}

/// Outward face planes of a tetrahedron (interior is `eval <= 0`).
pub fn tet_planes<T: Real>(v: &[Vec3<T>; 4]) -> [Plane<T>; 4] {
    let pos = geom::tet_signed_volume(v[0], v[1], v[2], v[3]) > T::zero();
    std::array::from_fn(|l| {
        let [i, j, k] = crate::mesh::TET_FACES[l];
        let n = (v[j] - v[i]).cross(v[k] - v[i]);
        let n = if pos { n } else { -n };
        Plane::through(v[i], n)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type P = Vec3<f64>;

    fn unit_tet() -> [P; 4] {
        [P::new(0., 0., 0.), P::new(1., 0., 0.), P::new(0., 1., 0.), P::new(0., 0., 1.)]
    }

    #[test]
    fn halfspace_cuts_tet_volume() {
        // x <= 1/2 keeps 1 - (1/2)^3 of the volume
        let pl = Plane::axis_aligned(0, 0.5);
        let v = clipped_tet_volume(unit_tet(), &[pl]);
        assert!((v - (1.0 - 0.125) / 6.0).abs() < 1e-15);
        let pieces = clip_simplex(&Simplex::Tet(unit_tet()), &[pl]);
        let s: f64 = pieces.iter().map(|p| p.measure()).sum();
        assert!((s - v).abs() < 1e-15);
    }

    #[test]
    fn orientation_is_kept() {
        let t = unit_tet();
        let neg = [t[1], t[0], t[2], t[3]];
        let pl = Plane::axis_aligned(2, 0.3);
        let a = clipped_tet_volume(t, &[pl]);
        let b = clipped_tet_volume(neg, &[pl]);
        assert!((a + b).abs() < 1e-15 && a > 0.0);
        let tri = Simplex::Triangle([P::new(0., 0., 0.), P::new(1., 0., 0.), P::new(0., 1., 0.)]);
        for piece in clip_simplex(&tri, &[Plane::axis_aligned(0, 0.4)]) {
            let Simplex::Triangle([a, b, c]) = piece else { panic!() };
            assert!((b - a).cross(c - a).z > 0.0);
        }
    }

    #[test]
    fn segment_clip() {
        let s = Simplex::Segment([P::new(-1., 0., 0.), P::new(1., 0., 0.)]);
        let out = clip_simplex(&s, &[Plane::axis_aligned(0, 0.25), Plane::new(P::new(-1., 0., 0.), 0.5)]);
        assert_eq!(out, vec![Simplex::Segment([P::new(-0.5, 0., 0.), P::new(0.25, 0., 0.)])]);
        assert!(clip_simplex(&s, &[Plane::axis_aligned(0, -2.0)]).is_empty());
    }

    #[test]
    fn tets_clipped_by_each_other_partition() {
        // the cube [0,1]^3 split into Kuhn tets; a test tet's pieces over the
        // split sum to its clipped volume against the cube
        let m = crate::mesh::box_mesh(1, 1, 1);
        let probe = [P::new(0.2, 0.1, 0.1), P::new(1.3, 0.4, 0.2), P::new(0.3, 0.9, 0.3), P::new(0.4, 0.3, 1.1)];
        let mut sum = 0.0;
        for t in 0..m.num_tets() {
            sum += clipped_tet_volume(probe, &tet_planes(&m.tet_points(t)));
        }
        let cube: Vec<Plane<f64>> = (0..3)
            .flat_map(|k| [Plane::axis_aligned(k, 1.0), Plane::new(-P::axis(k), 0.0)])
            .collect();
        let want = clipped_tet_volume(probe, &cube);
        assert!((sum - want).abs() < 1e-14, "{sum} {want}");
    }

    #[test]
    fn face_on_cutting_plane_is_not_doubled() {
        let t = [P::new(0., 0., 1e-17), P::new(1., 0., -1e-18), P::new(0., 1., 0.), P::new(0.2, 0.2, 0.5)];
        let full = geom::tet_signed_volume(t[0], t[1], t[2], t[3]).abs();
        let keep = clipped_tet_volume(t, &[Plane::new(-P::axis(2), 0.0)]);
        assert!((keep.abs() - full).abs() < 1e-16, "{keep} {full}");
        assert_eq!(clipped_tet_volume(t, &[Plane::axis_aligned(2, 0.0)]), 0.0);
        // a folded piece with a face on y = 1 over the 2x2x2 Kuhn mesh
        let m = crate::mesh::box_mesh(2, 2, 2);
        let piece = [
            P::new(0.05010612088056772, 0.469538411943322, 0.5325801826785423),
            P::new(6.938893903907228e-18, 0.5119024811699929, 0.5265223455504502),
            P::new(-5.473823397915534e-18, 1.0, 0.5536555382723491),
            P::new(-5.551115123125783e-17, 0.5137819249971605, 0.5921168293984563),
        ];
        let sum: f64 = (0..m.num_tets()).map(|k| clipped_tet_volume(piece, &tet_planes(&m.tet_points(k)))).sum();
        let want = geom::tet_signed_volume(piece[0], piece[1], piece[2], piece[3]);
        assert!((sum - want).abs() < 1e-15, "{sum} {want}");
    }

    proptest! {
        #[test]
        fn two_sides_add_up(nx in -1.0..1.0f64, ny in -1.0..1.0f64, nz in 0.1..1.0f64, d in -0.2..0.6f64) {
            let n = P::new(nx, ny, nz);
            let a = Plane::new(n, d);
            let b = Plane::new(-n, -d);
            let t = unit_tet();
            let total = clipped_tet_volume(t, &[a]) + clipped_tet_volume(t, &[b]);
            prop_assert!((total - 1.0 / 6.0).abs() < 1e-14);
            let tri = Simplex::Triangle([t[1], t[2], t[3]]);
            let area: f64 = clip_simplex(&tri, &[a]).iter().chain(clip_simplex(&tri, &[b]).iter()).map(|p| p.measure()).sum();
            prop_assert!((area - tri.measure()).abs() < 1e-14);
        }
    }
}
