//! Small fixed-size linear algebra and simplex geometry.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    /// Unit vector along coordinate axis `axis` (0, 1 or 2).
    pub fn axis(axis: usize) -> Self {
        let mut v = Self::zero();
        v[axis] = T::one();
        v
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Returns `None` for (numerically) zero vectors.
    pub fn try_normalize(self, eps: T) -> Option<Self> {
        let n = self.norm();
        if n <= eps {
            None
        } else {
            Some(self * (T::one() / n))
        }
    }

    pub fn normalize(self) -> Self {
        self * (T::one() / self.norm())
    }

    #[inline]
    pub fn component_mul(self, o: Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn max_abs(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Any unit vector orthogonal to `self` (assumed unit).
    pub fn any_orthonormal(self) -> Self {
        let pick = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Self::axis(0)
        } else if self.y.abs() <= self.z.abs() {
            Self::axis(1)
        } else {
            Self::axis(2)
        };
        (pick - self * self.dot(pick)).normalize()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T> std::ops::IndexMut<usize> for Vec3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> std::iter::Sum for Vec3<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T> {
    pub rows: [Vec3<T>; 3],
}

impl<T: Real> Mat3<T> {
    pub fn zero() -> Self {
        Self { rows: [Vec3::zero(); 3] }
    }

    pub fn identity() -> Self {
        Self { rows: [Vec3::axis(0), Vec3::axis(1), Vec3::axis(2)] }
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Self { rows: [r0, r1, r2] }
    }

    pub fn from_cols(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self::from_rows(c0, c1, c2).transpose()
    }

    pub fn diag(d: Vec3<T>) -> Self {
        Self::from_rows(
            Vec3::new(d.x, T::zero(), T::zero()),
            Vec3::new(T::zero(), d.y, T::zero()),
            Vec3::new(T::zero(), T::zero(), d.z),
        )
    }

    /// `a ⊗ b`, i.e. the matrix with entries `a_i b_j`.
    pub fn outer(a: Vec3<T>, b: Vec3<T>) -> Self {
        Self::from_rows(b * a.x, b * a.y, b * a.z)
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn transpose(&self) -> Self {
        Self::from_rows(self.col(0), self.col(1), self.col(2))
    }

    pub fn det(&self) -> T {
        self.rows[0].dot(self.rows[1].cross(self.rows[2]))
    }

    /// Cofactor matrix, `det(A) A^{-T}` (defined also for singular `A`).
    pub fn cofactor(&self) -> Self {
        let [a, b, c] = self.rows;
        Self::from_rows(b.cross(c), c.cross(a), a.cross(b))
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        Some(self.cofactor().transpose().scale(T::one() / d))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_rows(self.rows[0] * s, self.rows[1] * s, self.rows[2] * s)
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let ot = o.transpose();
        Self::from_rows(
            ot.mul_vec(self.rows[0]),
            ot.mul_vec(self.rows[1]),
            ot.mul_vec(self.rows[2]),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_rows(self.rows[0] + o.rows[0], self.rows[1] + o.rows[1], self.rows[2] + o.rows[2])
    }
}

/// Oriented plane `{x : n·x = d}`; `signed_distance > 0` on the side `n` points to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane<T> {
    pub normal: Vec3<T>,
    pub offset: T,
}

impl<T: Real> Plane<T> {
    pub fn new(normal: Vec3<T>, offset: T) -> Self {
        Self { normal, offset }
    }

    pub fn through(point: Vec3<T>, normal: Vec3<T>) -> Self {
        Self { normal, offset: normal.dot(point) }
    }

    /// Axis-aligned plane `x_axis = value`.
    pub fn axis_aligned(axis: usize, value: T) -> Self {
        Self { normal: Vec3::axis(axis), offset: value }
    }

    #[inline]
    pub fn eval(&self, p: Vec3<T>) -> T {
        self.normal.dot(p) - self.offset
    }
}

pub fn tet_signed_volume<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, d: Vec3<T>) -> T {
    (b - a).cross(c - a).dot(d - a) / T::lit(6.0)
}

/// Area-weighted normal `(b - a) × (c - a) / 2`.
pub fn triangle_area_normal<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Vec3<T> {
    (b - a).cross(c - a) * T::lit(0.5)
}

pub fn triangle_area<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    triangle_area_normal(a, b, c).norm()
}

/// Barycentric coordinates of `p` in the tetrahedron `v`.
///
/// Returns `None` if the tetrahedron is degenerate.
pub fn tet_barycentric<T: Real>(v: &[Vec3<T>; 4], p: Vec3<T>) -> Option<[T; 4]> {
    let m = Mat3::from_cols(v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    let inv = m.inverse()?;
    let l = inv.mul_vec(p - v[0]);
    Some([T::one() - l.x - l.y - l.z, l.x, l.y, l.z])
}

/// Gradients of the barycentric coordinate functions of a tetrahedron.
pub fn barycentric_gradients<T: Real>(v: &[Vec3<T>; 4]) -> Option<[Vec3<T>; 4]> {
    let m = Mat3::from_cols(v[1] - v[0], v[2] - v[0], v[3] - v[0]);
    // rows of m^{-1} are the gradients of λ1..λ3
    let inv = m.inverse()?;
    let g1 = inv.rows[0];
    let g2 = inv.rows[1];
    let g3 = inv.rows[2];
    Some([-(g1 + g2 + g3), g1, g2, g3])
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection).
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Vec3<T> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= T::zero() && d2 <= T::zero() {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= T::zero() && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= T::zero() && d1 >= T::zero() && d3 <= T::zero() {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= T::zero() && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= T::zero() && d2 >= T::zero() && d6 <= T::zero() {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= T::zero() && (d4 - d3) >= T::zero() && (d5 - d6) >= T::zero() {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_triangle_distance<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    (closest_point_on_triangle(p, a, b, c) - p).norm()
}

/// Ray/triangle intersection (Möller–Trumbore). Returns the ray parameter
/// of the hit; rays parallel to the triangle plane (within `eps`) miss.
pub fn ray_triangle<T: Real>(
    origin: Vec3<T>,
    dir: Vec3<T>,
    a: Vec3<T>,
    b: Vec3<T>,
    c: Vec3<T>,
    eps: T,
) -> Option<T> {
    let e1 = b - a;
    let e2 = c - a;
    let pv = dir.cross(e2);
    let det = e1.dot(pv);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= eps * scale {
        return None;
    }
    let inv = T::one() / det;
    let tv = origin - a;
    let u = tv.dot(pv) * inv;
    let tol = T::lit(1e-12);
    if u < -tol || u > T::one() + tol {
        return None;
    }
    let qv = tv.cross(e1);
    let v = dir.dot(qv) * inv;
    if v < -tol || u + v > T::one() + tol {
        return None;
    }
    Some(e2.dot(qv) * inv)
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        Self { min: Vec3::splat(T::infinity()), max: Vec3::splat(T::neg_infinity()) }
    }

    pub fn from_points<I: IntoIterator<Item = Vec3<T>>>(pts: I) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: Vec3<T>) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn inflate(&self, r: T) -> Self {
        Self { min: self.min - Vec3::splat(r), max: self.max + Vec3::splat(r) }
    }

    pub fn overlaps(&self, o: &Self) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }

    pub fn contains(&self, p: Vec3<T>, tol: T) -> bool {
        p.x >= self.min.x - tol
            && p.x <= self.max.x + tol
            && p.y >= self.min.y - tol
            && p.y <= self.max.y + tol
            && p.z >= self.min.z - tol
            && p.z <= self.max.z + tol
    }

    pub fn diagonal(&self) -> T {
        (self.max - self.min).norm()
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn distance(&self, p: Vec3<T>) -> T {
        let d = (self.min - p).max(p - self.max).max(Vec3::zero());
        d.norm()
    }
}
