//! Quadrature on simplices and cubature on balls.
//!
//! Simplex rules are stored in barycentric form with weights normalized to
//! sum to one, so a rule is applied as `measure * Σ w f(Σ λ_i v_i)`.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

/// Four-point Gauss-Legendre rule on `[0, 1]`; exact for degree 7.
pub fn gauss_segment<T: Real>() -> Vec<(T, T)> {
    const X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let mut out = Vec::with_capacity(4);
    for (x, w) in X.iter().zip(W.iter()) {
        out.push((T::lit(0.5 * (1.0 - x)), T::lit(0.5 * w)));
        out.push((T::lit(0.5 * (1.0 + x)), T::lit(0.5 * w)));
    }
    out
}

/// Six-point symmetric triangle rule (Dunavant), exact for degree 4.
pub fn dunavant6<T: Real>() -> Vec<([T; 3], T)> {
    const A: [f64; 2] = [0.108_103_018_168_070, 0.445_948_490_915_965];
    const B: [f64; 2] = [0.816_847_572_980_459, 0.091_576_213_509_771];
    const WA: f64 = 0.223_381_589_678_011;
    const WB: f64 = 0.109_951_743_655_322;
    let mut out = Vec::with_capacity(6);
    for (p, w) in [(A, WA), (B, WB)] {
        let (a, b) = (T::lit(p[0]), T::lit(p[1]));
        let w = T::lit(w);
        out.push(([a, b, b], w));
        out.push(([b, a, b], w));
        out.push(([b, b, a], w));
    }
    out
}

/// Eleven-point tetrahedron rule (Keast), exact for degree 4.
pub fn keast11<T: Real>() -> Vec<([T; 4], T)> {
    let mut out = Vec::with_capacity(11);
    let q = T::lit(0.25);
    out.push(([q, q, q, q], T::lit(-74.0 / 5625.0 * 6.0)));
    let (a, b) = (T::lit(11.0 / 14.0), T::lit(1.0 / 14.0));
    let w = T::lit(343.0 / 45000.0 * 6.0);
    for k in 0..4 {
        let mut l = [b; 4];
        l[k] = a;
        out.push((l, w));
    }
    let s = (5.0f64 / 14.0).sqrt();
    let (a, b) = (T::lit((1.0 + s) / 4.0), T::lit((1.0 - s) / 4.0));
    let w = T::lit(56.0 / 2250.0 * 6.0);
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut l = [b; 4];
        l[i] = a;
        l[j] = a;
        out.push((l, w));
    }
    out
}

/// Integrate `f` over the segment `[a, b]` (length-weighted).
pub fn integrate_segment<T: Real, R, F>(a: Vec3<T>, b: Vec3<T>, mut f: F) -> R
where
    R: Default + std::ops::AddAssign + std::ops::Mul<T, Output = R>,
    F: FnMut(Vec3<T>) -> R,
{
    let len = (b - a).norm();
    let mut acc = R::default();
    for (s, w) in gauss_segment::<T>() {
        acc += f(a.lerp(b, s)) * (w * len);
    }
    acc
}

/// Cubature rule for the ball `B(center, radius)`.
///
/// `degree <= 1` gives the centre point, `2` a regular tetrahedral
/// four-point rule and `3` the six-point octahedral rule. The weights sum
/// to the ball volume.
pub fn ball_cubature<T: Real>(center: Vec3<T>, radius: T, degree: usize) -> Result<Vec<(Vec3<T>, T)>> {
    let vol = T::lit(4.0 / 3.0) * T::pi() * radius * radius * radius;
    let r = radius * T::lit(0.6).sqrt();
    match degree {
        0 | 1 => Ok(vec![(center, vol)]),
        2 => {
            let s = r / T::lit(3.0).sqrt();
            let w = vol / T::lit(4.0);
            Ok([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
                .iter()
                .map(|d| (center + Vec3::new(T::lit(d[0]), T::lit(d[1]), T::lit(d[2])) * s, w))
                .collect())
        }
        3 => {
            let w = vol / T::lit(6.0);
            let mut out = Vec::with_capacity(6);
            for axis in 0..3 {
                let e = Vec3::<T>::axis(axis) * r;
                out.push((center + e, w));
                out.push((center - e, w));
            }
            Ok(out)
        }
        q => Err(Error::UnsupportedDegree(q)),
    }
}

/// Exact moment `∫_B (y - c)^α dy` for the ball of radius `rho`.
pub fn ball_moment(rho: f64, alpha: [u32; 3]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    // ∫_B x^a y^b z^c = 2 Γ((a+1)/2)Γ((b+1)/2)Γ((c+1)/2) / Γ((a+b+c+3)/2) * ρ^{n+3}/(n+3)
    let n = alpha[0] + alpha[1] + alpha[2];
    let g = |k: u32| gamma_half(k + 1);
    2.0 * g(alpha[0]) * g(alpha[1]) * g(alpha[2]) / gamma_half(n + 3) * rho.powi(n as i32 + 3)
        / (n as f64 + 3.0)
}

/// Γ(m / 2) for positive integer m.
fn gamma_half(m: u32) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut v = if m % 2 == 0 { 1.0 } else { sqrt_pi };
    let mut k = if m % 2 == 0 { 2 } else { 1 };
    while k < m {
        v *= k as f64 / 2.0;
        k += 2;
    }
    v
}
