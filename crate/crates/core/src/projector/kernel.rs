//! Per-ball dual weights and the ball cubature used by the smoothing
//! kernel.

use crate::error::Result;
use crate::geom::{Mat3, Vec3};
use crate::quadrature;
use crate::scalar::Real;

/// Affine dual weight on `B(center, radius)` reproducing point values at
/// `vertex` for affine polynomials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelWeight<T> {
    pub center: Vec3<T>,
    pub radius: T,
    pub vertex: Vec3<T>,
}

/// f(y) = (1/|B|) (1 + (5/ρ²) (y − c)·(a − c)).
pub fn dual_weight<T: Real>(center: Vec3<T>, radius: T, vertex: Vec3<T>) -> KernelWeight<T> {
    KernelWeight { center, radius, vertex }
}

impl<T: Real> KernelWeight<T> {
    pub fn ball_volume(&self) -> T {
        T::lit(4.0 / 3.0) * T::pi() * self.radius.powi(3)
    }

    pub fn eval(&self, y: Vec3<T>) -> T {
        let r2 = self.radius * self.radius;
        (T::one() + T::lit(5.0) / r2 * (y - self.center).dot(self.vertex - self.center)) / self.ball_volume()
    }

    /// Weighted nodes `(y_q, w_q f(y_q))` of the rotated degree-3 rule.
    pub fn weighted_nodes(&self) -> Vec<(Vec3<T>, T)> {
        rotated_ball_rule(self.center, self.radius).into_iter().map(|(y, w)| (y, w * self.eval(y))).collect()
    }
}

/// Fixed rotation applied to the octahedral ball rule so that its nodes
/// avoid the coordinate planes of structured meshes.
pub fn rule_rotation<T: Real>() -> Mat3<T> {
    // unit quaternion (w, x, y, z) ∝ (0.9, 0.23, 0.31, 0.17)
    let q = [0.9f64, 0.23, 0.31, 0.17];
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    let m = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ];
    let row = |r: [f64; 3]| Vec3::new(T::lit(r[0]), T::lit(r[1]), T::lit(r[2]));
    Mat3::from_rows(row(m[0]), row(m[1]), row(m[2]))
}

/// Six-point degree-3 rule on `B(center, radius)`, rotated by
/// [`rule_rotation`].
pub fn rotated_ball_rule<T: Real>(center: Vec3<T>, radius: T) -> Vec<(Vec3<T>, T)> {
    let q = rule_rotation::<T>();
    quadrature::ball_cubature(Vec3::zero(), radius, 3)
        .expect("degree 3 is supported")
        .into_iter()
        .map(|(y, w)| (center + q.mul_vec(y), w))
        .collect()
}

/// Ball rule of the requested exactness degree, validated against the
/// analytic monomial moments of the ball up to that degree.
pub fn validated_ball_cubature(center: Vec3<f64>, radius: f64, degree: usize) -> Result<Vec<(Vec3<f64>, f64)>> {
    let rule = quadrature::ball_cubature(center, radius, degree)?;
    for a in 0..=degree as u32 {
        for b in 0..=degree as u32 - a {
            for c in 0..=degree as u32 - a - b {
                let got: f64 = rule
                    .iter()
                    .map(|(y, w)| {
                        let d = *y - center;
                        w * d.x.powi(a as i32) * d.y.powi(b as i32) * d.z.powi(c as i32)
                    })
                    .sum();
                let want = quadrature::ball_moment(radius, [a, b, c]);
                let scale = radius.powi((a + b + c) as i32 + 3);
                if (got - want).abs() > 1e-12 * scale.max(1e-300) {
                    return Err(crate::Error::Invariant(format!(
                        "ball rule of degree {degree} misses moment {:?}: {got} vs {want}",
                        [a, b, c]
                    )));
                }
            }
        }
    }
    Ok(rule)
}
