//! Deterministic sample generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec3;
use crate::scalar::Real;

/// Seed used by every sampler unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 0x5EED;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// Halton sequence in `[0,1)^D`, skipping the origin.
#[derive(Clone, Debug)]
pub struct Halton<const D: usize> {
    next: u64,
}

impl<const D: usize> Halton<D> {
    pub fn new() -> Self {
        assert!(D <= PRIMES.len());
        Self { next: 1 }
    }

    pub fn starting_at(index: u64) -> Self {
        Self { next: index.max(1) }
    }
}

impl<const D: usize> Default for Halton<D> {
    fn default() -> Self {
        Self::new()
    }
}

impl<const D: usize> Iterator for Halton<D> {
    type Item = [f64; D];
    fn next(&mut self) -> Option<[f64; D]> {
        let i = self.next;
        self.next += 1;
        Some(std::array::from_fn(|d| radical_inverse(i, PRIMES[d])))
    }
}

/// `n` nearly uniform unit vectors (Fibonacci lattice).
pub fn fibonacci_sphere<T: Real>(n: usize) -> Vec<Vec3<T>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z))
        })
        .collect()
}

/// Map a point of the unit square to barycentric coordinates, uniform on the triangle.
pub fn square_to_triangle(u: [f64; 2]) -> [f64; 3] {
    let s = u[0].sqrt();
    let a = 1.0 - s;
    let b = u[1] * s;
    [a, b, 1.0 - a - b]
}

/// Map a point of the unit cube to barycentric coordinates, uniform on the tetrahedron.
pub fn cube_to_tet(u: [f64; 3]) -> [f64; 4] {
    let mut s = [u[0], u[1], u[2]];
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    [s[0], s[1] - s[0], s[2] - s[1], 1.0 - s[2]]
}

/// Uniform random point in the ball.
pub fn random_in_ball<R: Rng>(rng: &mut R, center: Vec3<f64>, radius: f64) -> Vec3<f64> {
    loop {
        let p = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if p.norm_squared() <= 1.0 {
            return center + p * radius;
        }
    }
}
