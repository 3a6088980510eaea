//! Smoothed commuting projectors with boundary conditions on Γ.
//!
//! `R = I ∘ S` is assembled on the basis of each FE space ([`assemble`]),
//! `J` inverts it on the subspace with vanishing Γ̄ dofs, and the projector
//! is `Π = J ∘ R`. Masked (Γ̄) columns of `R` are replaced by unit vectors
//! before inversion, so masked outputs of `Π` are the masked rows of `R u`.

pub mod assemble;
pub mod balls;
pub mod clip;
pub mod extension;
pub mod fields;
pub mod kernel;
pub mod setup;
pub mod smooth;
pub mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::{FeComplex, Space};
use crate::linalg::{self, Csr, DenseLu};
use crate::mesh::Dissection;
use crate::Point3;

pub use assemble::{assemble_rows, smoothed_dofs, CatalogSource, Evaluator, Extended, FeBasis, FeFunction, Source};
pub use balls::{build_ball_system, BallParams, BallSystem};
pub use extension::Extension;
pub use fields::CatalogField;
pub use kernel::{dual_weight, KernelWeight};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorOptions {
    /// Largest system factorized densely; bigger ones use GMRES.
    pub dense_limit: usize,
    /// Relative residual for iterative solves.
    pub tol: f64,
    pub max_condition: f64,
}

impl Default for ProjectorOptions {
    fn default() -> Self {
        Self { dense_limit: 1500, tol: 1e-13, max_condition: 1e12 }
    }
}

enum Inverse {
    Dense(DenseLu),
    Iterative { rhat: Csr<f64>, rhat_t: Csr<f64>, tol: f64 },
}

/// `R`, its inverse `J` on the FE subspace and the resulting projector.
pub struct ProjectorSet {
    pub space: Space,
    pub r: Csr<f64>,
    /// Γ̄ dofs.
    pub mask: Vec<bool>,
    pub delta: f64,
    /// max over unmasked basis functions of ‖φ − Rφ‖ / ‖φ‖ in L².
    pub norm_estimate: f64,
    /// 1-norm condition estimate of the inverted operator.
    pub condition: f64,
    /// Extension applied to inputs and FE functions beyond the mesh.
    pub extension: Extension,
    nodes: Vec<Vec<(Point3, f64)>>,
    inverse: Inverse,
}

impl std::fmt::Debug for ProjectorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectorSet")
            .field("space", &self.space)
            .field("dim", &self.r.nrows)
            .field("delta", &self.delta)
            .field("norm_estimate", &self.norm_estimate)
            .field("condition", &self.condition)
            .finish()
    }
}

/// Assemble `R` for `space` on the extended FE basis.
pub fn assemble_r(space: Space, complex: &FeComplex, balls: &BallSystem, extension: &Extension) -> Result<Csr<f64>> {
    let basis = FeBasis::new(complex, space, extension.clone());
    let rows = assemble_rows(space, complex, &balls.nodes(), &basis)?;
    Ok(Csr::from_row_maps(complex.dim(space), rows))
}

/// max over unmasked `j` of `‖e_j − R e_j‖_M / ‖e_j‖_M`.
pub fn norm_estimate(r: &Csr<f64>, mass: &Csr<f64>, mask: &[bool]) -> f64 {
    let rt = r.transpose();
    let quad = |d: &BTreeMap<usize, f64>| -> f64 {
        let mut s = 0.0;
        for (&i, &di) in d {
            for (k, m) in mass.row(i) {
                if let Some(dk) = d.get(&k) {
                    s += di * m * dk;
                }
            }
        }
        s
    };
    let mut worst: f64 = 0.0;
    for j in 0..r.ncols {
        if mask[j] {
            continue;
        }
        let mut d: BTreeMap<usize, f64> = rt.row(j).map(|(i, v)| (i, -v)).collect();
        *d.entry(j).or_insert(0.0) += 1.0;
        let e = BTreeMap::from([(j, 1.0)]);
        worst = worst.max((quad(&d).max(0.0) / quad(&e)).sqrt());
    }
    worst
}

/// `R` with masked columns replaced by unit vectors.
fn constrained(r: &Csr<f64>, mask: &[bool]) -> Csr<f64> {
    let mut trip: Vec<(usize, usize, f64)> = r.triplets().into_iter().filter(|&(_, j, _)| !mask[j]).collect();
    trip.extend(mask.iter().enumerate().filter(|(_, &m)| m).map(|(j, _)| (j, j, 1.0)));
    Csr::from_triplets(r.nrows, r.ncols, &trip)
}

/// Build `R`, check `‖I − R‖ < 1`, factor `J` and estimate its conditioning.
pub fn build_projector(
    space: Space,
    complex: &FeComplex,
    dissection: &Dissection,
    balls: &BallSystem,
    extension: &Extension,
    opts: ProjectorOptions,
) -> Result<ProjectorSet> {
    let r = assemble_r(space, complex, balls, extension)?;
    let n = r.nrows;
    let mask = complex.bc_mask(space, dissection).flags(n);
    let norm = norm_estimate(&r, &complex.mass_matrix(space), &mask);
    if !(norm < 1.0) {
        return Err(Error::NormTooLarge(norm));
    }
    let rhat = constrained(&r, &mask);
    let inverse = if n <= opts.dense_limit {
        Inverse::Dense(DenseLu::new(rhat.to_dense()).map_err(|_| Error::IllConditioned(f64::INFINITY))?)
    } else {
        let rhat_t = rhat.transpose();
        Inverse::Iterative { rhat, rhat_t, tol: opts.tol }
    };
    let mut set = ProjectorSet {
        space,
        r,
        mask,
        delta: balls.delta,
        norm_estimate: norm,
        condition: 0.0,
        extension: extension.clone(),
        nodes: balls.nodes(),
        inverse,
    };
    let norm1 = constrained(&set.r, &set.mask).norm1();
    let inv = linalg::inverse_norm1_estimate(n, |b| set.solve(b), |b| set.solve_t(b))?;
    set.condition = norm1 * inv;
    if !(set.condition <= opts.max_condition) {
        return Err(Error::IllConditioned(set.condition));
    }
    Ok(set)
}

impl ProjectorSet {
    pub fn dim(&self) -> usize {
        self.r.nrows
    }

    /// `J b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match &self.inverse {
            Inverse::Dense(lu) => lu.solve(b),
            Inverse::Iterative { rhat, tol, .. } => linalg::gmres(|x| rhat.mul_vec(x), b, Some(b), 60, *tol, 20 * b.len().max(100)),
        }
    }

    fn solve_t(&self, b: &[f64]) -> Result<Vec<f64>> {
        match &self.inverse {
            Inverse::Dense(lu) => lu.solve_t(b),
            Inverse::Iterative { rhat_t, tol, .. } => {
                linalg::gmres(|x| rhat_t.mul_vec(x), b, Some(b), 60, *tol, 20 * b.len().max(100))
            }
        }
    }

    /// `Π v` for FE dofs `v`.
    pub fn project_dofs(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.solve(&self.r.mul_vec(v))
    }

    /// `R u = I(S u)` for a single-column source on the same complex. Inputs
    /// without their own extension are extended like the FE functions, so
    /// that `Π` is quasi-optimal up to the boundary.
    pub fn smooth_source(&self, complex: &FeComplex, source: &dyn Source) -> Result<Vec<f64>> {
        if source.is_extended() || !self.extension.commutes() {
            smoothed_dofs(self.space, complex, &self.nodes, source)
        } else {
            smoothed_dofs(self.space, complex, &self.nodes, &Extended { inner: source, extension: &self.extension })
        }
    }

    /// `Π u = J(I(S u))`.
    pub fn project(&self, complex: &FeComplex, source: &dyn Source) -> Result<Vec<f64>> {
        self.solve(&self.smooth_source(complex, source)?)
    }

    pub fn project_field(&self, complex: &FeComplex, field: CatalogField) -> Result<Vec<f64>> {
        self.project(complex, &CatalogSource::new(field))
    }
}

/// The four projectors built on one ball system.
pub struct ProjectorFamily {
    pub sets: Vec<ProjectorSet>,
}

impl ProjectorFamily {
    pub fn build(
        complex: &FeComplex,
        dissection: &Dissection,
        balls: &BallSystem,
        extension: &Extension,
        opts: ProjectorOptions,
    ) -> Result<Self> {
        let sets = Space::ALL
            .iter()
            .map(|&s| build_projector(s, complex, dissection, balls, extension, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sets })
    }

    pub fn get(&self, space: Space) -> &ProjectorSet {
        self.sets.iter().find(|s| s.space == space).expect("all four spaces are built")
    }
}
