//! Measured properties of the projectors: commuting diagram, boundary
//! conditions, projection, δ-scaling of `‖I − R‖` and approximation rates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::{DofVector, FeComplex, Field, Space, Value};
use crate::linalg::{self, max_abs};
use crate::projector::assemble::{FeBasis, FeFunction, Source};
use crate::projector::balls::BallParams;
use crate::projector::fields::CatalogField;
use crate::projector::setup::{thickness_for, ProjectorSetup};
use crate::projector::{assemble_r, build_projector, norm_estimate, ProjectorFamily, ProjectorOptions, ProjectorSet};
use crate::sampling;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutingReport {
    pub fields: [String; 3],
    /// `‖G Π^g u − Π^c grad u‖∞`
    pub r1: f64,
    /// `‖C Π^c v − Π^d curl v‖∞`
    pub r2: f64,
    /// `‖D Π^d w − Π^o div w‖∞`
    pub r3: f64,
    /// Largest masked dof of `Π^g u`, `Π^c v`, `Π^d w`.
    pub bc_max: f64,
    /// Whether the extension of FE functions commutes with d on this mesh.
    pub exact_extension: bool,
}

impl CommutingReport {
    pub fn max_residual(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3)
    }
}

fn masked_max(values: &[f64], mask: &[bool]) -> f64 {
    values.iter().zip(mask).filter(|(_, &m)| m).fold(0.0f64, |a, (v, _)| a.max(v.abs()))
}

fn apply_incidence(complex: &FeComplex, space: Space, v: &[f64]) -> Vec<f64> {
    complex.incidence(space).expect("space has a derivative").to_f64().mul_vec(v)
}

/// Residuals of the commuting diagram for the inputs `u` (scalar), `v`
/// (line) and `w` (flux), and the largest masked dof of their projections.
pub fn verify_commuting(
    family: &ProjectorFamily,
    complex: &FeComplex,
    fields: [CatalogField; 3],
    exact_extension: bool,
) -> Result<CommutingReport> {
    let mut residuals = [0.0; 3];
    let mut bc_max: f64 = 0.0;
    for (k, f) in fields.iter().enumerate() {
        let space = f.space();
        let next = space.next().ok_or_else(|| Error::InvalidParameter(format!("{} has no derivative", f.name())))?;
        let df = f.derivative().ok_or_else(|| Error::InvalidParameter(format!("{} has no catalogued derivative", f.name())))?;
        let p = family.get(space);
        let pu = p.project_field(complex, *f)?;
        let pdu = family.get(next).project_field(complex, df)?;
        let dpu = apply_incidence(complex, space, &pu);
        residuals[k] = dpu.iter().zip(&pdu).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        bc_max = bc_max.max(masked_max(&pu, &p.mask));
    }
    Ok(CommutingReport {
        fields: fields.map(|f| f.name()),
        r1: residuals[0],
        r2: residuals[1],
        r3: residuals[2],
        bc_max,
        exact_extension,
    })
}

pub const DEFAULT_FIELDS: [CatalogField; 3] = [CatalogField::BumpScalar, CatalogField::BumpVector, CatalogField::BumpFlux];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub space: Space,
    /// max over unmasked basis vectors of `‖Π e_j − e_j‖∞`
    pub projection_error: f64,
    /// `‖Π Π x − Π x‖∞` over random dof vectors
    pub idempotence_error: f64,
    pub n_basis: usize,
    pub n_random: usize,
}

pub fn check_projection(set: &ProjectorSet, n_random: usize, seed: u64) -> Result<ProjectionReport> {
    let n = set.dim();
    let rt = set.r.transpose();
    let mut worst: f64 = 0.0;
    let mut n_basis = 0;
    for j in 0..n {
        if set.mask[j] {
            continue;
        }
        let mut col = vec![0.0; n];
        for (i, v) in rt.row(j) {
            col[i] = v;
        }
        let mut x = set.solve(&col)?;
        x[j] -= 1.0;
        worst = worst.max(max_abs(&x));
        n_basis += 1;
    }
    let mut rng = sampling::rng(seed);
    let mut idem: f64 = 0.0;
    for _ in 0..n_random {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = set.project_dofs(&x)?;
        let z = set.project_dofs(&y)?;
        idem = idem.max(z.iter().zip(&y).fold(0.0f64, |a, (p, q)| a.max((p - q).abs())));
    }
    Ok(ProjectionReport { space: set.space, projection_error: worst, idempotence_error: idem, n_basis, n_random })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    pub deltas: Vec<f64>,
    /// Per space tag: norm estimates in the order of `deltas`.
    pub norms: Vec<(Space, Vec<f64>)>,
    pub slopes: Vec<(Space, f64)>,
}

impl DeltaSweep {
    pub fn slope(&self, space: Space) -> Option<f64> {
        self.slopes.iter().find(|(s, _)| *s == space).map(|x| x.1)
    }
}

/// `‖I − R‖` estimates for each δ; the setup must be thick enough for the
/// largest δ.
pub fn delta_sweep(setup: &ProjectorSetup, deltas: &[f64], c: f64, spaces: &[Space]) -> Result<DeltaSweep> {
    let mut norms: Vec<(Space, Vec<f64>)> = spaces.iter().map(|&s| (s, Vec::new())).collect();
    for &delta in deltas {
        let balls = setup.balls(&BallParams { delta, c, h: None })?;
        for (space, out) in norms.iter_mut() {
            let r = assemble_r(*space, &setup.complex, &balls, &setup.extension)?;
            let mask = setup.complex.bc_mask(*space, &setup.dissection).flags(r.nrows);
            out.push(norm_estimate(&r, &setup.complex.mass_matrix(*space), &mask));
        }
    }
    let slopes = norms.iter().map(|(s, v)| (*s, loglog_slope(deltas, v))).collect();
    Ok(DeltaSweep { deltas: deltas.to_vec(), norms, slopes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    /// `‖u − Π u‖`
    pub error: f64,
    /// `‖u − P u‖` for the L² projection P onto the constrained space
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub space: Space,
    pub input: String,
    pub delta: f64,
    pub levels: Vec<ConvergenceLevel>,
    /// Fitted slope of error against h.
    pub rate: f64,
    pub best_rate: f64,
}

impl ConvergenceTable {
    pub fn to_text(&self) -> String {
        let mut s = format!("# space {} input {} delta {}\n", self.space.tag(), self.input, self.delta);
        s.push_str("n h dofs error best ratio rate\n");
        for (i, l) in self.levels.iter().enumerate() {
            let rate = if i == 0 {
                "-".to_string()
            } else {
                let p = &self.levels[i - 1];
                format!("{:.3}", (l.error / p.error).ln() / (l.h / p.h).ln())
            };
            s.push_str(&format!("{} {:.6} {} {:.6e} {:.6e} {:.3} {}\n", l.n, l.h, l.dofs, l.error, l.best, l.error / l.best, rate));
        }
        s.push_str(&format!("fit {:.3} best-fit {:.3}\n", self.rate, self.best_rate));
        s
    }
}

/// Input of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConvergenceInput {
    Catalog(CatalogField),
    /// Interpolant of the field on the coarsest level, as an FE function.
    CoarseInterpolant(CatalogField),
}

fn l2_best_error(complex: &FeComplex, space: Space, mask: &[bool], field: Field<'_>) -> Result<f64> {
    let m = complex.mass_matrix(space);
    let b = complex.load_vector(space, field)?;
    let free: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    let mff = m.submatrix(&free, &free);
    let bf: Vec<f64> = free.iter().map(|&i| b[i]).collect();
    let xf = linalg::conjugate_gradient(&mff, &bf, 1e-13, 10 * free.len() + 100)?;
    let mut x = vec![0.0; mask.len()];
    for (k, &i) in free.iter().enumerate() {
        x[i] = xf[k];
    }
    complex.l2_error(&DofVector::new(space, x), field)
}

/// `‖u − Π u‖` on the unit cube with Γ = top for each `n`, against the
/// best approximation in the constrained FE space.
pub fn convergence(space: Space, input: ConvergenceInput, ns: &[usize], params: BallParams, opts: ProjectorOptions) -> Result<ConvergenceTable> {
    let field = match input {
        ConvergenceInput::Catalog(f) | ConvergenceInput::CoarseInterpolant(f) => f,
    };
    if field.space() != space {
        return Err(Error::SpaceMismatch { expected: space.tag().into(), got: field.space().tag().into() });
    }
    let coarse = match input {
        ConvergenceInput::CoarseInterpolant(_) => {
            let s = ProjectorSetup::cube(*ns.first().ok_or_else(|| Error::InvalidParameter("empty ladder".into()))?, &params)?;
            let dofs = field.with_field(|f| s.complex.interpolate(space, f))?;
            Some((s, dofs))
        }
        _ => None,
    };
    let mut levels = Vec::new();
    for &n in ns {
        let setup = ProjectorSetup::cube(n, &params)?;
        let balls = setup.balls(&params)?;
        let set = build_projector(space, &setup.complex, &setup.dissection, &balls, &setup.extension, opts)?;
        let cx = &setup.complex;
        let (error, best) = match &coarse {
            None => {
                let pu = set.project_field(cx, field)?;
                let e = field.with_field(|f| cx.l2_error(&DofVector::new(space, pu), f))?;
                let b = field.with_field(|f| l2_best_error(cx, space, &set.mask, f))?;
                (e, b)
            }
            Some((cs, dofs)) => {
                let src = FeFunction { basis: FeBasis::new(&cs.complex, space, cs.extension.clone()), values: &dofs.values };
                let pu = set.project(cx, &src as &dyn Source)?;
                let eval = |p: crate::Point3| -> Value {
                    cs.complex.evaluate(dofs, p).unwrap_or(if space.is_scalar() { Value::Scalar(0.0) } else { Value::Vector(crate::Point3::zero()) })
                };
                let (es, ev) = (|p| eval(p).scalar(), |p| eval(p).vector());
                let f = if space.is_scalar() { Field::Scalar(&es) } else { Field::Vector(&ev) };
                (cx.l2_error(&DofVector::new(space, pu), f)?, l2_best_error(cx, space, &set.mask, f)?)
            }
        };
        levels.push(ConvergenceLevel { n, h: setup.h, dofs: set.dim(), error, best });
    }
    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let es: Vec<f64> = levels.iter().map(|l| l.error.max(1e-300)).collect();
    let bs: Vec<f64> = levels.iter().map(|l| l.best.max(1e-300)).collect();
    let input_name = match input {
        ConvergenceInput::Catalog(f) => f.name(),
        ConvergenceInput::CoarseInterpolant(f) => format!("coarse-{}", f.name()),
    };
    Ok(ConvergenceTable { space, input: input_name, delta: params.delta, levels, rate: loglog_slope(&hs, &es), best_rate: loglog_slope(&hs, &bs) })
}

/// Thickness used by [`ProjectorSetup::cube`] for `params`.
pub fn cube_thickness(n: usize, params: &BallParams) -> f64 {
    let m = crate::mesh::box_mesh(n, n, n);
    thickness_for(params.h.unwrap_or_else(|| m.mesh_size()), params)
}
