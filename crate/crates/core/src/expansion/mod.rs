//! Transport of the marked patch along a transversal field: thickness
//! estimation, prism extrusion and validation of the expanded domain.

mod protrusion;
mod validate;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Mat3};
use crate::mesh::{Dissection, TetMesh};
use crate::sampling;
use crate::transversal::DirectionField;
use crate::Point3;

pub use protrusion::{build_protrusion, build_protrusion_unchecked, default_thickness, transported_dissection, ExpandedDomain, TransportedDissection};
pub use validate::{
    tets_overlap, validate_expansion, AreaReport, ConeLocusReport, DisjointReport, ExpansionArtifact, ExpansionReport,
    SharedBoundaryReport, ValidationOptions, VolumeReport,
};

/// Default lower bound on the separation ratio.
pub const C_MIN: f64 = 1e-3;

/// `(p, s) ↦ p + s v̂(p)`.
#[derive(Clone)]
pub struct TransportMap {
    field: Arc<dyn DirectionField>,
}

impl std::fmt::Debug for TransportMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TransportMap")
    }
}

impl TransportMap {
    pub fn new(field: Arc<dyn DirectionField>) -> Self {
        Self { field }
    }

    pub fn field(&self) -> &dyn DirectionField {
        self.field.as_ref()
    }

    pub fn transport(&self, p: Point3, s: f64) -> Point3 {
        if s == 0.0 {
            return p;
        }
        p + self.field.direction(p) * s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Separation ratio below `c_min`.
    LowRatio,
    /// Transported point (with `s > 0`) inside the original domain.
    EntersDomain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCertificate {
    pub p: Point3,
    pub s1: f64,
    pub q: Point3,
    pub s2: f64,
    pub ratio: f64,
    pub kind: CertificateKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationReport {
    pub t: f64,
    pub n_pairs: usize,
    pub passed: bool,
    pub worst_ratio: f64,
    pub certificate: Option<PairCertificate>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationOptions {
    pub c_min: f64,
    pub seed: u64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self { c_min: C_MIN, seed: sampling::DEFAULT_SEED }
    }
}

/// Area-weighted sampler on the faces of Γ.
struct GammaSampler {
    tris: Vec<[Point3; 3]>,
    boxes: Vec<Aabb<f64>>,
    cdf: Vec<f64>,
}

impl GammaSampler {
    fn new(mesh: &TetMesh, dissection: &Dissection) -> Self {
        let tris: Vec<[Point3; 3]> = dissection.gamma_faces.iter().map(|&f| mesh.face_points(f)).collect();
        let mut acc = 0.0;
        let cdf = dissection
            .gamma_faces
            .iter()
            .map(|&f| {
                acc += mesh.face_area(f);
                acc
            })
            .collect();
        let boxes = tris.iter().map(|t| Aabb::from_points(*t)).collect();
        Self { tris, boxes, cdf }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> (usize, [f64; 3]) {
        let total = *self.cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        let f = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
        (f, sampling::square_to_triangle([rng.random(), rng.random()]))
    }

    fn point(&self, f: usize, l: [f64; 3]) -> Point3 {
        let t = &self.tris[f];
        t[0] * l[0] + t[1] * l[1] + t[2] * l[2]
    }
}

fn separation_ratio(map: &TransportMap, p: Point3, s1: f64, q: Point3, s2: f64) -> Option<f64> {
    let den = ((p - q).norm_squared() + (s1 - s2) * (s1 - s2)).sqrt();
    if den < 1e-12 {
        return None;
    }
    Some((map.transport(p, s1) - map.transport(q, s2)).norm() / den)
}

/// Project barycentric `(α, β)` (weights of vertices 1 and 2) onto the triangle.
fn clamp_to_triangle(mut a: f64, mut b: f64) -> (f64, f64) {
    a = a.max(0.0);
    b = b.max(0.0);
    let s = a + b;
    if s > 1.0 {
        a /= s;
        b /= s;
    }
    (a, b)
}

/// Solve `q + s v̂(q) = x` for `q` on triangle `tri` and `|s| <= t` by a
/// clamped finite-difference Newton iteration.
fn newton_preimage(map: &TransportMap, tri: &[Point3; 3], x: Point3, t: f64) -> (Point3, f64) {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let at = |a: f64, b: f64| tri[0] + e1 * a + e2 * b;
    let (mut a, mut b, mut s) = (1.0 / 3.0, 1.0 / 3.0, 0.0);
    let h = 1e-7;
    for _ in 0..20 {
        let q = at(a, b);
        let r = map.transport(q, s) - x;
        if r.norm() < 1e-14 {
            break;
        }
        let ja = (map.transport(at(a + h, b), s) - map.transport(q, s)) * (1.0 / h);
        let jb = (map.transport(at(a, b + h), s) - map.transport(q, s)) * (1.0 / h);
        let js = map.field().direction(q);
        let Some(inv) = Mat3::from_cols(ja, jb, js).inverse() else { break };
        let d = inv.mul_vec(r);
        let (na, nb) = clamp_to_triangle(a - d.x, b - d.y);
        a = na;
        b = nb;
        s = (s - d.z).clamp(-t, t);
    }
    (at(a, b), s)
}

/// Sample `n_pairs` pairs with `s ∈ [-t, t]` and test the separation ratio.
///
/// Pairs cycle through three kinds: independent random pairs, local
/// perturbations on the same face, and Newton-targeted near-collisions on
/// other faces of Γ.
pub fn check_separation(
    map: &TransportMap,
    mesh: &TetMesh,
    dissection: &Dissection,
    t: f64,
    n_pairs: usize,
    opts: SeparationOptions,
) -> Result<SeparationReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidThickness(t));
    }
    let sampler = GammaSampler::new(mesh, dissection);
    let mut rng = sampling::rng(opts.seed);
    let inside_tol = 1e-9 * mesh.bbox().diagonal();
    let mut report = SeparationReport { t, n_pairs, passed: true, worst_ratio: f64::INFINITY, certificate: None };
    let record = |report: &mut SeparationReport, p: Point3, s1: f64, q: Point3, s2: f64, ratio: f64, kind| {
        if ratio < report.worst_ratio {
            report.worst_ratio = ratio;
        }
        let failing = kind == CertificateKind::EntersDomain || ratio < opts.c_min;
        if failing {
            let worse = match &report.certificate {
                None => true,
                Some(c) => c.kind == CertificateKind::LowRatio && (kind == CertificateKind::EntersDomain || ratio < c.ratio),
            };
            report.passed = false;
            if worse {
                report.certificate = Some(PairCertificate { p, s1, q, s2, ratio, kind });
            }
        }
    };
    for i in 0..n_pairs {
        let (fp, lp) = sampler.sample(&mut rng);
        let p = sampler.point(fp, lp);
        let s1 = t * (2.0 * rng.random::<f64>() - 1.0);
        if s1 > 0.0 {
            let x = map.transport(p, s1);
            if mesh.signed_distance(x) > inside_tol {
                record(&mut report, p, s1, p, s1, 0.0, CertificateKind::EntersDomain);
            }
        }
        match i % 3 {
            0 => {
                let (fq, lq) = sampler.sample(&mut rng);
                let q = sampler.point(fq, lq);
                let s2 = t * (2.0 * rng.random::<f64>() - 1.0);
                if let Some(r) = separation_ratio(map, p, s1, q, s2) {
                    record(&mut report, p, s1, q, s2, r, CertificateKind::LowRatio);
                }
            }
            1 => {
                let da = 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                let db = 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                let (a, b) = clamp_to_triangle(lp[1] + da, lp[2] + db);
                let q = sampler.point(fp, [1.0 - a - b, a, b]);
                let s2 = (s1 + 0.05 * t * (2.0 * rng.random::<f64>() - 1.0)).clamp(-t, t);
                if let Some(r) = separation_ratio(map, p, s1, q, s2) {
                    record(&mut report, p, s1, q, s2, r, CertificateKind::LowRatio);
                }
            }
            _ => {
                let x = map.transport(p, s1);
                for (g, tri) in sampler.tris.iter().enumerate() {
                    if g == fp || sampler.boxes[g].distance(x) > t {
                        continue;
                    }
                    let (q, s2) = newton_preimage(map, tri, x, t);
                    if let Some(r) = separation_ratio(map, p, s1, q, s2) {
                        record(&mut report, p, s1, q, s2, r, CertificateKind::LowRatio);
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct T0Estimate {
    pub t0: f64,
    /// Worst ratio seen at `t0`.
    pub worst_ratio: f64,
    pub c_min: f64,
    pub s_max: f64,
    pub n_pairs: usize,
    pub iterations: usize,
    /// Smallest failing thickness found and its certificate.
    pub failing_t: Option<f64>,
    pub certificate: Option<PairCertificate>,
}

pub fn estimate_t0(map: &TransportMap, mesh: &TetMesh, dissection: &Dissection, s_max: f64, n_pairs: usize) -> Result<T0Estimate> {
    estimate_t0_with(map, mesh, dissection, s_max, n_pairs, SeparationOptions::default())
}

/// Bisection on `(0, s_max]` for the largest thickness passing
/// [`check_separation`].
pub fn estimate_t0_with(
    map: &TransportMap,
    mesh: &TetMesh,
    dissection: &Dissection,
    s_max: f64,
    n_pairs: usize,
    opts: SeparationOptions,
) -> Result<T0Estimate> {
    if !(s_max > 0.0) {
        return Err(Error::EmptySearch(s_max));
    }
    let first = check_separation(map, mesh, dissection, s_max, n_pairs, opts)?;
    let mut est = T0Estimate {
        t0: s_max,
        worst_ratio: first.worst_ratio,
        c_min: opts.c_min,
        s_max,
        n_pairs,
        iterations: 1,
        failing_t: None,
        certificate: None,
    };
    if first.passed {
        return Ok(est);
    }
    est.failing_t = Some(s_max);
    est.certificate = first.certificate;
    let (mut lo, mut hi) = (0.0, s_max);
    let mut lo_ratio = f64::NAN;
    while hi - lo > 1e-3 * s_max && est.iterations < 40 {
        let mid = 0.5 * (lo + hi);
        let r = check_separation(map, mesh, dissection, mid, n_pairs, opts)?;
        est.iterations += 1;
        if r.passed {
            lo = mid;
            lo_ratio = r.worst_ratio;
        } else {
            hi = mid;
            est.failing_t = Some(mid);
            est.certificate = r.certificate;
        }
    }
    if lo == 0.0 {
        return Err(Error::NoPassingThickness(hi));
    }
    est.t0 = lo;
    est.worst_ratio = lo_ratio;
    Ok(est)
}
