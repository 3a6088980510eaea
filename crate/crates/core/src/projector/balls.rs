//! Per-vertex smoothing balls, shifted into Ω^e at Γ̄ vertices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Dissection, TetMesh};
use crate::projector::kernel::{dual_weight, KernelWeight};
use crate::sampling::fibonacci_sphere;
use crate::transversal::DirectionField;
use crate::Point3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    /// Radius factor: ρ = h·δ.
    pub delta: f64,
    /// Shift factor: |c_x − x| ≤ c·h·δ at Γ̄ vertices.
    pub c: f64,
    /// Mesh size override; the largest circumsphere diameter by default.
    pub h: Option<f64>,
}

impl Default for BallParams {
    fn default() -> Self {
        Self { delta: 0.1, c: 2.0, h: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub vertex: Point3,
    pub center: Point3,
    /// Distance from the centre to ∂Ω^e for shifted balls.
    pub clearance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSystem {
    pub delta: f64,
    pub c: f64,
    pub h: f64,
    pub radius: f64,
    pub balls: Vec<Ball>,
    pub shifted: Vec<bool>,
}

impl BallSystem {
    pub fn weight(&self, v: usize) -> KernelWeight<f64> {
        let b = &self.balls[v];
        dual_weight(b.center, self.radius, b.vertex)
    }

    /// Weighted nodes of every ball.
    pub fn nodes(&self) -> Vec<Vec<(Point3, f64)>> {
        (0..self.balls.len()).map(|v| self.weight(v).weighted_nodes()).collect()
    }

    /// Balls centred at the vertices (no shift anywhere).
    pub fn centred(mesh: &TetMesh, params: BallParams) -> Result<Self> {
        check_params(&params)?;
        let h = params.h.unwrap_or_else(|| mesh.mesh_size());
        let balls = mesh.vertices.iter().map(|&x| Ball { vertex: x, center: x, clearance: None }).collect();
        Ok(Self { delta: params.delta, c: params.c, h, radius: h * params.delta, balls, shifted: vec![false; mesh.num_vertices()] })
    }
}

fn check_params(p: &BallParams) -> Result<()> {
    if !(p.delta > 0.0 && p.c > 0.0 && p.delta.is_finite() && p.c.is_finite()) {
        return Err(Error::InvalidParameter(format!("need delta, c > 0 (got {}, {})", p.delta, p.c)));
    }
    if let Some(h) = p.h {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("mesh size must be positive (got {h})")));
        }
    }
    Ok(())
}

/// Sample points of the closed ball shrunk by a relative `1e-9`.
fn containment_samples(center: Point3, radius: f64) -> Vec<Point3> {
    let r = radius * (1.0 - 1e-9);
    let mut pts = vec![center];
    for frac in [1.0, 0.5] {
        for d in fibonacci_sphere::<f64>(64) {
            pts.push(center + d * (r * frac));
        }
    }
    pts
}

fn contained(omega_e: &TetMesh, center: Point3, radius: f64) -> bool {
    containment_samples(center, radius).into_iter().all(|p| omega_e.contains(p))
}

/// Centre within `|c − x| ≤ reach` maximising the clearance in `omega_e`.
fn max_clearance_center(omega_e: &TetMesh, x: Point3, start: Point3, reach: f64) -> (Point3, f64) {
    let project = |p: Point3| {
        let d = p - x;
        let n = d.norm();
        if n > reach {
            x + d * (reach / n)
        } else {
            p
        }
    };
    let mut best = (start, omega_e.signed_distance(start));
    for d in fibonacci_sphere::<f64>(128) {
        for frac in [0.25, 0.5, 0.75, 1.0] {
            let p = x + d * (reach * frac);
            let s = omega_e.signed_distance(p);
            if s > best.1 {
                best = (p, s);
            }
        }
    }
    let mut step = 0.25 * reach;
    while step > 1e-6 * reach {
        let mut improved = false;
        for k in 0..3 {
            for sign in [1.0, -1.0] {
                let mut p = best.0;
                p[k] += sign * step;
                let p = project(p);
                let s = omega_e.signed_distance(p);
                if s > best.1 + 1e-15 {
                    best = (p, s);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Centre of the ball of radius `rho` for the Γ̄ vertex `x`, with its
/// clearance in `omega_e`.
///
/// The shift `x + reach·v̂(x)` is tried first. Where that ball leaves Ω^e
/// (near Π, where Ω^e narrows) the centre with the largest clearance within
/// `|c − x| ≤ reach` is used instead. `Err` carries the best clearance found.
pub fn shifted_center(omega_e: &TetMesh, x: Point3, direction: Point3, rho: f64, reach: f64) -> Result<(Point3, f64), f64> {
    let first = x + direction * reach;
    if contained(omega_e, first, rho) {
        return Ok((first, omega_e.signed_distance(first)));
    }
    let (c, s) = max_clearance_center(omega_e, x, first, reach);
    if s < rho * (1.0 - 1e-9) || !contained(omega_e, c, rho) {
        return Err(s);
    }
    Ok((c, s))
}

/// Balls of radius `h·δ`; Γ̄ vertices are shifted into `omega_e` by at most
/// `c·h·δ` (see [`shifted_center`]).
pub fn build_ball_system(
    mesh: &TetMesh,
    dissection: &Dissection,
    omega_e: &TetMesh,
    field: &dyn DirectionField,
    params: BallParams,
) -> Result<BallSystem> {
    let mut sys = BallSystem::centred(mesh, params)?;
    let rho = sys.radius;
    let reach = params.c * rho;
    for v in dissection.gamma_vertices(mesh) {
        let x = mesh.vertices[v];
        let (center, clearance) = shifted_center(omega_e, x, field.direction(x), rho, reach)
            .map_err(|clearance| Error::Containment { vertex: v, clearance, radius: rho })?;
        sys.balls[v].center = center;
        sys.balls[v].clearance = Some(clearance);
        sys.shifted[v] = true;
    }
    Ok(sys)
}
