//! Sampled checks of Lipschitz-hypograph structure and the cone property.

mod cone;

use serde::{Deserialize, Serialize};

pub use cone::{
    boundary_sample_points, face_lattice, check_cone_at_points, check_cone_property, check_uniform_cone, AxisRule,
    ConeCheckOptions, ConeReport, ConeSpec, PointFailure, UniformConeReport, Violation,
};

use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::TetMesh;
use crate::Point3;

/// Default hypograph grid resolution.
pub const DEFAULT_GRID: usize = 33;

/// Rotated box `{p + x₁e₁ + x₂e₂ + x₃û : |x₁|,|x₂| < r, |x₃| < h}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateBox {
    pub anchor: Point3,
    /// Orthonormal frame; `frame[2]` is the box direction û.
    pub frame: [Point3; 3],
    pub half_width: f64,
    pub half_height: f64,
}

impl CoordinateBox {
    pub fn new(anchor: Point3, u_hat: Point3, half_width: f64, half_height: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) {
            return Err(Error::InvalidParameter("box half-width and half-height must be positive".into()));
        }
        let u = u_hat
            .try_normalize(1e-300)
            .ok_or_else(|| Error::InvalidParameter("box direction is zero".into()))?;
        let e1 = u.any_orthonormal();
        let e2 = u.cross(e1);
        Ok(Self { anchor, frame: [e1, e2, u], half_width, half_height })
    }

    pub fn to_world(&self, x: [f64; 3]) -> Point3 {
        self.anchor + self.frame[0] * x[0] + self.frame[1] * x[1] + self.frame[2] * x[2]
    }

    pub fn corners(&self) -> Vec<Point3> {
        let (r, h) = (self.half_width, self.half_height);
        let mut out = Vec::with_capacity(8);
        for sx in [-r, r] {
            for sy in [-r, r] {
                for sz in [-h, h] {
                    out.push(self.to_world([sx, sy, sz]));
                }
            }
        }
        out
    }
}

/// Result of sampling the boundary as a graph over a coordinate box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypographFit {
    #[serde(rename = "box")]
    pub coord_box: CoordinateBox,
    pub grid: usize,
    /// `(x₁, x₂, ζ)` for every ray with exactly one hit.
    pub samples: Vec<[f64; 3]>,
    pub single_valued: bool,
    /// Largest sampled secant slope; a lower bound for the true constant.
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub gamma_m: Option<f64>,
    pub m_is_lower_bound: bool,
}

/// `γ_M = arctan M`.
pub fn gamma_from_m(m: f64) -> f64 {
    m.atan()
}

/// Sample the boundary of `mesh` over the coordinate box at `p` in direction `u_hat`.
pub fn fit_coordinate_box(mesh: &TetMesh, p: Point3, u_hat: Point3, r: f64, h: f64, grid: usize) -> Result<HypographFit> {
    let cbox = CoordinateBox::new(p, u_hat, r, h)?;
    let bbox = mesh.bbox();
    let diag = bbox.diagonal();
    let dist = mesh.boundary_distance(p);
    if dist > 1e-9 * diag {
        return Err(Error::NotOnSurface { distance: dist });
    }
    let region = bbox.inflate(0.5 * diag);
    if cbox.corners().iter().any(|c| !region.contains(*c, 0.0)) {
        return Err(Error::BoxOutsideMesh);
    }
    let grid = grid.max(2);
    let u = cbox.frame[2];
    let merge_tol = 1e-9 * h;
    let mut samples = Vec::with_capacity(grid * grid);
    let mut single = true;
    for i in 0..grid {
        for j in 0..grid {
            let x1 = -r + 2.0 * r * i as f64 / (grid - 1) as f64;
            let x2 = -r + 2.0 * r * j as f64 / (grid - 1) as f64;
            let origin = cbox.to_world([x1, x2, -h]);
            let mut hits: Vec<f64> = Vec::new();
            for f in 0..mesh.boundary_faces.len() {
                let tri = mesh.face_points(f);
                if let Some(s) = geom::ray_triangle(origin, u, tri[0], tri[1], tri[2], 1e-12) {
                    if (-merge_tol..=2.0 * h + merge_tol).contains(&s) {
                        hits.push(s);
                    }
                }
            }
            hits.sort_by(|a, b| a.partial_cmp(b).unwrap());
            hits.dedup_by(|a, b| (*a - *b).abs() <= merge_tol);
            if hits.len() == 1 {
                samples.push([x1, x2, hits[0] - h]);
            } else {
                single = false;
            }
        }
    }
    let m = if single {
        let mut m: f64 = 0.0;
        for a in 0..samples.len() {
            for b in a + 1..samples.len() {
                let (sa, sb) = (samples[a], samples[b]);
                let d = ((sa[0] - sb[0]).powi(2) + (sa[1] - sb[1]).powi(2)).sqrt();
                m = m.max((sa[2] - sb[2]).abs() / d);
            }
        }
        Some(m)
    } else {
        None
    };
    Ok(HypographFit {
        coord_box: cbox,
        grid,
        samples,
        single_valued: single,
        gamma_m: m.map(gamma_from_m),
        m,
        m_is_lower_bound: true,
    })
}

/// `sin(arctan M) < û·v̂`, with zero slack.
pub fn check_perturbed_direction(m: f64, u_hat: Point3, v_hat: Point3) -> bool {
    gamma_from_m(m).sin() < u_hat.dot(v_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;
    use proptest::prelude::*;

    #[test]
    fn flat_face_is_a_zero_slope_graph() {
        let m = box_mesh(2, 2, 2);
        let fit = fit_coordinate_box(&m, Point3::new(0.5, 0.5, 1.0), Point3::new(0., 0., 1.), 0.2, 0.2, DEFAULT_GRID).unwrap();
        assert!(fit.single_valued);
        assert_eq!(fit.m, Some(0.0));
        assert_eq!(fit.gamma_m, Some(0.0));
    }

    #[test]
    fn right_angle_edge_has_unit_slope() {
        let m = box_mesh(2, 2, 2);
        let u = Point3::new(1., 0., 1.).normalize();
        let fit = fit_coordinate_box(&m, Point3::new(1.0, 0.5, 1.0), u, 0.2, 0.3, DEFAULT_GRID).unwrap();
        assert!(fit.single_valued);
        let mm = fit.m.unwrap();
        assert!((mm - 1.0).abs() < 1e-9, "M = {mm}");
        assert!((fit.gamma_m.unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn tangent_direction_is_not_a_graph() {
        let m = box_mesh(2, 2, 2);
        let fit = fit_coordinate_box(&m, Point3::new(0.5, 0.5, 1.0), Point3::new(1., 0., 0.), 0.2, 0.2, 9).unwrap();
        assert!(!fit.single_valued);
        assert!(fit.m.is_none());
    }

    #[test]
    fn tilted_affine_patch_recovers_gradient_norm() {
        // b box [0,2]x[0,2]x[0,1] where the top is sampled in a rotated frame: the
        // top plane z = 1 seen from û = (sin a, 0, cos a) is affine with slope tan a.
        let m = box_mesh(2, 2, 2);
        let a: f64 = 0.3;
        let u = Point3::new(a.sin(), 0.0, a.cos());
        let fit = fit_coordinate_box(&m, Point3::new(0.5, 0.5, 1.0), u, 0.2, 0.3, 17).unwrap();
        assert!(fit.single_valued);
        assert!((fit.m.unwrap() - a.tan()).abs() < 1e-10);
    }

    #[test]
    fn off_surface_point_rejected() {
        let m = box_mesh(1, 1, 1);
        let r = fit_coordinate_box(&m, Point3::new(0.5, 0.5, 0.5), Point3::new(0., 0., 1.), 0.1, 0.1, 5);
        assert!(matches!(r, Err(Error::NotOnSurface { .. })));
        let r = fit_coordinate_box(&m, Point3::new(0.5, 0.5, 1.0), Point3::new(0., 0., 1.), 10.0, 0.1, 5);
        assert!(matches!(r, Err(Error::BoxOutsideMesh)));
    }

    #[test]
    fn perturbed_direction_examples() {
        let e3 = Point3::new(0., 0., 1.);
        let with_dot = |d: f64| Point3::new((1.0 - d * d).sqrt(), 0.0, d);
        assert!(check_perturbed_direction(0.0, e3, with_dot(0.1)));
        assert!(!check_perturbed_direction(1.0, e3, with_dot(0.70)));
        assert!(check_perturbed_direction(1.0, e3, with_dot(0.75)));
    }

    proptest! {
        #[test]
        fn tan_gamma_is_m(m in 0.0f64..1e3) {
            prop_assert!((gamma_from_m(m).tan() - m).abs() <= 1e-12 * m.max(1.0));
        }

        #[test]
        fn perturbed_direction_is_monotone(m in 0.0f64..10.0, f in 0.0f64..1.0, d in -1.0f64..1.0) {
            let e3 = Point3::new(0., 0., 1.);
            let v = Point3::new((1.0 - d * d).sqrt(), 0.0, d);
            if check_perturbed_direction(m, e3, v) {
                prop_assert!(check_perturbed_direction(m * f, e3, v));
            }
        }
    }
}
