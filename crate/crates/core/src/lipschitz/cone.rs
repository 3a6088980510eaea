use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Aabb};
use crate::mesh::{TetMesh, TET_EDGES};
use crate::sampling::{self, Halton};
use crate::transversal::DirectionField;
use crate::Point3;

/// Open cone `{z : 0 < z·d < h, |z - (z·d)d| < (z·d) tan θ}` with unit axis `d`.
///
/// The axis points into the domain: a point `y` passes if `y + z` lies in
/// the domain for every `z` in the cone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub direction: Point3,
    pub theta: f64,
    pub height: f64,
}

impl ConeSpec {
    pub fn new(direction: Point3, theta: f64, height: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2 && height > 0.0) {
            return Err(Error::DegenerateCone { theta, height });
        }
        let direction = direction
            .try_normalize(1e-300)
            .ok_or(Error::DegenerateCone { theta, height })?;
        Ok(Self { direction, theta, height })
    }

    pub fn contains(&self, z: Point3) -> bool {
        let along = z.dot(self.direction);
        let perp = (z - self.direction * along).norm();
        along > 0.0 && along < self.height && perp < along * self.theta.tan()
    }

    /// Uniform sample of the open cone.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point3 {
        loop {
            let z = self.at_coords(cone_coords(rng));
            if self.contains(z) {
                return z;
            }
        }
    }

    /// Map `(u, v, φ) ∈ [0,1)² × [0,2π)` to a uniformly distributed cone point.
    fn at_coords(&self, c: [f64; 3]) -> Point3 {
        let e1 = self.direction.any_orthonormal();
        let e2 = self.direction.cross(e1);
        let along = self.height * c[0].cbrt();
        let rad = along * self.theta.tan() * c[1].sqrt();
        self.direction * along + (e1 * c[2].cos() + e2 * c[2].sin()) * rad
    }
}

fn cone_coords<R: Rng>(rng: &mut R) -> [f64; 3] {
    [rng.random(), rng.random(), 2.0 * std::f64::consts::PI * rng.random::<f64>()]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub y: Point3,
    pub z: Point3,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeReport {
    pub passed: bool,
    pub n_samples: usize,
    /// Smallest signed distance of `y + z` to the boundary, positive inside.
    pub worst_margin: Option<f64>,
    pub violations: Vec<Violation>,
    pub n_violations: usize,
    /// True when no sample was drawn, which makes `passed` vacuous.
    pub vacuous: bool,
}

const MAX_REPORTED: usize = 64;

/// Points of `V = p + [-a, a]³` in the closed domain worth testing first:
/// `p`, mesh vertices, edge midpoints and nearest points on boundary faces.
fn special_points(mesh: &TetMesh, p: Point3, a: f64) -> Vec<Point3> {
    let vbox = Aabb { min: p - Point3::splat(a), max: p + Point3::splat(a) };
    let mut out = vec![p];
    let tets = mesh.locator().candidates(&vbox);
    let mut verts = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for &t in &tets {
        let tv = mesh.tets[t];
        for v in tv {
            verts.insert(v);
        }
        for e in TET_EDGES {
            let (i, j) = (tv[e[0]], tv[e[1]]);
            edges.insert((i.min(j), i.max(j)));
        }
    }
    out.extend(verts.into_iter().map(|v| mesh.vertices[v]).filter(|q| vbox.contains(*q, 0.0)));
    out.extend(
        edges
            .into_iter()
            .map(|(i, j)| mesh.vertices[i].lerp(mesh.vertices[j], 0.5))
            .filter(|q| vbox.contains(*q, 0.0)),
    );
    for f in 0..mesh.boundary_faces.len() {
        let tri = mesh.face_points(f);
        if !Aabb::from_points(tri).overlaps(&vbox) {
            continue;
        }
        let q = geom::closest_point_on_triangle(p, tri[0], tri[1], tri[2]);
        if vbox.contains(q, 0.0) {
            out.push(q);
        }
        let c = mesh.face_centroid(f);
        if vbox.contains(c, 0.0) {
            out.push(c);
        }
    }
    out
}

/// `n` points of `V ∩ Ω̄`: up to half from [`special_points`], the rest
/// Halton points of `V` inside the domain.
fn y_pool(mesh: &TetMesh, p: Point3, half_width: f64, n: usize) -> Vec<Point3> {
    let mut ys = special_points(mesh, p, half_width);
    ys.truncate(n.div_ceil(2).max(1).min(n));
    let mut halton = Halton::<3>::new();
    let mut tries = 0usize;
    while ys.len() < n && tries < 50 * n {
        tries += 1;
        let u = halton.next().unwrap();
        let q = p + Point3::new(2.0 * u[0] - 1.0, 2.0 * u[1] - 1.0, 2.0 * u[2] - 1.0) * half_width;
        if mesh.contains(q) {
            ys.push(q);
        }
    }
    ys
}

/// Sample `y ∈ V ∩ Ω̄` and `z ∈ K` and test `y + z ∈ Ω`.
pub fn check_cone_property(mesh: &TetMesh, p: Point3, cone: &ConeSpec, half_width: f64, n_samples: usize) -> Result<ConeReport> {
    let mut rng = sampling::rng(sampling::DEFAULT_SEED);
    check_cone_with_rng(mesh, p, cone, half_width, n_samples, &mut rng)
}

fn check_cone_with_rng<R: Rng>(
    mesh: &TetMesh,
    p: Point3,
    cone: &ConeSpec,
    half_width: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<ConeReport> {
    if !(half_width > 0.0) {
        return Err(Error::InvalidParameter(format!("cone neighbourhood half-width {half_width}")));
    }
    let cone = ConeSpec::new(cone.direction, cone.theta, cone.height)?;
    let ys = y_pool(mesh, p, half_width, n_samples);
    let mut report = ConeReport {
        passed: true,
        n_samples: ys.len(),
        worst_margin: None,
        violations: Vec::new(),
        n_violations: 0,
        vacuous: ys.is_empty(),
    };
    for y in ys {
        let z = cone.sample(rng);
        let q = y + z;
        let margin = mesh.signed_distance(q);
        report.worst_margin = Some(report.worst_margin.map_or(margin, |m: f64| m.min(margin)));
        if !mesh.contains(q) {
            report.passed = false;
            report.n_violations += 1;
            if report.violations.len() < MAX_REPORTED {
                report.violations.push(Violation { y, z });
            }
        }
    }
    Ok(report)
}

/// How the cone axis is chosen at a boundary sample point.
#[derive(Clone, Copy)]
pub enum AxisRule<'a> {
    /// Normalized sum of the distinct inward normals of boundary faces within
    /// the given distance. Should cover the reach `a + h` of `y + z`.
    InwardNormals(f64),
    /// `-v̂(p)` for an outward transversal field.
    Field(&'a dyn DirectionField),
    Fixed(Point3),
    /// Pick, per point, the candidate axis with the largest worst margin on a
    /// separate selection batch. Candidates are `-v̂` (when a field is
    /// given), inward normal sums of nearby faces, pairwise sums of those
    /// normals and a Fibonacci sphere restricted to the inward half-space.
    Search(Option<&'a dyn DirectionField>),
}

impl std::fmt::Debug for AxisRule<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisRule::InwardNormals(r) => write!(f, "InwardNormals({r})"),
            AxisRule::Field(_) => write!(f, "Field"),
            AxisRule::Fixed(d) => write!(f, "Fixed({d:?})"),
            AxisRule::Search(b) => write!(f, "Search({})", if b.is_some() { "field" } else { "normals" }),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConeCheckOptions<'a> {
    pub theta: f64,
    pub height: f64,
    /// Half-width of the neighbourhood `V`; defaults to `height / 4`.
    pub half_width: Option<f64>,
    pub samples_per_point: usize,
    /// Samples used to rank candidates under [`AxisRule::Search`].
    pub selection_samples: usize,
    pub seed: u64,
    pub axis: AxisRule<'a>,
}

impl<'a> ConeCheckOptions<'a> {
    pub fn new(theta: f64, height: f64) -> Self {
        Self {
            theta,
            height,
            half_width: None,
            samples_per_point: 32,
            selection_samples: 24,
            seed: sampling::DEFAULT_SEED,
            axis: AxisRule::InwardNormals(1.25 * height),
        }
    }

    fn a(&self) -> f64 {
        self.half_width.unwrap_or(self.height / 4.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointFailure {
    pub point: Point3,
    pub axis: Point3,
    pub n_violations: usize,
    pub example: Violation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformConeReport {
    pub passed: bool,
    pub n_points: usize,
    pub n_samples: usize,
    pub worst_margin: Option<f64>,
    pub failures: Vec<PointFailure>,
    pub vacuous: bool,
}

/// Boundary vertices, boundary edge midpoints and `density²` sub-triangle
/// centroids per boundary face.
pub fn boundary_sample_points(mesh: &TetMesh, density: usize) -> Vec<Point3> {
    let mut verts = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for f in &mesh.boundary_faces {
        for k in 0..3 {
            verts.insert(f[k]);
            let (i, j) = (f[k], f[(k + 1) % 3]);
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let mut out: Vec<Point3> = verts.into_iter().map(|v| mesh.vertices[v]).collect();
    out.extend(edges.into_iter().map(|(i, j)| mesh.vertices[i].lerp(mesh.vertices[j], 0.5)));
    for f in 0..mesh.boundary_faces.len() {
        out.extend(face_lattice(mesh.face_points(f), density));
    }
    out
}

/// Centroids of the `n²` sub-triangles of a uniform refinement.
pub fn face_lattice(tri: [Point3; 3], n: usize) -> Vec<Point3> {
    let mut out = Vec::with_capacity(n * n);
    let nf = n as f64;
    let at = |a: f64, b: f64| tri[0] + (tri[1] - tri[0]) * (a / nf) + (tri[2] - tri[0]) * (b / nf);
    for i in 0..n {
        for j in 0..n - i {
            out.push(at(i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0));
            if i + j + 1 < n {
                out.push(at(i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0));
            }
        }
    }
    out
}

fn inward_axis(mesh: &TetMesh, p: Point3, radius: f64) -> Point3 {
    let (normals, nearest) = nearby_normals(mesh, p, radius);
    let sum: Point3 = normals.into_iter().sum();
    match sum.try_normalize(1e-9) {
        Some(s) => -s,
        None => -nearest,
    }
}

/// Distinct outward normals of faces within `radius`, and the normal of the
/// nearest face.
fn nearby_normals(mesh: &TetMesh, p: Point3, radius: f64) -> (Vec<Point3>, Point3) {
    let mut normals: Vec<Point3> = Vec::new();
    let mut nearest = (f64::INFINITY, Point3::zero());
    for f in 0..mesh.boundary_faces.len() {
        let tri = mesh.face_points(f);
        let d = geom::point_triangle_distance(p, tri[0], tri[1], tri[2]);
        let n = mesh.face_normal(f);
        if d < nearest.0 {
            nearest = (d, n);
        }
        if d <= radius && !normals.iter().any(|m| (*m - n).norm() < 1e-9) {
            normals.push(n);
        }
    }
    (normals, nearest.1)
}

fn search_axis<R: Rng>(
    mesh: &TetMesh,
    p: Point3,
    base: Option<&dyn DirectionField>,
    opts: &ConeCheckOptions,
    rng: &mut R,
) -> Result<Point3> {
    let a = opts.a();
    let reach = a + opts.height;
    let (normals, _) = nearby_normals(mesh, p, reach);
    let mut cands = Vec::new();
    let first = match base {
        Some(f) => -f.direction(p),
        None => inward_axis(mesh, p, reach),
    };
    cands.push(first);
    cands.push(inward_axis(mesh, p, a));
    for i in 0..normals.len() {
        cands.push(-normals[i]);
        for j in i + 1..normals.len() {
            if let Some(d) = (-(normals[i] + normals[j])).try_normalize(1e-9) {
                cands.push(d);
            }
            for k in j + 1..normals.len() {
                if let Some(d) = (-(normals[i] + normals[j] + normals[k])).try_normalize(1e-9) {
                    cands.push(d);
                }
            }
        }
    }
    cands.extend(sampling::fibonacci_sphere::<f64>(256).into_iter().filter(|d| d.dot(first) > 0.0));
    let n = opts.selection_samples.max(1);
    let ys = y_pool(mesh, p, a, n);
    let coords: Vec<[f64; 3]> = (0..ys.len()).map(|_| cone_coords(rng)).collect();
    let mut best = (f64::NEG_INFINITY, first);
    for d in cands {
        let cone = ConeSpec::new(d, opts.theta, opts.height)?;
        let mut worst = f64::INFINITY;
        for (y, c) in ys.iter().zip(&coords) {
            let z = cone.at_coords(*c);
            worst = worst.min(mesh.signed_distance(*y + z) / z.norm());
            if worst <= best.0 {
                break;
            }
        }
        if worst > best.0 {
            best = (worst, cone.direction);
        }
    }
    Ok(best.1)
}

/// Cone check at each of `points` with an axis chosen by `opts.axis`.
pub fn check_cone_at_points(mesh: &TetMesh, points: &[Point3], opts: &ConeCheckOptions) -> Result<UniformConeReport> {
    ConeSpec::new(Point3::new(0.0, 0.0, 1.0), opts.theta, opts.height)?;
    let mut rng = sampling::rng(opts.seed);
    let mut report = UniformConeReport {
        passed: true,
        n_points: points.len(),
        n_samples: 0,
        worst_margin: None,
        failures: Vec::new(),
        vacuous: true,
    };
    for &p in points {
        let axis = match opts.axis {
            AxisRule::InwardNormals(r) => inward_axis(mesh, p, r),
            AxisRule::Field(f) => -f.direction(p),
            AxisRule::Fixed(d) => d,
            AxisRule::Search(base) => search_axis(mesh, p, base, opts, &mut rng)?,
        };
        let cone = ConeSpec::new(axis, opts.theta, opts.height)?;
        let r = check_cone_with_rng(mesh, p, &cone, opts.a(), opts.samples_per_point, &mut rng)?;
        report.n_samples += r.n_samples;
        report.vacuous &= r.vacuous;
        if let Some(m) = r.worst_margin {
            report.worst_margin = Some(report.worst_margin.map_or(m, |w: f64| w.min(m)));
        }
        if !r.passed {
            report.passed = false;
            report.failures.push(PointFailure {
                point: p,
                axis: cone.direction,
                n_violations: r.n_violations,
                example: r.violations[0],
            });
        }
    }
    Ok(report)
}

/// Cone check over a boundary sample of the whole domain.
pub fn check_uniform_cone(mesh: &TetMesh, density: usize, opts: &ConeCheckOptions) -> Result<UniformConeReport> {
    check_cone_at_points(mesh, &boundary_sample_points(mesh, density), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn down() -> Point3 {
        Point3::new(0.0, 0.0, -1.0)
    }

    #[test]
    fn narrow_inward_cone_on_cube_face_passes() {
        let m = box_mesh(2, 2, 2);
        let cone = ConeSpec::new(down(), 0.3, 0.2).unwrap();
        let r = check_cone_property(&m, Point3::new(0.5, 0.5, 1.0), &cone, 0.1, 400).unwrap();
        assert!(r.passed, "{:?}", r.violations.first());
        assert_eq!(r.n_samples, 400);
        assert!(r.worst_margin.unwrap() > -1e-12);
    }

    #[test]
    fn nearly_flat_cone_fails() {
        let m = box_mesh(2, 2, 2);
        let cone = ConeSpec::new(down(), FRAC_PI_2 - 0.01, 0.1).unwrap();
        let r = check_cone_property(&m, Point3::new(0.5, 0.5, 1.0), &cone, 0.1, 200).unwrap();
        assert!(!r.passed);
        let v = r.violations[0];
        assert!(cone.contains(v.z));
        assert!(!m.contains(v.y + v.z));
    }

    #[test]
    fn outward_axis_fails_immediately() {
        let m = box_mesh(1, 1, 1);
        let cone = ConeSpec::new(-down(), 0.3, 0.2).unwrap();
        let r = check_cone_property(&m, Point3::new(0.5, 0.5, 1.0), &cone, 0.05, 50).unwrap();
        assert!(!r.passed);
        assert!(r.worst_margin.unwrap() < 0.0);
    }

    #[test]
    fn degenerate_cones_rejected() {
        assert!(matches!(ConeSpec::new(down(), 0.0, 1.0), Err(Error::DegenerateCone { .. })));
        assert!(matches!(ConeSpec::new(down(), FRAC_PI_2, 1.0), Err(Error::DegenerateCone { .. })));
        assert!(matches!(ConeSpec::new(down(), 0.5, 0.0), Err(Error::DegenerateCone { .. })));
    }

    #[test]
    fn zero_samples_is_vacuous() {
        let m = box_mesh(1, 1, 1);
        let cone = ConeSpec::new(down(), 0.3, 0.2).unwrap();
        let r = check_cone_property(&m, Point3::new(0.5, 0.5, 1.0), &cone, 0.1, 0).unwrap();
        assert!(r.passed && r.vacuous && r.worst_margin.is_none());
    }

    #[test]
    fn cube_satisfies_uniform_cone_with_normal_sum_axes() {
        let m = box_mesh(2, 2, 2);
        let mut opts = ConeCheckOptions::new(0.5, 0.2);
        opts.samples_per_point = 16;
        let r = check_uniform_cone(&m, 2, &opts).unwrap();
        assert!(r.passed, "{:?}", r.failures.first());
        assert!(r.n_samples > 1000);
    }

    #[test]
    fn lattice_counts() {
        let tri = [Point3::zero(), Point3::new(1., 0., 0.), Point3::new(0., 1., 0.)];
        for n in 1..5 {
            let pts = face_lattice(tri, n);
            assert_eq!(pts.len(), n * n);
            let c: Point3 = pts.iter().copied().sum::<Point3>() * (1.0 / (n * n) as f64);
            assert!((c - Point3::new(1. / 3., 1. / 3., 0.)).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sampled_cone_points_are_in_the_cone(seed in 0u64..1000, theta in 0.05f64..1.5, h in 0.01f64..3.0) {
            let d = Point3::new(0.3, -0.4, 0.8);
            let cone = ConeSpec::new(d, theta, h).unwrap();
            let mut rng = sampling::rng(seed);
            for _ in 0..20 {
                prop_assert!(cone.contains(cone.sample(&mut rng)));
            }
        }
    }
}
