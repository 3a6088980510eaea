//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use lipexpand::expansion::{
    build_protrusion, check_separation, default_thickness, estimate_t0, validate_expansion, SeparationOptions, TransportMap,
    ValidationOptions, C_MIN,
};
use lipexpand::fe::{build_complex, Field, Space};
use lipexpand::linalg::max_abs;
use lipexpand::lipschitz::{check_uniform_cone, AxisRule, ConeCheckOptions, UniformConeReport};
use lipexpand::mesh::{box_mesh, dissect_boundary, lshape_mesh, select_faces, single_tet, slab_mesh, Dissection, FacePredicate, TetMesh};
use lipexpand::projector::setup::ProjectorSetup;
use lipexpand::projector::smooth::smooth;
use lipexpand::projector::verify::{check_projection, convergence, delta_sweep, verify_commuting, ConvergenceInput, DEFAULT_FIELDS};
use lipexpand::projector::{BallParams, BallSystem, CatalogField, ProjectorFamily, ProjectorOptions};
use lipexpand::sampling;
use lipexpand::transversal::{boundary_normal_field, build_box_cover, build_field, compute_transversality, ConstantField, TransversalField};
use lipexpand::{Point3, Result};

// Tolerances.
const VOLUME_TOL: f64 = 1e-10;
const KAPPA_TOL: f64 = 1e-3;
const SEPARATION_PAIRS: usize = 10_000;
const CONE_SAMPLES: usize = 10_000;
const WIDE_THETA: f64 = 1.55;
const COMMUTE_INTERP_TOL: f64 = 1e-12;
const KERNEL_MASS_TOL: f64 = 1e-12;
const AFFINE_TOL: f64 = 1e-11;
const DUAL_TOL: f64 = 1e-12;
const MC_SAMPLES: usize = 1_000_000;
const PROJECTION_TOL: f64 = 1e-10;
const IDEMPOTENCE_TOL: f64 = 1e-9;
const COMMUTING_TOL: f64 = 1e-8;
const BC_TOL: f64 = 1e-12;
const SLOPE_RANGE: (f64, f64) = (0.7, 1.3);
const RATE_G: f64 = 1.8;
const RATE_CD: f64 = 0.9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn with_gamma(mesh: &TetMesh, gamma: &str) -> Result<Dissection> {
    dissect_boundary(mesh, &select_faces(mesh, &FacePredicate::parse(gamma)?))
}

fn blended(mesh: &TetMesh, d: &Dissection) -> Result<TransversalField> {
    let mut f = build_field(build_box_cover(mesh, d)?)?;
    compute_transversality(&mut f, mesh, 4)?;
    Ok(f)
}

const LSHAPE_GAMMA: &str = "x==1&y>=1|y==1&x>=1";

fn expansion_existence() -> Result<Outcome> {
    let m = box_mesh(2, 2, 2);
    let d = with_gamma(&m, "z==1")?;
    let field = blended(&m, &d)?;
    let kappa = field.kappa.unwrap();
    let map = TransportMap::new(Arc::new(field));
    let t0 = estimate_t0(&map, &m, &d, 0.5 * m.bbox().diagonal(), SEPARATION_PAIRS)?;
    let t = default_thickness(t0.t0, &m, &d, kappa);
    let e = build_protrusion(&m, &d, &map, t, 2)?;
    let r = validate_expansion(&e, &m, &d, &ValidationOptions::new(PI / 16.0, t / 2.0))?;
    let sb = &r.shared_boundary;
    let ok = r.disjoint.passed && sb.faces_match && sb.edges_match && r.volume.error <= VOLUME_TOL && r.passed;
    outcome(
        ok,
        format!(
            "t0 {:.4} t {:.4}; overlapping pairs {}; faces=Γ {} edges=Π {}; volume error {:.1e}; all checks {}",
            t0.t0, t, r.disjoint.n_overlaps, sb.faces_match, sb.edges_match, r.volume.error, r.passed
        ),
    )
}

fn transversality() -> Result<Outcome> {
    let cube = box_mesh(2, 2, 2);
    let k_cube = blended(&cube, &with_gamma(&cube, "z==1")?)?.kappa.unwrap();
    let mut ok = (k_cube - 1.0 / 3f64.sqrt()).abs() <= KAPPA_TOL;
    let mut detail = format!("cube κ {k_cube:.6} (1/√3 = {:.6})", 1.0 / 3f64.sqrt());
    let fixtures: [(&str, TetMesh, &str); 4] = [
        ("cube two sides", box_mesh(2, 2, 2), "z==1|x==1"),
        ("box side", box_mesh(3, 2, 2), "x==0"),
        ("slab", slab_mesh(2, 0.25), "z==0.25"),
        ("L-shape", lshape_mesh(2), LSHAPE_GAMMA),
    ];
    for (name, m, g) in fixtures {
        let k = blended(&m, &with_gamma(&m, g)?)?.kappa.unwrap();
        ok &= k > 0.0;
        detail.push_str(&format!("; {name} κ {k:.4}"));
    }
    outcome(ok, detail)
}

fn injectivity() -> Result<Outcome> {
    let cube = box_mesh(2, 2, 2);
    let d = with_gamma(&cube, "z==1")?;
    let map = TransportMap::new(Arc::new(blended(&cube, &d)?));
    let t0 = estimate_t0(&map, &cube, &d, 0.5 * cube.bbox().diagonal(), SEPARATION_PAIRS)?;
    let at = check_separation(&map, &cube, &d, t0.t0, SEPARATION_PAIRS, SeparationOptions::default())?;

    let l = lshape_mesh(2);
    let dl = with_gamma(&l, LSHAPE_GAMMA)?;
    let lmap = TransportMap::new(Arc::new(blended(&l, &dl)?));
    let lt0 = estimate_t0(&lmap, &l, &dl, 1.0, SEPARATION_PAIRS)?;
    let wide = check_separation(&lmap, &l, &dl, 4.0 * lt0.t0, SEPARATION_PAIRS, SeparationOptions::default())?;
    let cert = wide.certificate.as_ref();
    let ok = at.passed && at.worst_ratio >= C_MIN && !wide.passed && cert.is_some();
    outcome(
        ok,
        format!(
            "cube t0 {:.4}: {} pairs, worst ratio {:.3e}; L-shape t0 {:.4}, at 4·t0 certificate {}",
            t0.t0,
            at.n_pairs,
            at.worst_ratio,
            lt0.t0,
            cert.map(|c| format!("{:?} ratio {:.2e}", c.kind, c.ratio)).unwrap_or("none".into())
        ),
    )
}

fn cone_check(mesh: &TetMesh, theta: f64, height: f64) -> Result<UniformConeReport> {
    let normals = boundary_normal_field(mesh)?;
    let mut o = ConeCheckOptions::new(theta, height);
    o.axis = AxisRule::Search(Some(&normals));
    let n_points = lipexpand::lipschitz::boundary_sample_points(mesh, 2).len();
    o.samples_per_point = CONE_SAMPLES.div_ceil(n_points).max(8);
    check_uniform_cone(mesh, 2, &o)
}

fn cone_property() -> Result<Outcome> {
    let m = box_mesh(2, 2, 2);
    let d = with_gamma(&m, "z==1")?;
    let map = TransportMap::new(Arc::new(ConstantField::new(Point3::new(0.0, 0.0, 1.0))?));
    let t0 = estimate_t0(&map, &m, &d, 0.5 * m.bbox().diagonal(), SEPARATION_PAIRS)?;
    let t = default_thickness(t0.t0, &m, &d, 1.0);
    let e = build_protrusion(&m, &d, &map, t, 2)?;
    let h = t / 2.0;
    let re = cone_check(&e.omega_e, PI / 8.0, h)?;
    let rt = cone_check(&e.omega_tilde, PI / 8.0, h)?;
    let wide = cone_check(&e.omega_tilde, WIDE_THETA, h)?;
    let violations = |r: &UniformConeReport| r.failures.iter().map(|f| f.n_violations).sum::<usize>();
    let ok = re.passed
        && rt.passed
        && re.n_samples >= CONE_SAMPLES
        && rt.n_samples >= CONE_SAMPLES
        && !wide.passed
        && !wide.failures.is_empty();
    outcome(
        ok,
        format!(
            "θ=π/8 h={h:.4}: Ω^e {} samples {} violations, Ω̃ {} samples {} violations; θ={WIDE_THETA}: {} violations, certificate at {}",
            re.n_samples,
            violations(&re),
            rt.n_samples,
            violations(&rt),
            violations(&wide),
            wide.failures.first().map(|f| format!("({:.3}, {:.3}, {:.3})", f.point.x, f.point.y, f.point.z)).unwrap_or("none".into())
        ),
    )
}

fn exactness() -> Result<Outcome> {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, m) in [("tet", single_tet()), ("cube n=2", box_mesh(2, 2, 2)), ("box 3x2x2", box_mesh(3, 2, 2)), ("L-shape", lshape_mesh(2))] {
        let r = build_complex(&m)?.exactness();
        let kernels = r.ranks_checked && r.dim_ker_c == r.rank_g && r.dim_ker_d == r.rank_c;
        ok &= r.cg_zero && r.dc_zero && kernels && r.exact == Some(true);
        detail.push(format!("{name}: CG=0 {} DC=0 {} ker C {:?}=rank G {:?} ker D {:?}=rank C {:?}", r.cg_zero, r.dc_zero, r.dim_ker_c, r.rank_g, r.dim_ker_d, r.rank_c));
    }
    outcome(ok, detail.join("; "))
}

fn canonical_commutation() -> Result<Outcome> {
    let u = |p: Point3| p.x * p.x + p.y - 2.0 * p.y * p.z + 0.5;
    let grad_u = |p: Point3| Point3::new(2.0 * p.x, 1.0 - 2.0 * p.z, -2.0 * p.y);
    let v = |p: Point3| Point3::new(p.y * p.z, p.x * p.x, p.x + p.z * p.y);
    let curl_v = |p: Point3| Point3::new(p.z, p.y - 1.0, 2.0 * p.x - p.z);
    let w = |p: Point3| Point3::new(p.x * p.y, p.z * p.z, p.x * p.z + p.y);
    let div_w = |p: Point3| p.y + p.x;
    let mut worst: [f64; 3] = [0.0; 3];
    for m in [box_mesh(2, 2, 2), lshape_mesh(2)] {
        let cx = build_complex(&m)?;
        let diff = |a: Vec<f64>, b: Vec<f64>| max_abs(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
        let pairs = [
            (cx.interpolate(Space::C, Field::Vector(&grad_u))?, cx.apply_d(&cx.interpolate(Space::G, Field::Scalar(&u))?)?),
            (cx.interpolate(Space::D, Field::Vector(&curl_v))?, cx.apply_d(&cx.interpolate(Space::C, Field::Vector(&v))?)?),
            (cx.interpolate(Space::O, Field::Scalar(&div_w))?, cx.apply_d(&cx.interpolate(Space::D, Field::Vector(&w))?)?),
        ];
        for (k, (lhs, rhs)) in pairs.into_iter().enumerate() {
            worst[k] = worst[k].max(diff(lhs.values, rhs.values));
        }
    }
    let ok = worst.iter().all(|&e| e <= COMMUTE_INTERP_TOL);
    outcome(ok, format!("max |I^c grad u − G I^g u| {:.1e}, |I^d curl v − C I^c v| {:.1e}, |I^o div w − D I^d w| {:.1e}", worst[0], worst[1], worst[2]))
}

fn cube_fixture(delta: f64) -> Result<(ProjectorSetup, BallSystem, BallParams)> {
    let p = BallParams { delta, c: 2.0, h: None };
    let s = ProjectorSetup::cube(2, &p)?;
    let b = s.balls(&p)?;
    Ok((s, b, p))
}

fn kernel_correctness() -> Result<Outcome> {
    let (s, balls, _) = cube_fixture(0.1)?;
    let mesh = s.mesh();
    let mut mass_err: f64 = 0.0;
    let mut dual_err: f64 = 0.0;
    let probes = [
        |y: Point3| 1.0 + 2.0 * y.x - 3.0 * y.y + 0.5 * y.z,
        |y: Point3| -0.7 + y.y + 4.0 * y.z,
        |y: Point3| 2.5 * y.x - y.z,
    ];
    for v in 0..mesh.num_vertices() {
        let f = balls.weight(v);
        let nodes = f.weighted_nodes();
        mass_err = mass_err.max((nodes.iter().map(|n| n.1).sum::<f64>() - 1.0).abs());
        for p in probes {
            let got: f64 = nodes.iter().map(|(y, w)| w * p(*y)).sum();
            dual_err = dual_err.max((got - p(f.vertex)).abs());
        }
    }
    // affine reproduction of S^g at 20 random points per tet
    let affine = |x: Point3| 0.3 + x.dot(Point3::new(1.0, -2.0, 0.5));
    let src = |x: Point3| Ok(lipexpand::fe::Value::Scalar(affine(x)));
    let one = |_: Point3| Ok(lipexpand::fe::Value::Scalar(1.0));
    let mut rng = sampling::rng(11);
    let (mut affine_err, mut unit_err): (f64, f64) = (0.0, 0.0);
    for t in 0..mesh.num_tets() {
        let pts = mesh.tet_points(t);
        for _ in 0..20 {
            let l = sampling::cube_to_tet([rng.random(), rng.random(), rng.random()]);
            let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2] + pts[3] * l[3];
            affine_err = affine_err.max((smooth(Space::G, &src, x, t, mesh, &balls)?.scalar() - affine(x)).abs());
            unit_err = unit_err.max((smooth(Space::G, &one, x, t, mesh, &balls)?.scalar() - 1.0).abs());
        }
    }
    // independent Monte Carlo oracle on a shifted ball
    let v = (0..mesh.num_vertices()).find(|&v| balls.shifted[v]).expect("cube top has shifted balls");
    let f = balls.weight(v);
    let p = probes[0];
    let vol = f.ball_volume();
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..MC_SAMPLES {
        let y = sampling::random_in_ball(&mut rng, f.center, f.radius);
        let g = vol * f.eval(y) * p(y);
        s1 += g;
        s2 += g * g;
    }
    let mean = s1 / MC_SAMPLES as f64;
    let sigma = ((s2 / MC_SAMPLES as f64 - mean * mean) / MC_SAMPLES as f64).sqrt();
    let mc_dev = (mean - p(f.vertex)).abs();
    let ok = mass_err <= KERNEL_MASS_TOL
        && unit_err <= KERNEL_MASS_TOL
        && affine_err <= AFFINE_TOL
        && dual_err <= DUAL_TOL
        && mc_dev <= 3.0 * sigma;
    outcome(
        ok,
        format!(
            "∫f-1 {mass_err:.1e}, S^g 1-1 {unit_err:.1e}, S^g p-p {affine_err:.1e}, ∫f p-p(a) {dual_err:.1e}; MC {MC_SAMPLES} samples |dev| {mc_dev:.2e} vs 3σ {:.2e}",
            3.0 * sigma
        ),
    )
}

fn family(s: &ProjectorSetup, b: &BallSystem) -> Result<ProjectorFamily> {
    ProjectorFamily::build(&s.complex, &s.dissection, b, &s.extension, ProjectorOptions::default())
}

fn projection(fam: &ProjectorFamily) -> Result<Outcome> {
    let mut ok = true;
    let mut detail = Vec::new();
    for set in &fam.sets {
        let r = check_projection(set, 10, 5)?;
        ok &= r.projection_error <= PROJECTION_TOL && r.idempotence_error <= IDEMPOTENCE_TOL;
        detail.push(format!("{}: Πe-e {:.1e} over {} basis vectors, ΠΠ-Π {:.1e}", set.space.tag(), r.projection_error, r.n_basis, r.idempotence_error));
    }
    outcome(ok, detail.join("; "))
}

fn commuting(fam: &ProjectorFamily, s: &ProjectorSetup) -> Result<(Outcome, Outcome)> {
    let r = verify_commuting(fam, &s.complex, DEFAULT_FIELDS, s.extension.commutes())?;
    let diagram = Outcome {
        passed: r.max_residual() <= COMMUTING_TOL,
        detail: format!("r1 {:.1e} r2 {:.1e} r3 {:.1e} ({})", r.r1, r.r2, r.r3, r.fields.join(", ")),
    };
    let bc = Outcome { passed: r.bc_max <= BC_TOL, detail: format!("largest masked dof of Π^g u, Π^c v, Π^d w: {:.1e}", r.bc_max) };
    Ok((diagram, bc))
}

fn delta_scaling() -> Result<Outcome> {
    let deltas = [0.4, 0.2, 0.1];
    let (s, _, _) = cube_fixture(deltas[0])?;
    let sw = delta_sweep(&s, &deltas, 2.0, &Space::ALL)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for ((space, norms), (_, slope)) in sw.norms.iter().zip(&sw.slopes) {
        let inside = (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(slope);
        ok &= inside;
        detail.push(format!(
            "{}: {} slope {:.3}{}",
            space.tag(),
            norms.iter().map(|n| format!("{n:.3}")).collect::<Vec<_>>().join("/"),
            slope,
            if inside { "" } else { " (out of range)" }
        ));
    }
    outcome(ok, detail.join("; "))
}

fn approximation_rates() -> Result<Outcome> {
    let params = BallParams { delta: 0.1, c: 2.0, h: None };
    let mut ok = true;
    let mut detail = Vec::new();
    for (space, min_rate) in [(Space::G, RATE_G), (Space::C, RATE_CD), (Space::D, RATE_CD)] {
        let input = ConvergenceInput::Catalog(CatalogField::for_space(space));
        let t = convergence(space, input, &[2, 4, 8], params, ProjectorOptions::default())?;
        let worst_ratio = t.levels.iter().map(|l| l.error / l.best).fold(0.0f64, f64::max);
        let oracle_ok = t.levels.iter().all(|l| l.error >= l.best * (1.0 - 1e-9));
        ok &= t.rate >= min_rate && oracle_ok;
        detail.push(format!("{}: rate {:.3} (best {:.3}), max error/best {:.2}", space.tag(), t.rate, t.best_rate, worst_ratio));
    }
    outcome(ok, detail.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Result<Outcome>)> = vec![
        (1, "expansion existence", expansion_existence()),
        (2, "transversality", transversality()),
        (3, "injectivity surrogate", injectivity()),
        (4, "cone property", cone_property()),
        (5, "discrete exactness", exactness()),
        (6, "canonical commutation", canonical_commutation()),
        (7, "kernel correctness", kernel_correctness()),
    ];
    match cube_fixture(0.1).and_then(|(s, b, _)| Ok((family(&s, &b)?, s))) {
        Ok((fam, s)) => {
            results.push((8, "projection and idempotence", projection(&fam)));
            match commuting(&fam, &s) {
                Ok((d, bc)) => {
                    results.push((9, "commuting diagram", Ok(d)));
                    results.push((10, "partial boundary conditions", Ok(bc)));
                }
                Err(e) => {
                    let msg = e.to_string();
                    results.push((9, "commuting diagram", Err(e)));
                    results.push((10, "partial boundary conditions", Err(lipexpand::Error::Invariant(msg))));
                }
            }
        }
        Err(e) => {
            let msg = e.to_string();
            for (k, name) in [(8, "projection and idempotence"), (9, "commuting diagram"), (10, "partial boundary conditions")] {
                results.push((k, name, Err(lipexpand::Error::Invariant(msg.clone()))));
            }
        }
    }
    results.push((11, "O(δ) smoothing norm", delta_scaling()));
    results.push((12, "approximation rates", approximation_rates()));

    let mut failed = 0;
    for (k, name, r) in &results {
        let (passed, detail) = match r {
            Ok(o) => (o.passed, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!("{} {k:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
