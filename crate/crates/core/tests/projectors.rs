use lipexpand::fe::Space;
use lipexpand::projector::setup::ProjectorSetup;
use lipexpand::projector::verify::{check_projection, convergence, delta_sweep, verify_commuting, ConvergenceInput, DEFAULT_FIELDS};
use lipexpand::projector::{build_projector, BallParams, CatalogField, ProjectorFamily, ProjectorOptions};
use lipexpand::Error;

fn params(delta: f64) -> BallParams {
    BallParams { delta, c: 2.0, h: None }
}

#[test]
fn family_commutes_projects_and_keeps_boundary_values() {
    let p = params(0.1);
    let s = ProjectorSetup::cube(2, &p).unwrap();
    let balls = s.balls(&p).unwrap();
    let fam = ProjectorFamily::build(&s.complex, &s.dissection, &balls, &s.extension, ProjectorOptions::default()).unwrap();
    for set in &fam.sets {
        assert!(set.norm_estimate < 0.5, "{set:?}");
        assert!(set.condition < 10.0, "{set:?}");
        let rep = check_projection(set, 5, 1).unwrap();
        assert!(rep.projection_error <= 1e-10, "{rep:?}");
        assert!(rep.idempotence_error <= 1e-9, "{rep:?}");
    }
    let rep = verify_commuting(&fam, &s.complex, DEFAULT_FIELDS, s.extension.commutes()).unwrap();
    assert!(rep.exact_extension);
    assert!(rep.max_residual() <= 1e-8, "{rep:?}");
    assert!(rep.bc_max <= 1e-12, "{rep:?}");
}

#[test]
fn small_delta_gives_small_norm_and_linear_scaling() {
    let s = ProjectorSetup::cube(2, &params(0.02)).unwrap();
    let sw = delta_sweep(&s, &[0.01, 0.02], 2.0, &Space::ALL).unwrap();
    for (space, v) in &sw.norms {
        assert!(v[0] < 0.1, "{space:?} {v:?}");
        let ratio = v[1] / v[0];
        assert!((1.4..=2.6).contains(&ratio), "{space:?} {v:?}");
    }
}

#[test]
fn oversized_delta_is_reported() {
    let s = ProjectorSetup::cube(2, &params(0.2)).unwrap();
    assert!(matches!(s.balls(&params(0.9)), Err(Error::Containment { .. })));

    let big = params(0.4);
    let s = ProjectorSetup::cube(2, &big).unwrap();
    let balls = s.balls(&big).unwrap();
    let r = build_projector(Space::D, &s.complex, &s.dissection, &balls, &s.extension, ProjectorOptions::default());
    assert!(matches!(r, Err(Error::NormTooLarge(n)) if n >= 1.0));
}

#[test]
fn scalar_projector_converges_at_second_order() {
    let t = convergence(Space::G, ConvergenceInput::Catalog(CatalogField::BumpScalar), &[2, 4], params(0.1), ProjectorOptions::default())
        .unwrap();
    assert!(t.rate >= 1.8, "{}", t.to_text());
    for l in &t.levels {
        assert!(l.error >= l.best * (1.0 - 1e-9), "{}", t.to_text());
        assert!(l.error <= 3.0 * l.best, "{}", t.to_text());
    }
}

#[test]
fn fe_inputs_are_reproduced() {
    for space in [Space::G, Space::C] {
        let f = CatalogField::for_space(space);
        let t = convergence(space, ConvergenceInput::CoarseInterpolant(f), &[2], params(0.1), ProjectorOptions::default()).unwrap();
        assert!(t.levels[0].error < 1e-10, "{}", t.to_text());
    }
}
