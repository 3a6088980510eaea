//! The pipeline stages behind each subcommand.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use lipexpand::expansion::{
    build_protrusion, default_thickness, estimate_t0_with, validate_expansion, ExpansionArtifact, SeparationOptions,
    TransportMap, ValidationOptions,
};
use lipexpand::fe::{build_complex, triplet_text, Space};
use lipexpand::mesh::{dissect_boundary, select_faces, write_vtk, Dissection, FacePredicate, TetMesh, VtkData};
use lipexpand::projector::setup::ProjectorSetup;
use lipexpand::projector::verify::{
    check_projection, convergence, delta_sweep, verify_commuting, ConvergenceInput, ProjectionReport, DEFAULT_FIELDS,
};
use lipexpand::projector::{BallParams, CatalogField, ProjectorFamily, ProjectorOptions};
use lipexpand::transversal::{
    build_box_cover, build_field, compute_transversality, transversality_on, ConstantField, DirectionField,
};
use lipexpand::Point3;

use crate::config::{FieldKind, RunConfig};

/// Failure of one pipeline stage; the stage decides the exit code.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: anyhow::Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self.stage {
            "load" => 1,
            "dissect" => 2,
            "projector" | "convergence" => 3,
            "validate" => 4,
            "field" => 5,
            "expand" => 6,
            "complex" => 7,
            _ => 8,
        }
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.error)?;
        let mut last = self.error.to_string();
        for cause in self.error.chain().skip(1) {
            let c = cause.to_string();
            if !last.contains(&c) {
                write!(f, ": {c}")?;
            }
            last = c;
        }
        Ok(())
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> StageResult<T>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> StageResult<T> {
        self.map_err(|e| StageError { stage, error: e.into() })
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> StageResult<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).stage("output")?;
    let p = dir.join(name);
    std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display())).stage("output")
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> StageResult<()> {
    let mut s = serde_json::to_string_pretty(value).stage("output")?;
    s.push('\n');
    write_file(dir, name, &s)
}

fn stamp(cfg: &RunConfig) -> serde_json::Value {
    json!({ "version": env!("CARGO_PKG_VERSION"), "seed": cfg.seed })
}

struct Domain {
    mesh: TetMesh,
    gamma: Vec<usize>,
    dissection: Dissection,
}

fn load_and_dissect(cfg: &RunConfig) -> StageResult<Domain> {
    cfg.validate().stage("load")?;
    let mesh = cfg.load_mesh().stage("load")?;
    let pred = FacePredicate::parse(&cfg.gamma).stage("dissect")?;
    let gamma = select_faces(&mesh, &pred);
    let dissection = dissect_boundary(&mesh, &gamma).stage("dissect")?;
    Ok(Domain { mesh, gamma, dissection })
}

struct BuiltField {
    field: Arc<dyn DirectionField>,
    kappa: f64,
    summary: serde_json::Value,
}

fn mean_gamma_normal(d: &Domain) -> Point3 {
    d.dissection.gamma_faces.iter().fold(Point3::zero(), |acc, &f| acc + d.mesh.face_area_normal(f))
}

fn field_stage(cfg: &RunConfig, d: &Domain) -> StageResult<BuiltField> {
    match cfg.transport {
        FieldKind::Blended => {
            let cover = build_box_cover(&d.mesh, &d.dissection).stage("field")?;
            let mut f = build_field(cover).stage("field")?;
            let kappa = compute_transversality(&mut f, &d.mesh, 4).stage("field")?;
            let summary = serde_json::to_value(f.summary()).stage("field")?;
            Ok(BuiltField { field: Arc::new(f), kappa, summary })
        }
        FieldKind::Constant => {
            let f = ConstantField::new(mean_gamma_normal(d)).stage("field")?;
            let kappa = transversality_on(&f, &d.mesh, &d.dissection.gamma_faces, 4);
            if !(kappa > 0.0) {
                return Err(anyhow!("constant field is not transversal on Γ (kappa = {kappa})")).stage("field");
            }
            let summary = json!({ "kappa": kappa, "direction": f.direction });
            Ok(BuiltField { field: Arc::new(f), kappa, summary })
        }
    }
}

fn default_theta(cfg: &RunConfig) -> f64 {
    cfg.theta.unwrap_or(match cfg.transport {
        FieldKind::Blended => PI / 16.0,
        FieldKind::Constant => PI / 8.0,
    })
}

/// Transport directions at the boundary vertices (zero inside).
fn vertex_directions(mesh: &TetMesh, field: &dyn DirectionField) -> Vec<Point3> {
    let mut on_boundary = vec![false; mesh.num_vertices()];
    for tri in &mesh.boundary_faces {
        for &v in tri {
            on_boundary[v] = true;
        }
    }
    mesh.vertices.iter().zip(&on_boundary).map(|(&p, &b)| if b { field.direction(p) } else { Point3::zero() }).collect()
}

pub fn cmd_field(cfg: &RunConfig) -> StageResult<()> {
    let d = load_and_dissect(cfg)?;
    let f = field_stage(cfg, &d)?;
    let data = VtkData { point_vectors: vec![("direction".into(), vertex_directions(&d.mesh, f.field.as_ref()))], ..Default::default() };
    write_file(&cfg.out, "field.vtk", &write_vtk(&d.mesh, "transversal field", &data))?;
    write_json(&cfg.out, "field.json", &json!({ "run": stamp(cfg), "gamma_faces": d.gamma.len(), "kappa": f.kappa, "field": f.summary }))?;
    println!("kappa {:.6}", f.kappa);
    Ok(())
}

pub fn cmd_expand(cfg: &RunConfig) -> StageResult<()> {
    let d = load_and_dissect(cfg)?;
    let f = field_stage(cfg, &d)?;
    let map = TransportMap::new(f.field.clone());
    let s_max = cfg.t.unwrap_or(0.5 * d.mesh.bbox().diagonal());
    let sep = SeparationOptions { seed: cfg.seed, ..Default::default() };
    let t0 = estimate_t0_with(&map, &d.mesh, &d.dissection, s_max, cfg.pairs, sep).stage("expand")?;
    let t = match cfg.t {
        Some(t) if t0.t0 < t => {
            return Err(anyhow!("t = {t} fails the separation check (t0 = {})", t0.t0)).stage("expand");
        }
        Some(t) => t,
        None => default_thickness(t0.t0, &d.mesh, &d.dissection, f.kappa),
    };
    let expanded = build_protrusion(&d.mesh, &d.dissection, &map, t, cfg.layers.max(1)).stage("expand")?;
    let theta = default_theta(cfg);
    let opts = ValidationOptions { seed: cfg.seed, ..ValidationOptions::new(theta, t / 2.0) };
    let checks = validate_expansion(&expanded, &d.mesh, &d.dissection, &opts).stage("validate")?;

    write_file(&cfg.out, "omega_e.vtk", &write_vtk(&expanded.omega_e, "protrusion", &VtkData::default()))?;
    write_file(&cfg.out, "omega_tilde.vtk", &write_vtk(&expanded.omega_tilde, "expanded domain", &VtkData::default()))?;
    let passed = checks.passed;
    let report = json!({
        "run": stamp(cfg),
        "t0_estimate": t0,
        "t_used": t,
        "kappa": f.kappa,
        "field": f.summary,
        "theta": theta,
        "height": t / 2.0,
        "checks": checks,
    });
    write_json(&cfg.out, "report.json", &report)?;
    let artifact = ExpansionArtifact { original: d.mesh, dissection: d.dissection, expanded, t0_estimate: Some(t0.t0), kappa: Some(f.kappa) };
    write_json(&cfg.out, "expansion.json", &artifact)?;
    println!("t0 {:.6} t {:.6} kappa {:.6} checks {}", t0.t0, t, f.kappa, if passed { "pass" } else { "fail" });
    if !passed {
        return Err(anyhow!("expansion checks failed; see report.json")).stage("validate");
    }
    Ok(())
}

pub fn cmd_validate(cfg: &RunConfig, artifact: Option<&Path>) -> StageResult<()> {
    let path = artifact.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join("expansion.json"));
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display())).stage("load")?;
    let a: ExpansionArtifact = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).stage("load")?;
    let t = a.expanded.t;
    let theta = default_theta(cfg);
    let opts = ValidationOptions { seed: cfg.seed, ..ValidationOptions::new(theta, t / 2.0) };
    let checks = validate_expansion(&a.expanded, &a.original, &a.dissection, &opts).stage("validate")?;
    let passed = checks.passed;
    write_json(&cfg.out, "validate.json", &json!({ "run": stamp(cfg), "t": t, "theta": theta, "checks": checks }))?;
    println!("checks {}", if passed { "pass" } else { "fail" });
    if !passed {
        return Err(anyhow!("expansion checks failed; see validate.json")).stage("validate");
    }
    Ok(())
}

pub fn cmd_complex(cfg: &RunConfig) -> StageResult<()> {
    cfg.validate().stage("load")?;
    let mesh = cfg.load_mesh().stage("load")?;
    let cx = build_complex(&mesh).stage("complex")?;
    let ex = cx.exactness();
    for (s, name) in [(Space::G, "G.txt"), (Space::C, "C.txt"), (Space::D, "D.txt")] {
        write_file(&cfg.out, name, &triplet_text(cx.incidence(s).expect("incidence exists")))?;
    }
    let dims: Vec<_> = Space::ALL.iter().map(|&s| json!({ "space": s, "dim": cx.dim(s) })).collect();
    let exact = ex.exact;
    write_json(&cfg.out, "complex.json", &json!({ "run": stamp(cfg), "dims": dims, "exactness": ex }))?;
    println!("dims {} exact {:?}", Space::ALL.map(|s| cx.dim(s).to_string()).join(" "), exact);
    if !(ex.cg_zero && ex.dc_zero) {
        return Err(anyhow!("incidence products do not vanish")).stage("complex");
    }
    Ok(())
}

#[derive(Serialize)]
struct SpaceReport {
    space: Space,
    dim: usize,
    norm_estimate: f64,
    condition: f64,
    projection: ProjectionReport,
}

pub fn cmd_project(cfg: &RunConfig) -> StageResult<()> {
    let d = load_and_dissect(cfg)?;
    let delta = cfg.delta();
    let max_delta = cfg.deltas.iter().copied().fold(delta, f64::max);
    let params = BallParams { delta, c: cfg.c, h: None };
    let thick = BallParams { delta: max_delta, ..params };
    let setup = ProjectorSetup::new(d.mesh, &d.gamma, &thick, cfg.t, cfg.layers).stage("projector")?;
    let balls = setup.balls(&params).stage("projector")?;
    let fam = ProjectorFamily::build(&setup.complex, &setup.dissection, &balls, &setup.extension, ProjectorOptions::default())
        .stage("projector")?;
    let commuting = verify_commuting(&fam, &setup.complex, DEFAULT_FIELDS, setup.extension.commutes()).stage("projector")?;
    let mut spaces = Vec::new();
    let only = cfg.space.as_deref().map(Space::parse).transpose().stage("load")?;
    let chosen = cfg.field.as_deref().map(CatalogField::parse).transpose().stage("load")?;
    if let (Some(s), Some(f)) = (only, chosen) {
        if f.space() != s {
            return Err(anyhow!("field {} lives in space {}, not {}", f.name(), f.space().tag(), s.tag())).stage("load");
        }
    }
    for set in &fam.sets {
        let projection = check_projection(set, 5, cfg.seed).stage("projector")?;
        spaces.push(SpaceReport { space: set.space, dim: set.dim(), norm_estimate: set.norm_estimate, condition: set.condition, projection });
        let f = match chosen {
            Some(f) if f.space() == set.space => f,
            Some(_) => continue,
            None if only.is_some_and(|s| s != set.space) => continue,
            None => CatalogField::for_space(set.space),
        };
        let dofs = set.project_field(&setup.complex, f).stage("projector")?;
        write_json(&cfg.out, &format!("dofs_{}.json", set.space.tag()), &json!({ "space": set.space, "field": f.name(), "values": dofs }))?;
    }
    let sweep = if cfg.deltas.len() > 1 {
        let mut ds = cfg.deltas.clone();
        ds.sort_by(|a, b| b.total_cmp(a));
        let s = delta_sweep(&setup, &ds, cfg.c, &Space::ALL).stage("projector")?;
        let in_range: Vec<_> = s.slopes.iter().map(|(sp, k)| json!({ "space": sp, "slope": k, "in_range": (0.7..=1.3).contains(k) })).collect();
        Some(json!({ "sweep": s, "slope_checks": in_range }))
    } else {
        None
    };
    write_json(
        &cfg.out,
        "project.json",
        &json!({
            "run": stamp(cfg),
            "delta": delta,
            "c": cfg.c,
            "h": setup.h,
            "exact_extension": setup.extension.commutes(),
            "shifted_balls": balls.shifted.iter().filter(|&&s| s).count(),
            "projectors": spaces,
            "commuting": commuting,
            "delta_sweep": sweep,
        }),
    )?;
    println!("residuals {:.3e} {:.3e} {:.3e} bc {:.3e}", commuting.r1, commuting.r2, commuting.r3, commuting.bc_max);
    for s in &spaces {
        println!("{} norm {:.4} condition {:.3}", s.space.tag(), s.norm_estimate, s.condition);
    }
    Ok(())
}

pub fn cmd_convergence(cfg: &RunConfig) -> StageResult<()> {
    cfg.validate().stage("load")?;
    if cfg.ladder.len() < 3 {
        return Err(anyhow!("the refinement ladder needs at least three levels")).stage("load");
    }
    let space = Space::parse(cfg.space.as_deref().unwrap_or("g")).stage("load")?;
    let input = match cfg.field.as_deref() {
        None => ConvergenceInput::Catalog(CatalogField::for_space(space)),
        Some(s) => match s.strip_prefix("coarse:") {
            Some(name) => ConvergenceInput::CoarseInterpolant(CatalogField::parse(name).stage("load")?),
            None if s == "coarse" => ConvergenceInput::CoarseInterpolant(CatalogField::for_space(space)),
            None => ConvergenceInput::Catalog(CatalogField::parse(s).stage("load")?),
        },
    };
    let params = BallParams { delta: cfg.delta(), c: cfg.c, h: None };
    let table = convergence(space, input, &cfg.ladder, params, ProjectorOptions::default()).stage("convergence")?;
    let text = table.to_text();
    write_file(&cfg.out, &format!("convergence_{}.txt", space.tag()), &text)?;
    write_json(&cfg.out, &format!("convergence_{}.json", space.tag()), &json!({ "run": stamp(cfg), "table": table }))?;
    print!("{text}");
    Ok(())
}
