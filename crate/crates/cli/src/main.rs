mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Stage, StageResult};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "lipexpand", version, about = "Partial domain expansion and smoothed commuting projectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dissect, build the transversal field, estimate t0, extrude and validate.
    Expand(Common),
    /// Re-run the expansion checks on a saved expansion.json.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Expansion artifact; defaults to OUT/expansion.json.
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
    /// Build the transversal field and report κ.
    Field(Common),
    /// Build the FE complex and check exactness.
    Complex(Common),
    /// Build all four projectors, check the commuting diagram and sweep δ.
    Project(Common),
    /// Approximation errors of one projector on the unit cube ladder.
    Convergence(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh file.
    #[arg(long)]
    mesh: Option<String>,
    /// Generated unit box mesh NX,NY,NZ.
    #[arg(long = "box", value_name = "NX,NY,NZ")]
    box_dims: Option<String>,
    /// Generated L-shape with resolution N.
    #[arg(long)]
    lshape: Option<String>,
    /// Γ selection, e.g. "z==1" or "label=2".
    #[arg(long)]
    gamma: Option<String>,
    /// Protrusion thickness, or "auto".
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    layers: Option<String>,
    /// Ball radius factor; a comma list sweeps δ.
    #[arg(long)]
    delta: Option<String>,
    /// Ball shift factor.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Transport direction field: blended or constant.
    #[arg(long)]
    transport: Option<String>,
    /// Cone half-angle for validation.
    #[arg(long)]
    theta: Option<String>,
    /// Sampled pairs per separation check.
    #[arg(long)]
    pairs: Option<String>,
    /// FE space: g, c, d or o.
    #[arg(long)]
    space: Option<String>,
    /// Analytic test field, or coarse:NAME for its coarsest-level interpolant.
    #[arg(long)]
    field: Option<String>,
    /// Refinement ladder, e.g. 2,4,8.
    #[arg(long)]
    ladder: Option<String>,
}

impl Common {
    fn resolve(&self) -> StageResult<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            cfg.apply_file(p).stage("load")?;
        }
        let flags = [
            ("mesh", &self.mesh),
            ("box", &self.box_dims),
            ("lshape", &self.lshape),
            ("gamma", &self.gamma),
            ("t", &self.t),
            ("layers", &self.layers),
            ("delta", &self.delta),
            ("c", &self.c),
            ("out", &self.out),
            ("seed", &self.seed),
            ("transport", &self.transport),
            ("theta", &self.theta),
            ("pairs", &self.pairs),
            ("space", &self.space),
            ("field", &self.field),
            ("ladder", &self.ladder),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v).stage("load")?;
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> StageResult<()> {
    match cli.command {
        Command::Expand(c) => commands::cmd_expand(&c.resolve()?),
        Command::Validate { common, artifact } => commands::cmd_validate(&common.resolve()?, artifact.as_deref()),
        Command::Field(c) => commands::cmd_field(&c.resolve()?),
        Command::Complex(c) => commands::cmd_complex(&c.resolve()?),
        Command::Project(c) => commands::cmd_project(&c.resolve()?),
        Command::Convergence(c) => commands::cmd_convergence(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
