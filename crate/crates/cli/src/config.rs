//! Run configuration: a flat `key = value` file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use lipexpand::mesh::{box_mesh, load_mesh, lshape_mesh, TetMesh};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MeshSource {
    File(PathBuf),
    Box([usize; 3]),
    LShape(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FieldKind {
    /// Partition-of-unity blend of patch directions.
    Blended,
    /// Mean outward normal of Γ.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub gamma: String,
    pub t: Option<f64>,
    pub layers: usize,
    pub deltas: Vec<f64>,
    pub c: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub transport: FieldKind,
    /// Cone half-angle for validation; depends on the field when unset.
    pub theta: Option<f64>,
    pub pairs: usize,
    pub space: Option<String>,
    /// Catalogue test field, or `coarse:NAME` for its coarsest-level interpolant.
    pub field: Option<String>,
    pub ladder: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSource::Box([2, 2, 2]),
            gamma: "z==1".into(),
            t: None,
            layers: 2,
            deltas: vec![0.1],
            c: 2.0,
            out: PathBuf::from("out"),
            seed: lipexpand::sampling::DEFAULT_SEED,
            transport: FieldKind::Blended,
            theta: None,
            pairs: 10_000,
            space: None,
            field: None,
            ladder: vec![2, 4, 8],
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| anyhow!("bad list entry `{}`", x.trim())))
        .collect()
}

impl RunConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let num = |v: &str| v.parse::<f64>().map_err(|_| anyhow!("bad number `{v}` for {key}"));
        match key.trim() {
            "mesh" => self.mesh = MeshSource::File(PathBuf::from(v)),
            "box" => {
                let n: Vec<usize> = parse_list(v)?;
                match n[..] {
                    [a] => self.mesh = MeshSource::Box([a, a, a]),
                    [a, b, c] => self.mesh = MeshSource::Box([a, b, c]),
                    _ => bail!("box needs NX,NY,NZ"),
                }
            }
            "lshape" => self.mesh = MeshSource::LShape(v.parse()?),
            "gamma" => self.gamma = v.to_string(),
            "t" => self.t = if v == "auto" { None } else { Some(num(v)?) },
            "layers" => self.layers = v.parse()?,
            "delta" => self.deltas = parse_list(v)?,
            "c" => self.c = num(v)?,
            "out" => self.out = PathBuf::from(v),
            "seed" => self.seed = v.parse()?,
            "transport" => {
                self.transport = match v {
                    "blended" => FieldKind::Blended,
                    "constant" => FieldKind::Constant,
                    _ => bail!("transport must be blended or constant"),
                }
            }
            "theta" => self.theta = Some(num(v)?),
            "pairs" => self.pairs = v.parse()?,
            "space" => self.space = Some(v.to_string()),
            "field" => self.field = Some(v.to_string()),
            "ladder" => self.ladder = parse_list(v)?,
            k => bail!("unknown config key `{k}`"),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            self.set(k, v).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0)) {
            bail!("delta values must be positive");
        }
        if let MeshSource::Box(n) = self.mesh {
            if n.iter().any(|&k| k == 0) {
                bail!("box resolution must be positive");
            }
        }
        Ok(())
    }

    pub fn load_mesh(&self) -> Result<TetMesh> {
        Ok(match &self.mesh {
            MeshSource::File(p) => load_mesh(p).with_context(|| format!("loading mesh {}", p.display()))?,
            MeshSource::Box([a, b, c]) => box_mesh(*a, *b, *c),
            MeshSource::LShape(n) => lshape_mesh(*n),
        })
    }

    /// The projector δ: the smallest of the configured values.
    pub fn delta(&self) -> f64 {
        self.deltas.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# fixture\nbox = 3,2,1\ngamma = x==0\ndelta = 0.4, 0.2,0.1\nt = auto\npairs = 500\n").unwrap();
        assert_eq!(c.mesh, MeshSource::Box([3, 2, 1]));
        assert_eq!(c.deltas, vec![0.4, 0.2, 0.1]);
        assert_eq!(c.delta(), 0.1);
        assert_eq!(c.pairs, 500);
        c.set("t", "0.3").unwrap();
        assert_eq!(c.t, Some(0.3));
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("no equals sign").is_err());
    }

    #[test]
    fn rejects_nonpositive_delta() {
        let mut c = RunConfig::default();
        c.set("delta", "0.1,-0.2").unwrap();
        assert!(c.validate().is_err());
    }
}
