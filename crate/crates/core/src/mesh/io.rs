//! Plain-text mesh format.
//!
//! Whitespace-separated, 0-based indices, one record per line:
//!
//! ```text
//! v x y z          vertex
//! t i j k l        tetrahedron
//! f i j k label    optional boundary face label
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::TetMesh;
use crate::Point3;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TetMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Parse { line, message: format!("invalid number `{tok}`") })
}

pub fn parse_mesh(text: &str) -> Result<TetMesh> {
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let mut labels: Vec<([usize; 3], i64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        let expect = |n: usize| -> Result<()> {
            if toks.len() != n + 1 {
                Err(Error::Parse {
                    line,
                    message: format!("`{}` record needs {n} fields, found {}", toks[0], toks.len() - 1),
                })
            } else {
                Ok(())
            }
        };
        match toks[0] {
            "v" => {
                expect(3)?;
                vertices.push(Point3::new(
                    parse_num(toks[1], line)?,
                    parse_num(toks[2], line)?,
                    parse_num(toks[3], line)?,
                ));
            }
            "t" => {
                expect(4)?;
                tets.push([
                    parse_num(toks[1], line)?,
                    parse_num(toks[2], line)?,
                    parse_num(toks[3], line)?,
                    parse_num(toks[4], line)?,
                ]);
            }
            "f" => {
                expect(4)?;
                labels.push((
                    [parse_num(toks[1], line)?, parse_num(toks[2], line)?, parse_num(toks[3], line)?],
                    parse_num(toks[4], line)?,
                ));
            }
            other => {
                return Err(Error::Parse { line, message: format!("unknown record `{other}`") });
            }
        }
    }
    let mesh = TetMesh::new(vertices, tets)?;
    let mut face_labels = vec![None; mesh.boundary_faces.len()];
    for (f, label) in labels {
        let idx = mesh
            .find_boundary_face(f)
            .ok_or_else(|| Error::Topology(format!("labelled face {f:?} is not a boundary face")))?;
        face_labels[idx] = Some(label);
    }
    Ok(mesh.with_labels(face_labels))
}

pub fn write_mesh(mesh: &TetMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for t in &mesh.tets {
        writeln!(s, "t {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    for (f, label) in mesh.boundary_faces.iter().zip(&mesh.face_labels) {
        if let Some(l) = label {
            writeln!(s, "f {} {} {} {l}", f[0], f[1], f[2]).unwrap();
        }
    }
    s
}
