//! Boundary face selection by geometric predicates or labels.

use crate::error::{Error, Result};
use crate::mesh::TetMesh;

const COORD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
enum Cmp {
    Eq,
    Le,
    Ge,
    Lt,
    Gt,
}

#[derive(Clone, Debug, PartialEq)]
enum Atom {
    Coord { axis: usize, cmp: Cmp, value: f64 },
    Label(i64),
    All,
}

/// Union (`|` or `,`) of conjunctions (`&`) of atoms such as `z==1`,
/// `x<=0.5` or `label=3`. Coordinate atoms must hold at all three vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct FacePredicate {
    terms: Vec<Vec<Atom>>,
}

impl FacePredicate {
    pub fn parse(expr: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidParameter(format!("gamma expression `{expr}`: {m}"));
        let mut terms = Vec::new();
        for term in expr.split(['|', ',']) {
            let mut atoms = Vec::new();
            for atom in term.split('&') {
                let a = atom.trim();
                if a.is_empty() {
                    return Err(bad("empty term".into()));
                }
                if a == "all" {
                    atoms.push(Atom::All);
                    continue;
                }
                if let Some(rest) = a.strip_prefix("label") {
                    let v = rest.trim_start_matches(['=', ' ']).trim();
                    let l = v.parse().map_err(|_| bad(format!("bad label `{v}`")))?;
                    atoms.push(Atom::Label(l));
                    continue;
                }
                let axis = match a.chars().next() {
                    Some('x') => 0,
                    Some('y') => 1,
                    Some('z') => 2,
                    _ => return Err(bad(format!("unknown atom `{a}`"))),
                };
                let rest = a[1..].trim();
                let (cmp, num) = [("==", Cmp::Eq), ("<=", Cmp::Le), (">=", Cmp::Ge), ("<", Cmp::Lt), (">", Cmp::Gt), ("=", Cmp::Eq)]
                    .into_iter()
                    .find_map(|(op, c)| rest.strip_prefix(op).map(|n| (c, n.trim())))
                    .ok_or_else(|| bad(format!("missing comparison in `{a}`")))?;
                let value = num.parse().map_err(|_| bad(format!("bad number `{num}`")))?;
                atoms.push(Atom::Coord { axis, cmp, value });
            }
            terms.push(atoms);
        }
        Ok(Self { terms })
    }

    pub fn matches(&self, mesh: &TetMesh, face: usize) -> bool {
        let pts = mesh.face_points(face);
        self.terms.iter().any(|atoms| {
            atoms.iter().all(|a| match a {
                Atom::All => true,
                Atom::Label(l) => mesh.face_labels[face] == Some(*l),
                Atom::Coord { axis, cmp, value } => pts.iter().all(|p| {
                    let c = p[*axis];
                    match cmp {
                        Cmp::Eq => (c - value).abs() <= COORD_TOL,
                        Cmp::Le => c <= value + COORD_TOL,
                        Cmp::Ge => c >= value - COORD_TOL,
                        Cmp::Lt => c < value - COORD_TOL,
                        Cmp::Gt => c > value + COORD_TOL,
                    }
                }),
            })
        })
    }
}

/// Indices of the boundary faces matching `pred`.
pub fn select_faces(mesh: &TetMesh, pred: &FacePredicate) -> Vec<usize> {
    (0..mesh.boundary_faces.len()).filter(|&f| pred.matches(mesh, f)).collect()
}
