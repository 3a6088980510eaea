//! Lowest-order discrete de Rham complex on a tetrahedral mesh.
//!
//! Edges are oriented from the lower to the higher vertex index and faces
//! by their sorted vertex triple (normal `(b - a) × (c - a)`). Degrees of
//! freedom are vertex values, edge circulations, face fluxes and cell
//! integrals.

mod whitney;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Csr};
use crate::mesh::{Dissection, TetMesh, TET_EDGES, TET_FACES};
use crate::quadrature;
use crate::Point3;

pub use whitney::LocalTet;

/// Dof count above which exactness is not checked by rank.
pub const MAX_RANK_DOFS: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "o")]
    O,
}

impl Space {
    pub const ALL: [Space; 4] = [Space::G, Space::C, Space::D, Space::O];

    pub fn tag(self) -> &'static str {
        match self {
            Space::G => "g",
            Space::C => "c",
            Space::D => "d",
            Space::O => "o",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(Space::G),
            "c" => Ok(Space::C),
            "d" => Ok(Space::D),
            "o" => Ok(Space::O),
            _ => Err(Error::InvalidParameter(format!("unknown space '{s}' (expected g, c, d or o)"))),
        }
    }

    pub fn next(self) -> Option<Space> {
        match self {
            Space::G => Some(Space::C),
            Space::C => Some(Space::D),
            Space::D => Some(Space::O),
            Space::O => None,
        }
    }

    /// Scalar-valued spaces (vertex and cell functions).
    pub fn is_scalar(self) -> bool {
        matches!(self, Space::G | Space::O)
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Point3),
}

impl Value {
    pub fn scalar(self) -> f64 {
        match self {
            Value::Scalar(s) => s,
            Value::Vector(_) => panic!("vector value used as scalar"),
        }
    }

    pub fn vector(self) -> Point3 {
        match self {
            Value::Vector(v) => v,
            Value::Scalar(_) => panic!("scalar value used as vector"),
        }
    }
}

/// A pointwise evaluator for the input of an interpolant.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Scalar(&'a (dyn Fn(Point3) -> f64 + Sync)),
    Vector(&'a (dyn Fn(Point3) -> Point3 + Sync)),
}

impl Field<'_> {
    fn scalar_at(&self, p: Point3) -> Result<f64> {
        let v = match self {
            Field::Scalar(f) => f(p),
            Field::Vector(_) => return Err(Error::SpaceMismatch { expected: "scalar field".into(), got: "vector field".into() }),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluator(format!("non-finite value at {p:?}")))
        }
    }

    fn vector_at(&self, p: Point3) -> Result<Point3> {
        let v = match self {
            Field::Vector(f) => f(p),
            Field::Scalar(_) => return Err(Error::SpaceMismatch { expected: "vector field".into(), got: "scalar field".into() }),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluator(format!("non-finite value at {p:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DofVector {
    pub space: Space,
    pub values: Vec<f64>,
}

impl DofVector {
    pub fn new(space: Space, values: Vec<f64>) -> Self {
        Self { space, values }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dof vector serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
    }
}

/// Dofs supported on Γ̄ for one space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcMask {
    pub space: Space,
    pub indices: Vec<usize>,
}

impl BcMask {
    pub fn flags(&self, n: usize) -> Vec<bool> {
        let mut f = vec![false; n];
        for &i in &self.indices {
            f[i] = true;
        }
        f
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub cg_zero: bool,
    pub dc_zero: bool,
    /// False when the dof count exceeded [`MAX_RANK_DOFS`].
    pub ranks_checked: bool,
    pub rank_g: Option<usize>,
    pub rank_c: Option<usize>,
    pub rank_d: Option<usize>,
    pub dim_ker_c: Option<usize>,
    pub dim_ker_d: Option<usize>,
    pub exact: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct FeComplex {
    pub mesh: TetMesh,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    /// Global edge of each local edge `TET_EDGES[k]`.
    pub tet_edges: Vec<[usize; 6]>,
    /// Global face opposite each local vertex.
    pub tet_faces: Vec<[usize; 4]>,
    pub local: Vec<LocalTet>,
    pub g: Csr<i64>,
    pub c: Csr<i64>,
    pub d: Csr<i64>,
}

/// Vertex triple of the face opposite local vertex `l`.
pub(crate) fn face_of(tet: [usize; 4], l: usize) -> [usize; 3] {
    TET_FACES[l].map(|i| tet[i])
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// Enumerate entities, assemble the signed incidences and check `CG = 0`,
/// `DC = 0`.
pub fn build_complex(mesh: &TetMesh) -> Result<FeComplex> {
    let mut edge_set = BTreeSet::new();
    let mut face_set = BTreeSet::new();
    for t in &mesh.tets {
        for [i, j] in TET_EDGES {
            edge_set.insert([t[i].min(t[j]), t[i].max(t[j])]);
        }
        for l in 0..4 {
            face_set.insert(sorted3(face_of(*t, l)));
        }
    }
    let edges: Vec<[usize; 2]> = edge_set.into_iter().collect();
    let faces: Vec<[usize; 3]> = face_set.into_iter().collect();
    let edge_id: BTreeMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let face_id: BTreeMap<[usize; 3], usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();

    let mut tet_edges = Vec::with_capacity(mesh.num_tets());
    let mut tet_faces = Vec::with_capacity(mesh.num_tets());
    let mut local = Vec::with_capacity(mesh.num_tets());
    let mut d_trip = Vec::new();
    for (k, t) in mesh.tets.iter().enumerate() {
        tet_edges.push(TET_EDGES.map(|[i, j]| edge_id[&[t[i].min(t[j]), t[i].max(t[j])]]));
        tet_faces.push(std::array::from_fn(|l| face_id[&sorted3(face_of(*t, l))]));
        let lt = LocalTet::new(mesh.tet_points(k), *t);
        for l in 0..4 {
            d_trip.push((k, tet_faces[k][l], lt.face_sign[l] as i64));
        }
        local.push(lt);
    }
    let g_trip: Vec<(usize, usize, i64)> = edges.iter().enumerate().flat_map(|(e, &[a, b])| [(e, a, -1), (e, b, 1)]).collect();
    let c_trip: Vec<(usize, usize, i64)> = faces
        .iter()
        .enumerate()
        .flat_map(|(f, &[a, b, c])| [(f, edge_id[&[a, b]], 1), (f, edge_id[&[b, c]], 1), (f, edge_id[&[a, c]], -1)])
        .collect();
    let g = Csr::from_triplets(edges.len(), mesh.num_vertices(), &g_trip);
    let c = Csr::from_triplets(faces.len(), edges.len(), &c_trip);
    let d = Csr::from_triplets(mesh.num_tets(), faces.len(), &d_trip);

    // every interior face must be seen with opposite signs from its two cells
    let mut face_sum = vec![0i64; faces.len()];
    let mut face_count = vec![0usize; faces.len()];
    for (_, f, s) in &d_trip {
        face_sum[*f] += s;
        face_count[*f] += 1;
    }
    for f in 0..faces.len() {
        if face_count[f] == 2 && face_sum[f] != 0 {
            return Err(Error::Invariant(format!("face {:?} has inconsistent orientation", faces[f])));
        }
    }
    for (bf, tri) in mesh.boundary_faces.iter().enumerate() {
        let f = face_id[&sorted3(*tri)];
        let owner = mesh.boundary_owner[bf];
        let l = (0..4).find(|&l| tet_faces[owner][l] == f).unwrap();
        let n_sorted = {
            let [a, b, c] = faces[f].map(|v| mesh.vertices[v]);
            (b - a).cross(c - a)
        };
        let agrees = n_sorted.dot(mesh.face_area_normal(bf)) > 0.0;
        if agrees != (local[owner].face_sign[l] > 0.0) {
            return Err(Error::Invariant(format!("boundary face {bf} orientation disagrees with the mesh")));
        }
    }
    let cx = FeComplex { mesh: mesh.clone(), edges, faces, tet_edges, tet_faces, local, g, c, d };
    if !cx.c.matmul(&cx.g).is_zero() || !cx.d.matmul(&cx.c).is_zero() {
        return Err(Error::Invariant("incidence matrices do not form a complex".into()));
    }
    Ok(cx)
}

impl FeComplex {
    pub fn dim(&self, space: Space) -> usize {
        match space {
            Space::G => self.mesh.num_vertices(),
            Space::C => self.edges.len(),
            Space::D => self.faces.len(),
            Space::O => self.mesh.num_tets(),
        }
    }

    /// The incidence matrix leaving `space`.
    pub fn incidence(&self, space: Space) -> Option<&Csr<i64>> {
        match space {
            Space::G => Some(&self.g),
            Space::C => Some(&self.c),
            Space::D => Some(&self.d),
            Space::O => None,
        }
    }

    /// Global dofs of tetrahedron `t` in `space`, in local order.
    pub fn tet_dofs(&self, space: Space, t: usize) -> Vec<usize> {
        match space {
            Space::G => self.mesh.tets[t].to_vec(),
            Space::C => self.tet_edges[t].to_vec(),
            Space::D => self.tet_faces[t].to_vec(),
            Space::O => vec![t],
        }
    }

    pub fn exactness(&self) -> ExactnessReport {
        let cg_zero = self.c.matmul(&self.g).is_zero();
        let dc_zero = self.d.matmul(&self.c).is_zero();
        let total: usize = Space::ALL.iter().map(|&s| self.dim(s)).sum();
        if total > MAX_RANK_DOFS {
            return ExactnessReport {
                cg_zero,
                dc_zero,
                ranks_checked: false,
                rank_g: None,
                rank_c: None,
                rank_d: None,
                dim_ker_c: None,
                dim_ker_d: None,
                exact: None,
            };
        }
        let rg = linalg::rank_mod_p(&self.g);
        let rc = linalg::rank_mod_p(&self.c);
        let rd = linalg::rank_mod_p(&self.d);
        let kc = self.edges.len() - rc;
        let kd = self.faces.len() - rd;
        ExactnessReport {
            cg_zero,
            dc_zero,
            ranks_checked: true,
            rank_g: Some(rg),
            rank_c: Some(rc),
            rank_d: Some(rd),
            dim_ker_c: Some(kc),
            dim_ker_d: Some(kd),
            exact: Some(kc == rg && kd == rc),
        }
    }

    pub fn apply_d(&self, dofs: &DofVector) -> Result<DofVector> {
        let next = dofs.space.next().ok_or_else(|| Error::SpaceMismatch { expected: "g, c or d".into(), got: "o".into() })?;
        self.check_len(dofs)?;
        let m = self.incidence(dofs.space).unwrap().to_f64();
        Ok(DofVector::new(next, m.mul_vec(&dofs.values)))
    }

    fn check_len(&self, dofs: &DofVector) -> Result<()> {
        let n = self.dim(dofs.space);
        if dofs.values.len() != n {
            return Err(Error::Invariant(format!("{} dof vector has length {}, expected {n}", dofs.space, dofs.values.len())));
        }
        Ok(())
    }

    /// Canonical interpolant: vertex values, edge circulations, face fluxes,
    /// cell integrals.
    pub fn interpolate(&self, space: Space, f: Field<'_>) -> Result<DofVector> {
        let v = &self.mesh.vertices;
        let values = match space {
            Space::G => v.iter().map(|&p| f.scalar_at(p)).collect::<Result<Vec<_>>>()?,
            Space::C => self.edges.iter().map(|&[a, b]| edge_integral(&f, v[a], v[b])).collect::<Result<Vec<_>>>()?,
            Space::D => {
                self.faces.iter().map(|&[a, b, c]| face_flux(&f, v[a], v[b], v[c])).collect::<Result<Vec<_>>>()?
            }
            Space::O => (0..self.mesh.num_tets())
                .map(|t| cell_integral(&f, &self.mesh.tet_points(t)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(DofVector::new(space, values))
    }

    /// Evaluate the FE function with dofs `values` of `space` inside
    /// tetrahedron `t` at `p` (no containment check).
    pub fn evaluate_in(&self, space: Space, values: &[f64], t: usize, p: Point3) -> Value {
        let lt = &self.local[t];
        match space {
            Space::G => {
                let l = lt.barycentric(p);
                Value::Scalar((0..4).map(|i| l[i] * values[self.mesh.tets[t][i]]).sum())
            }
            Space::C => {
                let l = lt.barycentric(p);
                let mut acc = Point3::zero();
                for k in 0..6 {
                    acc += lt.edge_basis(k, &l) * values[self.tet_edges[t][k]];
                }
                Value::Vector(acc)
            }
            Space::D => {
                let mut acc = Point3::zero();
                for l in 0..4 {
                    acc += lt.face_basis(l, p) * values[self.tet_faces[t][l]];
                }
                Value::Vector(acc)
            }
            Space::O => Value::Scalar(values[t] / lt.volume),
        }
    }

    /// Values of the local basis functions of `t` at `p`, paired with their
    /// global dofs.
    pub fn local_basis(&self, space: Space, t: usize, p: Point3) -> Vec<(usize, Value)> {
        let lt = &self.local[t];
        match space {
            Space::G => {
                let l = lt.barycentric(p);
                (0..4).map(|i| (self.mesh.tets[t][i], Value::Scalar(l[i]))).collect()
            }
            Space::C => {
                let l = lt.barycentric(p);
                (0..6).map(|k| (self.tet_edges[t][k], Value::Vector(lt.edge_basis(k, &l)))).collect()
            }
            Space::D => (0..4).map(|l| (self.tet_faces[t][l], Value::Vector(lt.face_basis(l, p)))).collect(),
            Space::O => vec![(t, Value::Scalar(1.0 / lt.volume))],
        }
    }

    /// Point evaluation; points on shared faces use the lowest-index tet.
    pub fn evaluate(&self, dofs: &DofVector, p: Point3) -> Result<Value> {
        self.check_len(dofs)?;
        let t = self.mesh.locate(p).ok_or(Error::Outside(p))?;
        Ok(self.evaluate_in(dofs.space, &dofs.values, t, p))
    }

    /// Exterior derivative of the FE function inside `t` (constant per tet
    /// for c, d; gradient for g).
    pub fn derivative_in(&self, space: Space, values: &[f64], t: usize) -> Value {
        let lt = &self.local[t];
        match space {
            Space::G => Value::Vector((0..4).fold(Point3::zero(), |acc, i| acc + lt.grads[i] * values[self.mesh.tets[t][i]])),
            Space::C => Value::Vector((0..6).fold(Point3::zero(), |acc, k| acc + lt.edge_curl(k) * values[self.tet_edges[t][k]])),
            Space::D => Value::Scalar((0..4).map(|l| lt.face_div(l) * values[self.tet_faces[t][l]]).sum()),
            Space::O => Value::Scalar(0.0),
        }
    }

    pub fn bc_mask(&self, space: Space, dissection: &Dissection) -> BcMask {
        let m = &self.mesh;
        let indices = match space {
            Space::G => dissection.gamma_vertices(m),
            Space::C => {
                let ids: BTreeMap<[usize; 2], usize> = self.edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
                let mut v: Vec<usize> = dissection.gamma_edges(m).iter().map(|e| ids[e]).collect();
                v.sort_unstable();
                v
            }
            Space::D => {
                let ids: BTreeMap<[usize; 3], usize> = self.faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
                let mut v: Vec<usize> =
                    dissection.gamma_faces.iter().map(|&f| ids[&sorted3(m.boundary_faces[f])]).collect();
                v.sort_unstable();
                v
            }
            Space::O => Vec::new(),
        };
        BcMask { space, indices }
    }

    /// L² mass matrix of `space`.
    pub fn mass_matrix(&self, space: Space) -> Csr<f64> {
        let n = self.dim(space);
        let rule = quadrature::keast11::<f64>();
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for t in 0..self.mesh.num_tets() {
            let pts = self.mesh.tet_points(t);
            let vol = self.local[t].volume;
            for (l, w) in &rule {
                let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2] + pts[3] * l[3];
                let basis = self.local_basis(space, t, x);
                for (i, bi) in &basis {
                    for (j, bj) in &basis {
                        *rows[*i].entry(*j).or_default() += w * vol * value_dot(*bi, *bj);
                    }
                }
            }
        }
        Csr::from_row_maps(n, rows)
    }

    /// `‖f - u_h‖_{L²}` by tetrahedral quadrature.
    pub fn l2_error(&self, dofs: &DofVector, f: Field<'_>) -> Result<f64> {
        self.check_len(dofs)?;
        let rule = quadrature::keast11::<f64>();
        let mut acc = 0.0;
        for t in 0..self.mesh.num_tets() {
            let pts = self.mesh.tet_points(t);
            let vol = self.local[t].volume;
            for (l, w) in &rule {
                let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2] + pts[3] * l[3];
                let uh = self.evaluate_in(dofs.space, &dofs.values, t, x);
                let e = match uh {
                    Value::Scalar(s) => (f.scalar_at(x)? - s).powi(2),
                    Value::Vector(v) => (f.vector_at(x)? - v).norm_squared(),
                };
                acc += w * vol * e;
            }
        }
        Ok(acc.max(0.0).sqrt())
    }

    /// Right-hand side `(f, φ_i)` of the L² projection onto `space`.
    pub fn load_vector(&self, space: Space, f: Field<'_>) -> Result<Vec<f64>> {
        let rule = quadrature::keast11::<f64>();
        let mut b = vec![0.0; self.dim(space)];
        for t in 0..self.mesh.num_tets() {
            let pts = self.mesh.tet_points(t);
            let vol = self.local[t].volume;
            for (l, w) in &rule {
                let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2] + pts[3] * l[3];
                let fv = if space.is_scalar() { Value::Scalar(f.scalar_at(x)?) } else { Value::Vector(f.vector_at(x)?) };
                for (i, bi) in self.local_basis(space, t, x) {
                    b[i] += w * vol * value_dot(fv, bi);
                }
            }
        }
        Ok(b)
    }
}

pub(crate) fn value_dot(a: Value, b: Value) -> f64 {
    match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => x * y,
        (Value::Vector(x), Value::Vector(y)) => x.dot(y),
        _ => panic!("mixed scalar and vector values"),
    }
}

fn edge_integral(f: &Field<'_>, a: Point3, b: Point3) -> Result<f64> {
    let mut acc = 0.0;
    for (s, w) in quadrature::gauss_segment::<f64>() {
        acc += w * f.vector_at(a.lerp(b, s))?.dot(b - a);
    }
    Ok(acc)
}

fn face_flux(f: &Field<'_>, a: Point3, b: Point3, c: Point3) -> Result<f64> {
    let n = (b - a).cross(c - a) * 0.5;
    let mut acc = 0.0;
    for (l, w) in quadrature::dunavant6::<f64>() {
        acc += w * f.vector_at(a * l[0] + b * l[1] + c * l[2])?.dot(n);
    }
    Ok(acc)
}

fn cell_integral(f: &Field<'_>, p: &[Point3; 4]) -> Result<f64> {
    let vol = crate::geom::tet_signed_volume(p[0], p[1], p[2], p[3]);
    let mut acc = 0.0;
    for (l, w) in quadrature::keast11::<f64>() {
        acc += w * f.scalar_at(p[0] * l[0] + p[1] * l[1] + p[2] * l[2] + p[3] * l[3])?;
    }
    Ok(acc * vol)
}

/// Coordinate (triplet) text export: a `rows cols nnz` header followed by
/// one `i j value` line per stored entry.
pub fn triplet_text<T: Copy + Default + PartialEq + std::ops::AddAssign + fmt::Display>(m: &Csr<T>) -> String {
    let mut s = format!("{} {} {}\n", m.nrows, m.ncols, m.nnz());
    for i in 0..m.nrows {
        for (j, v) in m.row(i) {
            s.push_str(&format!("{i} {j} {v}\n"));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, dissect_boundary, lshape_mesh, select_faces, single_tet, FacePredicate};
    use proptest::prelude::*;

    fn cube(n: usize) -> FeComplex {
        build_complex(&box_mesh(n, n, n)).unwrap()
    }

    #[test]
    fn single_tet_counts_and_ranks() {
        let cx = build_complex(&single_tet()).unwrap();
        assert_eq!([cx.dim(Space::G), cx.dim(Space::C), cx.dim(Space::D), cx.dim(Space::O)], [4, 6, 4, 1]);
        let r = cx.exactness();
        assert_eq!((r.rank_g, r.rank_c, r.rank_d), (Some(3), Some(3), Some(1)));
        assert_eq!(r.exact, Some(true));
    }

    #[test]
    fn box_complex_is_exact() {
        for n in [1, 2] {
            let r = cube(n).exactness();
            assert!(r.cg_zero && r.dc_zero);
            assert_eq!(r.exact, Some(true), "{r:?}");
        }
        let r = build_complex(&lshape_mesh(1)).unwrap().exactness();
        assert_eq!(r.exact, Some(true));
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let cx = cube(2);
        let one = DofVector::new(Space::G, vec![1.0; cx.dim(Space::G)]);
        let g = cx.apply_d(&one).unwrap();
        assert_eq!(g.space, Space::C);
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert!(cx.apply_d(&DofVector::new(Space::O, vec![0.0; cx.dim(Space::O)])).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let cx = cube(2);
        let one = cx.interpolate(Space::G, Field::Scalar(&|_| 1.0)).unwrap();
        assert!(one.values.iter().all(|&v| v == 1.0));
        let ex = cx.interpolate(Space::C, Field::Vector(&|_| Point3::new(1.0, 0.0, 0.0))).unwrap();
        for (e, &[a, b]) in cx.edges.iter().enumerate() {
            let want = cx.mesh.vertices[b].x - cx.mesh.vertices[a].x;
            assert!((ex.values[e] - want).abs() < 1e-15);
        }
        let w = cx.interpolate(Space::D, Field::Vector(&|p| p)).unwrap();
        let ids: BTreeMap<[usize; 3], usize> = cx.faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut total = 0.0;
        for (bf, tri) in cx.mesh.boundary_faces.iter().enumerate() {
            let f = ids[&sorted3(*tri)];
            let [a, b, c] = cx.faces[f].map(|v| cx.mesh.vertices[v]);
            let sign = (b - a).cross(c - a).dot(cx.mesh.face_area_normal(bf)).signum();
            total += sign * w.values[f];
        }
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_interpolants_commute() {
        let cx = cube(2);
        let u = |p: Point3| p.x * p.x + p.y - 2.0 * p.y * p.z;
        let grad_u = |p: Point3| Point3::new(2.0 * p.x, 1.0 - 2.0 * p.z, -2.0 * p.y);
        let lhs = cx.interpolate(Space::C, Field::Vector(&grad_u)).unwrap();
        let rhs = cx.apply_d(&cx.interpolate(Space::G, Field::Scalar(&u)).unwrap()).unwrap();
        assert!(linalg::max_abs(&sub(&lhs.values, &rhs.values)) < 1e-12);

        let v = |p: Point3| Point3::new(p.y * p.z, p.x * p.x, p.x + p.z * p.y);
        let curl_v = |p: Point3| Point3::new(p.z - 0.0, p.y - 1.0, 2.0 * p.x - p.z);
        let lhs = cx.interpolate(Space::D, Field::Vector(&curl_v)).unwrap();
        let rhs = cx.apply_d(&cx.interpolate(Space::C, Field::Vector(&v)).unwrap()).unwrap();
        assert!(linalg::max_abs(&sub(&lhs.values, &rhs.values)) < 1e-12);

        let w = |p: Point3| Point3::new(p.x * p.y, p.z * p.z, p.x * p.z + p.y);
        let div_w = |p: Point3| p.y + p.x;
        let lhs = cx.interpolate(Space::O, Field::Scalar(&div_w)).unwrap();
        let rhs = cx.apply_d(&cx.interpolate(Space::D, Field::Vector(&w)).unwrap()).unwrap();
        assert!(linalg::max_abs(&sub(&lhs.values, &rhs.values)) < 1e-12);
    }

    fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    #[test]
    fn nodal_basis_is_lagrange() {
        let cx = cube(1);
        for j in 0..cx.dim(Space::G) {
            let mut e = vec![0.0; cx.dim(Space::G)];
            e[j] = 1.0;
            let d = DofVector::new(Space::G, e);
            for (i, &p) in cx.mesh.vertices.iter().enumerate() {
                let v = cx.evaluate(&d, p).unwrap().scalar();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(matches!(
            cx.evaluate(&DofVector::new(Space::G, vec![0.0; 8]), Point3::new(2.0, 0.0, 0.0)),
            Err(Error::Outside(_))
        ));
    }

    #[test]
    fn edge_function_reinterpolates_to_itself() {
        let cx = cube(2);
        for space in [Space::C, Space::D] {
            let values: Vec<f64> = (0..cx.dim(space)).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
            let dofs = DofVector::new(space, values.clone());
            let field = |p: Point3| cx.evaluate(&dofs, p).unwrap().vector();
            let back = cx.interpolate(space, Field::Vector(&field)).unwrap();
            assert!(linalg::max_abs(&sub(&back.values, &values)) < 1e-12, "{space}");
        }
    }

    #[test]
    fn rt_divergence_is_cellwise_constant() {
        let cx = cube(2);
        let values: Vec<f64> = (0..cx.dim(Space::D)).map(|i| (i as f64 * 0.37).sin()).collect();
        let dofs = DofVector::new(Space::D, values.clone());
        let div = cx.apply_d(&dofs).unwrap();
        for t in 0..cx.mesh.num_tets() {
            let from_d = div.values[t] / cx.local[t].volume;
            // central differences are exact for the affine RT field
            let c = cx.mesh.tet_points(t).iter().fold(Point3::zero(), |a, &p| a + p) * 0.25;
            let h = 1e-3;
            let mut fd = 0.0;
            for k in 0..3 {
                let e = Point3::axis(k) * h;
                let plus = cx.evaluate_in(Space::D, &values, t, c + e).vector().to_array()[k];
                let minus = cx.evaluate_in(Space::D, &values, t, c - e).vector().to_array()[k];
                fd += (plus - minus) / (2.0 * h);
            }
            assert!((fd - from_d).abs() < 1e-9);
            assert!((cx.derivative_in(Space::D, &values, t).scalar() - from_d).abs() < 1e-12);
        }
    }

    #[test]
    fn masks_on_cube_top() {
        let m = box_mesh(1, 1, 1);
        let d = dissect_boundary(&m, &select_faces(&m, &FacePredicate::parse("z==1").unwrap())).unwrap();
        let cx = build_complex(&m).unwrap();
        let g = cx.bc_mask(Space::G, &d);
        assert_eq!(g.indices.len(), 4);
        assert!(g.indices.iter().all(|&v| m.vertices[v].z == 1.0));
        let c = cx.bc_mask(Space::C, &d);
        assert_eq!(c.indices.len(), 5);
        let f = cx.bc_mask(Space::D, &d);
        assert_eq!(f.indices.len(), 2);
        assert!(cx.bc_mask(Space::O, &d).indices.is_empty());
        for &v in &d.pi_vertices() {
            assert!(g.indices.contains(&v));
        }
        for &e in &c.indices {
            assert!(cx.edges[e].iter().all(|&v| m.vertices[v].z == 1.0));
        }
    }

    #[test]
    fn mass_matrices_reproduce_volume() {
        let cx = cube(2);
        let mg = cx.mass_matrix(Space::G);
        let one = vec![1.0; cx.dim(Space::G)];
        assert!((linalg::dot(&one, &mg.mul_vec(&one)) - 1.0).abs() < 1e-13);
        let mo = cx.mass_matrix(Space::O);
        let cells = cx.interpolate(Space::O, Field::Scalar(&|_| 1.0)).unwrap();
        assert!((linalg::dot(&cells.values, &mo.mul_vec(&cells.values)) - 1.0).abs() < 1e-13);
        let ex = cx.interpolate(Space::C, Field::Vector(&|_| Point3::new(1.0, 0.0, 0.0))).unwrap();
        let mc = cx.mass_matrix(Space::C);
        assert!((linalg::dot(&ex.values, &mc.mul_vec(&ex.values)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn dof_json_roundtrip() {
        let d = DofVector::new(Space::C, vec![1.0, -2.5]);
        let s = d.to_json();
        assert_eq!(s, r#"{"space":"c","values":[1.0,-2.5]}"#);
        assert_eq!(DofVector::from_json(&s).unwrap(), d);
        let t = triplet_text(&cube(1).g);
        assert!(t.starts_with(&format!("{} 8 {}", cube(1).edges.len(), 2 * cube(1).edges.len())));
    }

    proptest! {
        #[test]
        fn nodal_partition_of_unity(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64) {
            let cx = build_complex(&box_mesh(2, 2, 2)).unwrap();
            let one = DofVector::new(Space::G, vec![1.0; cx.dim(Space::G)]);
            let v = cx.evaluate(&one, Point3::new(x, y, z)).unwrap().scalar();
            prop_assert!((v - 1.0).abs() < 1e-13);
        }

        #[test]
        fn random_dofs_satisfy_complex(seed in 0u64..1000) {
            let cx = build_complex(&box_mesh(2, 1, 1)).unwrap();
            let u: Vec<f64> = (0..cx.dim(Space::G)).map(|i| ((i as u64 * 7919 + seed) % 101) as f64).collect();
            let g = cx.apply_d(&DofVector::new(Space::G, u)).unwrap();
            let c = cx.apply_d(&g).unwrap();
            prop_assert!(c.values.iter().all(|&v| v == 0.0));
        }
    }
}
