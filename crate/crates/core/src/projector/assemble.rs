//! Assembly of `R = I ∘ S` in exchanged-integral form.
//!
//! The canonical dof of `S u` on an entity with vertices `a₀..a_k` equals
//! the kernel-weighted sum, over ball nodes `y_i` of those vertices, of the
//! integral of `u` over the simplex `[y₀..y_k]`: a point value, a line
//! integral, a flux or a volume integral. Because the discrete kernel
//! weights of every ball sum to one, `R` commutes with grad, curl and div
//! whenever these inner integrals are exact.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fe::{FeComplex, Space, Value};
use crate::geom::{Aabb, Plane};
use crate::projector::clip::{clip_polygon, clip_simplex, tet_planes, Polyhedron, Simplex};
use crate::projector::extension::Extension;
use crate::projector::fields::CatalogField;
use crate::quadrature::gauss_segment;
use crate::{Plane3, Point3};

/// Something whose integrals over oriented simplices can be taken, with
/// one output per column.
pub trait Source: Sync {
    /// Form type (0: scalar, 1: line, 2: flux, 3: density).
    fn space(&self) -> Space;
    fn ncols(&self) -> usize;
    /// Push `(column, ∫_s)` contributions.
    fn integrate(&self, s: &Simplex<f64>, out: &mut Vec<(usize, f64)>) -> Result<()>;
    /// Whether the source already carries its own extension beyond the mesh.
    fn is_extended(&self) -> bool {
        false
    }
}

/// `inner` seen through `extension`: its integral over `s` is taken over
/// the folded pieces of `s`.
pub struct Extended<'a> {
    pub inner: &'a dyn Source,
    pub extension: &'a Extension,
}

impl Source for Extended<'_> {
    fn space(&self) -> Space {
        self.inner.space()
    }

    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    fn integrate(&self, s: &Simplex<f64>, out: &mut Vec<(usize, f64)>) -> Result<()> {
        for piece in self.extension.pieces(s) {
            self.inner.integrate(&piece, out)?;
        }
        Ok(())
    }

    fn is_extended(&self) -> bool {
        true
    }
}

/// Pointwise evaluator, polynomial between `breaks`.
pub struct Evaluator<'a> {
    pub space: Space,
    pub eval: &'a (dyn Fn(Point3) -> Value + Sync),
    pub breaks: Vec<Plane3>,
}

/// Split `s` along every plane in `breaks`.
pub fn split_by_planes(s: &Simplex<f64>, breaks: &[Plane3]) -> Vec<Simplex<f64>> {
    let mut cur = vec![*s];
    for pl in breaks {
        let flip = Plane::new(-pl.normal, -pl.offset);
        let mut next = Vec::with_capacity(cur.len() * 2);
        for p in &cur {
            let ev: Vec<f64> = p.vertices().iter().map(|&v| pl.eval(v)).collect();
            if ev.iter().all(|&e| e <= 0.0) || ev.iter().all(|&e| e >= 0.0) || matches!(p, Simplex::Point(_)) {
                next.push(*p);
            } else {
                next.extend(clip_simplex(p, &[*pl]));
                next.extend(clip_simplex(p, &[flip]));
            }
        }
        cur = next;
    }
    cur
}

fn finite(v: Value, p: Point3) -> Result<Value> {
    let ok = match v {
        Value::Scalar(s) => s.is_finite(),
        Value::Vector(w) => w.is_finite(),
    };
    if ok {
        Ok(v)
    } else {
        Err(Error::Evaluator(format!("non-finite value at {p:?}")))
    }
}

/// Quadrature of a polynomial form over a simplex: Gauss (degree 7) on
/// segments, collapsed Gauss on triangles (degree 6) and tetrahedra
/// (degree 5).
pub fn integrate_form(space: Space, s: &Simplex<f64>, f: &dyn Fn(Point3) -> Result<Value>) -> Result<f64> {
    let g = gauss_segment::<f64>();
    Ok(match (*s, space) {
        (Simplex::Point(p), Space::G) => f(p)?.scalar(),
        (Simplex::Segment([a, b]), Space::C) => {
            let mut acc = 0.0;
            for &(t, w) in &g {
                acc += w * f(a.lerp(b, t))?.vector().dot(b - a);
            }
            acc
        }
        (Simplex::Triangle([a, b, c]), Space::D) => {
            let n = (b - a).cross(c - a);
            let mut acc = 0.0;
            for &(s1, w1) in &g {
                for &(s2, w2) in &g {
                    let p = a + (b - a) * s1 + (c - a) * (s2 * (1.0 - s1));
                    acc += w1 * w2 * (1.0 - s1) * f(p)?.vector().dot(n);
                }
            }
            acc
        }
        (Simplex::Tet([a, b, c, d]), Space::O) => {
            let det = 6.0 * crate::geom::tet_signed_volume(a, b, c, d);
            let mut acc = 0.0;
            for &(s1, w1) in &g {
                for &(s2, w2) in &g {
                    for &(s3, w3) in &g {
                        let u = s2 * (1.0 - s1);
                        let v = s3 * (1.0 - s1) * (1.0 - s2);
                        let p = a + (b - a) * s1 + (c - a) * u + (d - a) * v;
                        acc += w1 * w2 * w3 * (1.0 - s1) * (1.0 - s1) * (1.0 - s2) * f(p)?.scalar();
                    }
                }
            }
            acc * det
        }
        (_, sp) => {
            return Err(Error::SpaceMismatch { expected: format!("{}-form simplex", sp.tag()), got: format!("{s:?}") })
        }
    })
}

impl Source for Evaluator<'_> {
    fn space(&self) -> Space {
        self.space
    }

    fn ncols(&self) -> usize {
        1
    }

    fn integrate(&self, s: &Simplex<f64>, out: &mut Vec<(usize, f64)>) -> Result<()> {
        let f = |p: Point3| finite((self.eval)(p), p);
        for piece in split_by_planes(s, &self.breaks) {
            out.push((0, integrate_form(self.space, &piece, &f)?));
        }
        Ok(())
    }
}

/// Catalogue field as a source.
pub struct CatalogSource {
    pub field: CatalogField,
    breaks: Vec<Plane3>,
}

impl CatalogSource {
    pub fn new(field: CatalogField) -> Self {
        Self { field, breaks: field.break_planes() }
    }
}

impl Source for CatalogSource {
    fn space(&self) -> Space {
        self.field.space()
    }

    fn ncols(&self) -> usize {
        1
    }

    fn integrate(&self, s: &Simplex<f64>, out: &mut Vec<(usize, f64)>) -> Result<()> {
        let f = |p: Point3| Ok(self.field.eval(p));
        for piece in split_by_planes(s, &self.breaks) {
            out.push((0, integrate_form(self.space(), &piece, &f)?));
        }
        Ok(())
    }
}

/// The extended basis functions of one FE space, one column each.
pub struct FeBasis<'a> {
    pub complex: &'a FeComplex,
    pub space: Space,
    pub extension: Extension,
    planes: Vec<[Plane3; 4]>,
}

impl<'a> FeBasis<'a> {
    pub fn new(complex: &'a FeComplex, space: Space, extension: Extension) -> Self {
        let planes = (0..complex.mesh.num_tets()).map(|t| tet_planes(&complex.mesh.tet_points(t))).collect();
        Self { complex, space, extension, planes }
    }

    /// Exact integral of the local basis of `t` over `s` (inside `t`).
    fn local(&self, t: usize, s: &Simplex<f64>, out: &mut Vec<(usize, f64)>) {
        let cx = self.complex;
        let lt = &cx.local[t];
        match (*s, self.space) {
            (Simplex::Point(p), Space::G) => {
                let l = lt.barycentric(p);
                for i in 0..4 {
                    out.push((cx.mesh.tets[t][i], l[i]));
                }
            }
            (Simplex::Segment([a, b]), Space::C) => {
                let l = lt.barycentric((a + b) * 0.5);
                for k in 0..6 {
                    out.push((cx.tet_edges[t][k], lt.edge_basis(k, &l).dot(b - a)));
                }
            }
            (Simplex::Triangle([a, b, c]), Space::D) => {
                let m = (a + b + c) * (1.0 / 3.0);
                let n = (b - a).cross(c - a) * 0.5;
                for l in 0..4 {
                    out.push((cx.tet_faces[t][l], lt.face_basis(l, m).dot(n)));
                }
            }
            (Simplex::Tet(_), Space::O) => out.push((t, s.measure() / lt.volume)),
            _ => {}
        }
    }
}

impl Source for FeBasis<'_> {
    fn space(&self) -> Space {
        self.space
    }

    fn ncols(&self) -> usize {
        self.complex.dim(self.space)
    }

    fn is_extended(&self) -> bool {
        true
    }

    fn integrate(&self, s: &Simplex<f64>, out: &mut Vec<(usize, f64)>) -> Result<()> {
        match (s, self.space) {
            (Simplex::Tet(v), Space::O) => {
                self.densities(*v, out);
                return Ok(());
            }
            (Simplex::Triangle(v), Space::D) => {
                self.fluxes(*v, out);
                return Ok(());
            }
            _ => {}
        }
        let mesh = &self.complex.mesh;
        for piece in self.extension.pieces(s) {
            if let Simplex::Point(p) = piece {
                if let Some(t) = mesh.locate(p) {
                    self.local(t, &piece, out);
                }
                continue;
            }
            let verts = piece.vertices();
            let bb = Aabb::from_points(verts.iter().copied());
            for t in mesh.locator().candidates(&bb) {
                let planes = &self.planes[t];
                let mut cutting = [Plane::new(Point3::zero(), 0.0); 4];
                let mut n_cut = 0;
                let mut outside = false;
                for pl in planes {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &v in verts {
                        let e = pl.eval(v);
                        lo = lo.min(e);
                        hi = hi.max(e);
                    }
                    if lo >= 0.0 {
                        outside = true;
                        break;
                    }
                    if hi > 0.0 {
                        cutting[n_cut] = *pl;
                        n_cut += 1;
                    }
                }
                if outside {
                    continue;
                }
                if n_cut == 0 {
                    self.local(t, &piece, out);
                } else {
                    for sub in clip_simplex(&piece, &cutting[..n_cut]) {
                        self.local(t, &sub, out);
                    }
                }
            }
        }
        Ok(())
    }
}

impl FeBasis<'_> {
    /// Flux basis over a triangle, per folded polygon and mesh tetrahedron.
    fn fluxes(&self, v: [Point3; 3], out: &mut Vec<(usize, f64)>) {
        let mesh = &self.complex.mesh;
        for poly in self.extension.triangle_pieces(v) {
            let bb = Aabb::from_points(poly.iter().copied());
            for t in mesh.locator().candidates(&bb) {
                let mut cur = std::borrow::Cow::Borrowed(&poly);
                let mut outside = false;
                for pl in &self.planes[t] {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &p in cur.iter() {
                        let e = pl.eval(p);
                        lo = lo.min(e);
                        hi = hi.max(e);
                    }
                    if lo >= 0.0 {
                        outside = true;
                        break;
                    }
                    if hi > 0.0 {
                        let c = clip_polygon(&cur, pl);
                        if c.len() < 3 {
                            outside = true;
                            break;
                        }
                        cur = std::borrow::Cow::Owned(c);
                    }
                }
                if outside {
                    continue;
                }
                // flux of an affine field: value at the area centroid times the area vector
                let o = cur[0];
                let mut n = Point3::zero();
                let mut m = Point3::zero();
                for k in 1..cur.len() - 1 {
                    let a = (cur[k] - o).cross(cur[k + 1] - o) * 0.5;
                    n += a;
                    m += (o + cur[k] + cur[k + 1]) * (a.dot(a).sqrt() / 3.0);
                }
                let area: f64 = (1..cur.len() - 1).map(|k| (cur[k] - o).cross(cur[k + 1] - o).norm() * 0.5).sum();
                if area == 0.0 {
                    continue;
                }
                let c = m * (1.0 / area);
                let lt = &self.complex.local[t];
                for l in 0..4 {
                    out.push((self.complex.tet_faces[t][l], lt.face_basis(l, c).dot(n)));
                }
            }
        }
    }

    /// Density basis over a tetrahedron: clipped volumes of its folded
    /// pieces against each mesh tetrahedron.
    fn densities(&self, v: [Point3; 4], out: &mut Vec<(usize, f64)>) {
        let mesh = &self.complex.mesh;
        for (poly, sign) in self.extension.tet_pieces(v) {
            let bb = Aabb::from_points(poly.vertices());
            for t in mesh.locator().candidates(&bb) {
                let mut cur: Option<Polyhedron<f64>> = None;
                let mut outside = false;
                for pl in &self.planes[t] {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for p in cur.as_ref().unwrap_or(&poly).vertices() {
                        let e = pl.eval(p);
                        lo = lo.min(e);
                        hi = hi.max(e);
                    }
                    if lo >= 0.0 {
                        outside = true;
                        break;
                    }
                    if hi > 0.0 {
                        let c = cur.as_ref().unwrap_or(&poly).clip(pl);
                        if c.is_empty() {
                            outside = true;
                            break;
                        }
                        cur = Some(c);
                    }
                }
                if !outside {
                    let vol = cur.as_ref().unwrap_or(&poly).volume();
                    out.push((t, sign * vol / self.complex.local[t].volume));
                }
            }
        }
    }
}

/// A single FE function (dof values on `basis`), possibly on another mesh.
pub struct FeFunction<'a> {
    pub basis: FeBasis<'a>,
    pub values: &'a [f64],
}

impl Source for FeFunction<'_> {
    fn space(&self) -> Space {
        self.basis.space
    }

    fn ncols(&self) -> usize {
        1
    }

    fn is_extended(&self) -> bool {
        true
    }

    fn integrate(&self, s: &Simplex<f64>, out: &mut Vec<(usize, f64)>) -> Result<()> {
        let mut tmp = Vec::new();
        self.basis.integrate(s, &mut tmp)?;
        out.push((0, tmp.iter().map(|&(j, v)| v * self.values[j]).sum()));
        Ok(())
    }
}

/// Node simplices of the entity `row` of `space`, with their kernel weights.
fn for_each_node_simplex(
    space: Space,
    complex: &FeComplex,
    nodes: &[Vec<(Point3, f64)>],
    row: usize,
    mut f: impl FnMut(Simplex<f64>, f64) -> Result<()>,
) -> Result<()> {
    match space {
        Space::G => {
            for &(y, w) in &nodes[row] {
                f(Simplex::Point(y), w)?;
            }
        }
        Space::C => {
            let [a, b] = complex.edges[row];
            for &(ya, wa) in &nodes[a] {
                for &(yb, wb) in &nodes[b] {
                    f(Simplex::Segment([ya, yb]), wa * wb)?;
                }
            }
        }
        Space::D => {
            let [a, b, c] = complex.faces[row];
            for &(ya, wa) in &nodes[a] {
                for &(yb, wb) in &nodes[b] {
                    let wab = wa * wb;
                    for &(yc, wc) in &nodes[c] {
                        f(Simplex::Triangle([ya, yb, yc]), wab * wc)?;
                    }
                }
            }
        }
        Space::O => {
            let [a, b, c, d] = complex.mesh.tets[row];
            for &(ya, wa) in &nodes[a] {
                for &(yb, wb) in &nodes[b] {
                    for &(yc, wc) in &nodes[c] {
                        let wabc = wa * wb * wc;
                        for &(yd, wd) in &nodes[d] {
                            f(Simplex::Tet([ya, yb, yc, yd]), wabc * wd)?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Rows of `I ∘ S` applied to every column of `source`, for the entities
/// of `space` on `complex`.
pub fn assemble_rows(
    space: Space,
    complex: &FeComplex,
    nodes: &[Vec<(Point3, f64)>],
    source: &dyn Source,
) -> Result<Vec<BTreeMap<usize, f64>>> {
    if source.space() != space {
        return Err(Error::SpaceMismatch { expected: space.tag().into(), got: source.space().tag().into() });
    }
    (0..complex.dim(space))
        .into_par_iter()
        .map(|row| {
            let mut acc = BTreeMap::new();
            let mut buf = Vec::new();
            for_each_node_simplex(space, complex, nodes, row, |s, w| {
                buf.clear();
                source.integrate(&s, &mut buf)?;
                for &(j, v) in &buf {
                    *acc.entry(j).or_insert(0.0) += w * v;
                }
                Ok(())
            })?;
            Ok(acc)
        })
        .collect()
}

/// `I ∘ S` applied to a single-column source.
pub fn smoothed_dofs(space: Space, complex: &FeComplex, nodes: &[Vec<(Point3, f64)>], source: &dyn Source) -> Result<Vec<f64>> {
    Ok(assemble_rows(space, complex, nodes, source)?.into_iter().map(|r| r.get(&0).copied().unwrap_or(0.0)).collect())
}
