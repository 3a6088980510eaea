//! Transversal unit fields on the boundary built from a partition of unity
//! over planar face clusters and dedicated patches at exceptional points.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Aabb};
use crate::lipschitz::boundary_sample_points;
use crate::mesh::{Dissection, TetMesh};
use crate::Point3;

/// Normals closer than this (as unit vectors) belong to the same cluster.
pub const NORMAL_TOL: f64 = 1e-6;

/// A unit direction field on (a neighbourhood of) the boundary.
pub trait DirectionField: Send + Sync {
    fn direction(&self, p: Point3) -> Point3;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantField {
    pub direction: Point3,
}

impl ConstantField {
    pub fn new(d: Point3) -> Result<Self> {
        let direction = d
            .try_normalize(1e-300)
            .ok_or_else(|| Error::InvalidParameter("constant field direction is zero".into()))?;
        Ok(Self { direction })
    }
}

impl DirectionField for ConstantField {
    fn direction(&self, _p: Point3) -> Point3 {
        self.direction
    }
}

/// Edge-connected boundary faces sharing one outward normal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FacePatch {
    pub faces: Vec<usize>,
    pub normal: Point3,
    triangles: Vec<[Point3; 3]>,
    tri_boxes: Vec<Aabb<f64>>,
    bbox: Aabb<f64>,
}

impl FacePatch {
    fn distance(&self, p: Point3, cutoff: f64) -> f64 {
        if self.bbox.distance(p) >= cutoff {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for (t, b) in self.triangles.iter().zip(&self.tri_boxes) {
            if b.distance(p) >= best.min(cutoff) {
                continue;
            }
            best = best.min(geom::point_triangle_distance(p, t[0], t[1], t[2]));
        }
        best
    }
}

/// Patch reserved for an exceptional point of Π.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPatch {
    pub vertex: usize,
    pub point: Point3,
    pub direction: Point3,
    /// Core radius: only this patch is active in `B(point, radius)`; its
    /// weight falls to zero at `2 * radius`.
    pub radius: f64,
    /// False when the cover was built without dedicated patches; the radius
    /// is then only informative.
    pub dedicated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverOptions {
    pub dedicated_exceptional: bool,
    pub normal_tol: f64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self { dedicated_exceptional: true, normal_tol: NORMAL_TOL }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxCover {
    pub face_patches: Vec<FacePatch>,
    pub exceptional: Vec<ExceptionalPatch>,
    /// Boundary face -> owning face patch.
    pub owner: Vec<usize>,
    /// Width over which face bumps fall from one to zero.
    pub bump_width: f64,
}

impl BoxCover {
    pub fn n_patches(&self) -> usize {
        self.face_patches.len() + self.exceptional.iter().filter(|e| e.dedicated).count()
    }

    /// Replace the direction carried by a face patch.
    pub fn set_patch_direction(&mut self, patch: usize, d: Point3) {
        self.face_patches[patch].normal = d;
    }
}

pub fn build_box_cover(mesh: &TetMesh, dissection: &Dissection) -> Result<BoxCover> {
    build_box_cover_with(mesh, dissection, CoverOptions::default())
}

pub fn build_box_cover_with(mesh: &TetMesh, dissection: &Dissection, opts: CoverOptions) -> Result<BoxCover> {
    build_cover(mesh, &dissection.exceptional_points, opts)
}

/// Blend of face-cluster normals over the whole boundary with no
/// exceptional patches; used to pick inward cone axes on arbitrary meshes.
pub fn boundary_normal_field(mesh: &TetMesh) -> Result<TransversalField> {
    build_field(build_cover(mesh, &[], CoverOptions::default())?)
}

fn build_cover(mesh: &TetMesh, exceptional_points: &[usize], opts: CoverOptions) -> Result<BoxCover> {
    let nf = mesh.boundary_faces.len();
    let diag = mesh.bbox().diagonal();
    for f in 0..nf {
        if mesh.face_area(f) <= 1e-14 * diag * diag {
            return Err(Error::ZeroAreaFace(f));
        }
    }
    let normals: Vec<Point3> = (0..nf).map(|f| mesh.face_normal(f)).collect();
    let edge_faces = mesh.boundary_edge_faces();
    let mut owner = vec![usize::MAX; nf];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..nf {
        if owner[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![seed];
        owner[seed] = id;
        let mut stack = vec![seed];
        while let Some(f) = stack.pop() {
            let tri = mesh.boundary_faces[f];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                for &g in &edge_faces[&[a.min(b), a.max(b)]] {
                    if owner[g] == usize::MAX && (normals[g] - normals[seed]).norm() <= opts.normal_tol {
                        owner[g] = id;
                        members.push(g);
                        stack.push(g);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    let face_patches: Vec<FacePatch> = clusters
        .into_iter()
        .map(|faces| {
            let triangles: Vec<[Point3; 3]> = faces.iter().map(|&f| mesh.face_points(f)).collect();
            let tri_boxes: Vec<Aabb<f64>> = triangles.iter().map(|t| Aabb::from_points(*t)).collect();
            let bbox = Aabb::from_points(triangles.iter().flatten().copied());
            let normal = normals[faces[0]];
            FacePatch { faces, normal, triangles, tri_boxes, bbox }
        })
        .collect();

    let patch_vertices: Vec<BTreeSet<usize>> = face_patches
        .iter()
        .map(|p| p.faces.iter().flat_map(|&f| mesh.boundary_faces[f]).collect())
        .collect();
    let mut nt_dist = f64::INFINITY;
    for i in 0..face_patches.len() {
        for j in i + 1..face_patches.len() {
            if patch_vertices[i].is_disjoint(&patch_vertices[j]) {
                nt_dist = nt_dist.min(patch_distance(&face_patches[i], &face_patches[j]));
            }
        }
    }
    let bump_width = if nt_dist.is_finite() {
        0.25 * nt_dist
    } else {
        let mut e = f64::INFINITY;
        for f in &mesh.boundary_faces {
            for k in 0..3 {
                e = e.min(mesh.vertices[f[k]].distance(mesh.vertices[f[(k + 1) % 3]]));
            }
        }
        0.25 * e
    };

    let mut exceptional = Vec::new();
    for &v in exceptional_points {
        let p = mesh.vertices[v];
        let incident: Vec<usize> = (0..face_patches.len()).filter(|&j| patch_vertices[j].contains(&v)).collect();
        let sum: Point3 = incident.iter().map(|&j| face_patches[j].normal).sum();
        let direction = sum.try_normalize(1e-9).ok_or(Error::CancellingNormals { point: p })?;
        let mut r = f64::INFINITY;
        for j in 0..face_patches.len() {
            if !incident.contains(&j) {
                r = r.min(0.5 * face_patches[j].distance(p, f64::INFINITY));
            }
        }
        for &w in exceptional_points {
            if w != v {
                r = r.min(0.25 * p.distance(mesh.vertices[w]));
            }
        }
        if !r.is_finite() {
            r = 0.25 * diag;
        }
        exceptional.push(ExceptionalPatch { vertex: v, point: p, direction, radius: r, dedicated: opts.dedicated_exceptional });
    }
    Ok(BoxCover { face_patches, exceptional, owner, bump_width })
}

fn patch_distance(a: &FacePatch, b: &FacePatch) -> f64 {
    let mut best = f64::INFINITY;
    for s in &a.triangles {
        for t in &b.triangles {
            best = best.min(triangle_distance(s, t));
        }
    }
    best
}

/// Distance between two triangles; the minimum is attained at a vertex of
/// one triangle or between a pair of edges.
fn triangle_distance(s: &[Point3; 3], t: &[Point3; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for &p in s {
        best = best.min(geom::point_triangle_distance(p, t[0], t[1], t[2]));
    }
    for &p in t {
        best = best.min(geom::point_triangle_distance(p, s[0], s[1], s[2]));
    }
    for i in 0..3 {
        for j in 0..3 {
            best = best.min(segment_distance(s[i], s[(i + 1) % 3], t[j], t[(j + 1) % 3]));
        }
    }
    best
}

pub(crate) fn segment_distance(p1: Point3, q1: Point3, p2: Point3, q2: Point3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(d1);
    let e = d2.dot(d2);
    let f = d2.dot(r);
    let (s, t);
    if a <= 1e-300 && e <= 1e-300 {
        return r.norm();
    }
    if a <= 1e-300 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= 1e-300 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

/// Cubic Hermite step: 0 at 0, 1 at 1, zero slope at both ends.
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Partition-of-unity weights at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    /// `(face patch, ψ)` for nonzero face weights.
    pub faces: Vec<(usize, f64)>,
    /// `(exceptional patch, ψ)` for nonzero exceptional weights.
    pub exceptional: Vec<(usize, f64)>,
}

impl Weights {
    pub fn total(&self) -> f64 {
        self.faces.iter().chain(&self.exceptional).map(|(_, w)| w).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransversalField {
    pub cover: BoxCover,
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExceptionalSummary {
    pub vertex: usize,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldSummary {
    pub kappa: Option<f64>,
    pub n_patches: usize,
    pub exceptional: Vec<ExceptionalSummary>,
}

/// Build the normalized blend and check it does not vanish at the
/// boundary samples of the cover.
pub fn build_field(cover: BoxCover) -> Result<TransversalField> {
    let field = TransversalField { cover, kappa: None };
    for p in field.cover_samples(2) {
        field.try_direction(p)?;
    }
    Ok(field)
}

impl TransversalField {
    pub fn weights(&self, p: Point3) -> Weights {
        let cover = &self.cover;
        let mut exc = Vec::new();
        let mut e_total = 0.0;
        for (i, e) in cover.exceptional.iter().enumerate() {
            if !e.dedicated {
                continue;
            }
            let d = p.distance(e.point);
            let w = if d <= e.radius { 1.0 } else { 1.0 - smoothstep((d - e.radius) / e.radius) };
            if w > 0.0 {
                exc.push((i, w));
                e_total += w;
            }
        }
        if e_total > 1.0 {
            for (_, w) in &mut exc {
                *w /= e_total;
            }
            e_total = 1.0;
        }
        let mut faces = Vec::new();
        if e_total < 1.0 {
            let wdt = cover.bump_width;
            let mut raw = Vec::new();
            let mut nearest = (f64::INFINITY, usize::MAX);
            for (j, patch) in cover.face_patches.iter().enumerate() {
                let d = patch.distance(p, wdt);
                if d < nearest.0 {
                    nearest = (d, j);
                }
                let w = 1.0 - smoothstep(d / wdt);
                if w > 0.0 {
                    raw.push((j, w));
                }
            }
            if raw.is_empty() {
                let j = if nearest.1 == usize::MAX { self.nearest_patch(p) } else { nearest.1 };
                raw.push((j, 1.0));
            }
            let s: f64 = raw.iter().map(|(_, w)| w).sum();
            faces = raw.into_iter().map(|(j, w)| (j, (1.0 - e_total) * w / s)).collect();
        }
        Weights { faces, exceptional: exc }
    }

    fn nearest_patch(&self, p: Point3) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (j, patch) in self.cover.face_patches.iter().enumerate() {
            let d = patch.distance(p, f64::INFINITY);
            if d < best.0 {
                best = (d, j);
            }
        }
        best.1
    }

    /// Unnormalized blend `Σ ψ_j ν_j`.
    pub fn raw_direction(&self, p: Point3) -> Point3 {
        let w = self.weights(p);
        let mut v = Point3::zero();
        for (j, psi) in w.faces {
            v += self.cover.face_patches[j].normal * psi;
        }
        for (i, psi) in w.exceptional {
            v += self.cover.exceptional[i].direction * psi;
        }
        v
    }

    pub fn try_direction(&self, p: Point3) -> Result<Point3> {
        let v = self.raw_direction(p);
        v.try_normalize(1e-12).ok_or(Error::CancellingNormals { point: p })
    }

    fn cover_samples(&self, density: usize) -> Vec<Point3> {
        let mut out = Vec::new();
        for patch in &self.cover.face_patches {
            for t in &patch.triangles {
                out.extend_from_slice(t);
                for k in 0..3 {
                    out.push(t[k].lerp(t[(k + 1) % 3], 0.5));
                }
                out.extend(crate::lipschitz::face_lattice(*t, density));
            }
        }
        out
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary {
            kappa: self.kappa,
            n_patches: self.cover.n_patches(),
            exceptional: self
                .cover
                .exceptional
                .iter()
                .map(|e| ExceptionalSummary { vertex: e.vertex, radius: e.radius })
                .collect(),
        }
    }
}

impl DirectionField for TransversalField {
    /// Falls back to the nearest patch normal where the blend cancels; build
    /// the field with [`build_field`] to rule that out on the boundary.
    fn direction(&self, p: Point3) -> Point3 {
        self.try_direction(p)
            .unwrap_or_else(|_| self.cover.face_patches[self.nearest_patch(p)].normal)
    }
}

/// Interior sample points of a boundary face: sub-triangle centroids plus
/// points just inside each corner and edge midpoint.
pub fn face_interior_samples(tri: [Point3; 3], density: usize) -> Vec<Point3> {
    const EPS: f64 = 1e-6;
    let mut out = crate::lipschitz::face_lattice(tri, density.max(1));
    let at = |l: [f64; 3]| tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2];
    for k in 0..3 {
        let mut l = [EPS; 3];
        l[k] = 1.0 - 2.0 * EPS;
        out.push(at(l));
        let mut m = [0.5 - EPS / 2.0; 3];
        m[k] = EPS;
        out.push(at(m));
    }
    out
}

/// `min v̂·ν` over interior samples of the given boundary faces.
pub fn transversality_on(field: &dyn DirectionField, mesh: &TetMesh, faces: &[usize], density: usize) -> f64 {
    let mut kappa = f64::INFINITY;
    for &f in faces {
        let n = mesh.face_normal(f);
        for p in face_interior_samples(mesh.face_points(f), density) {
            kappa = kappa.min(field.direction(p).dot(n));
        }
    }
    kappa
}

/// κ over the whole boundary; stores it on the field.
pub fn compute_transversality(field: &mut TransversalField, mesh: &TetMesh, density: usize) -> Result<f64> {
    let all: Vec<usize> = (0..mesh.boundary_faces.len()).collect();
    let mut kappa = f64::INFINITY;
    for &f in &all {
        let n = mesh.face_normal(f);
        for p in face_interior_samples(mesh.face_points(f), density) {
            kappa = kappa.min(field.try_direction(p)?.dot(n));
        }
    }
    if !(kappa > 0.0) {
        return Err(Error::NotTransversal { kappa });
    }
    field.kappa = Some(kappa);
    Ok(kappa)
}

/// Whether `v̂` is constant on boundary samples within `radius` of the
/// exceptional vertex.
pub fn check_constant_near_exceptional(field: &TransversalField, mesh: &TetMesh, vertex: usize, radius: f64) -> Result<bool> {
    let e = field
        .cover
        .exceptional
        .iter()
        .find(|e| e.vertex == vertex)
        .ok_or(Error::NotExceptional(vertex))?;
    if radius > e.radius {
        return Err(Error::NotMeaningful { radius, core: e.radius });
    }
    let pts: Vec<Point3> = boundary_sample_points(mesh, 8)
        .into_iter()
        .chain(near_vertex_samples(mesh, vertex, radius))
        .filter(|p| p.distance(e.point) <= radius)
        .collect();
    let Some(first) = pts.first() else { return Ok(true) };
    let d0 = field.direction(*first);
    Ok(pts.iter().all(|p| (field.direction(*p) - d0).max_abs() < 1e-12))
}

/// Points on boundary faces incident to `vertex` at fractions of `radius`.
fn near_vertex_samples(mesh: &TetMesh, vertex: usize, radius: f64) -> Vec<Point3> {
    let p = mesh.vertices[vertex];
    let mut out = vec![p];
    for f in &mesh.boundary_faces {
        let Some(k) = f.iter().position(|&v| v == vertex) else { continue };
        let a = mesh.vertices[f[(k + 1) % 3]] - p;
        let b = mesh.vertices[f[(k + 2) % 3]] - p;
        for frac in [0.1, 0.5, 0.9] {
            let s = frac * radius;
            out.push(p + a * (s / a.norm()));
            out.push(p + (a + b) * (0.5 * s / (a + b).norm().max(a.norm())));
        }
    }
    out
}

/// Largest difference quotient `|v̂(p) - v̂(q)| / |p - q|` over sample pairs.
pub fn lipschitz_estimate(field: &dyn DirectionField, points: &[Point3]) -> f64 {
    let dirs: Vec<Point3> = points.iter().map(|p| field.direction(*p)).collect();
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[i].distance(points[j]);
            if d > 1e-9 {
                best = best.max((dirs[i] - dirs[j]).norm() / d);
            }
        }
    }
    best
}
