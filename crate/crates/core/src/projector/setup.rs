//! Everything a projector needs on one mesh: dissection, protrusion, FE
//! complex, extension and balls.

use std::sync::Arc;

use crate::error::Result;
use crate::expansion::{build_protrusion, ExpandedDomain, TransportMap};
use crate::fe::{build_complex, FeComplex};
use crate::mesh::{box_mesh, dissect_boundary, select_faces, Dissection, FacePredicate, TetMesh};
use crate::projector::balls::{build_ball_system, BallParams, BallSystem};
use crate::projector::extension::Extension;
use crate::transversal::ConstantField;
use crate::Point3;

/// Protrusion thickness that leaves room for every shifted ball:
/// `1.05·(1 + c)·h·δ`.
pub fn thickness_for(h: f64, params: &BallParams) -> f64 {
    1.05 * (1.0 + params.c) * h * params.delta
}

pub struct ProjectorSetup {
    pub dissection: Dissection,
    pub expanded: ExpandedDomain,
    /// Constant transport direction (mean outward normal of Γ).
    pub field: ConstantField,
    pub complex: FeComplex,
    pub extension: Extension,
    pub h: f64,
}

impl ProjectorSetup {
    /// Set up on `mesh` with Γ = `gamma_faces`. The protrusion is a
    /// straight slab along the mean Γ normal, thick enough for balls with
    /// `params` (or `t` if given).
    pub fn new(mesh: TetMesh, gamma_faces: &[usize], params: &BallParams, t: Option<f64>, layers: usize) -> Result<Self> {
        let dissection = dissect_boundary(&mesh, gamma_faces)?;
        let n = dissection.gamma_faces.iter().fold(Point3::zero(), |acc, &f| acc + mesh.face_area_normal(f));
        let field = ConstantField::new(n)?;
        let h = params.h.unwrap_or_else(|| mesh.mesh_size());
        let t = t.unwrap_or_else(|| thickness_for(h, params));
        let map = TransportMap::new(Arc::new(field));
        let expanded = build_protrusion(&mesh, &dissection, &map, t, layers.max(1))?;
        let extension = Extension::for_dissection(&mesh, &dissection);
        let complex = build_complex(&mesh)?;
        Ok(Self { dissection, expanded, field, complex, extension, h })
    }

    /// Unit cube `n³` with Γ the top face.
    pub fn cube(n: usize, params: &BallParams) -> Result<Self> {
        let mesh = box_mesh(n, n, n);
        let gamma = select_faces(&mesh, &FacePredicate::parse("z==1")?);
        Self::new(mesh, &gamma, params, None, 2)
    }

    pub fn mesh(&self) -> &TetMesh {
        &self.complex.mesh
    }

    pub fn balls(&self, params: &BallParams) -> Result<BallSystem> {
        let p = BallParams { h: Some(params.h.unwrap_or(self.h)), ..*params };
        build_ball_system(self.mesh(), &self.dissection, &self.expanded.omega_e, &self.field, p)
    }
}
