use thiserror::Error;

use crate::Point3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degenerate tetrahedron {index} (volume {volume:e})")]
    DegenerateTet { index: usize, volume: f64 },

    #[error("invalid dissection: {0}")]
    Dissection(String),

    #[error("point is not on the boundary surface (distance {distance:e})")]
    NotOnSurface { distance: f64 },

    #[error("coordinate box leaves the mesh bounding region")]
    BoxOutsideMesh,

    #[error("degenerate cone (theta {theta}, height {height})")]
    DegenerateCone { theta: f64, height: f64 },

    #[error("boundary face {0} has zero area")]
    ZeroAreaFace(usize),

    #[error("patch directions cancel at {point:?}")]
    CancellingNormals { point: Point3 },

    #[error("field is not transversal (kappa = {kappa})")]
    NotTransversal { kappa: f64 },

    #[error("radius {radius} exceeds the dedicated core radius {core}; check not meaningful")]
    NotMeaningful { radius: f64, core: f64 },

    #[error("vertex {0} is not an exceptional point")]
    NotExceptional(usize),

    #[error("empty search interval (s_max = {0})")]
    EmptySearch(f64),

    #[error("no passing thickness down to {0:e}")]
    NoPassingThickness(f64),

    #[error("invalid thickness {0}")]
    InvalidThickness(f64),

    #[error("inverted prism over face {face} in layer {layer} (volume {volume:e})")]
    InvertedPrism { face: usize, layer: usize, volume: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("space mismatch: expected {expected}, got {got}")]
    SpaceMismatch { expected: String, got: String },

    #[error("point {0:?} lies outside the mesh")]
    Outside(Point3),

    #[error("evaluator failure: {0}")]
    Evaluator(String),

    #[error("ball of vertex {vertex} not contained in the protrusion (clearance {clearance:e} < radius {radius:e}); try a smaller delta")]
    Containment { vertex: usize, clearance: f64, radius: f64 },

    #[error("unsupported cubature degree {0}")]
    UnsupportedDegree(usize),

    #[error("singular jacobian (det {det:e}) at node {node:?}")]
    SingularJacobian { det: f64, node: Point3 },

    #[error("smoothing operator not invertible (|I - R| estimate {0}); try a smaller delta")]
    NormTooLarge(f64),

    #[error("ill-conditioned smoothing operator (condition {0:e}); try a smaller delta")]
    IllConditioned(f64),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
