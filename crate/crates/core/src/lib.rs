//! Partial expansion of polyhedral Lipschitz domains across a marked
//! boundary patch, and commuting smoothed projectors for the lowest-order
//! de Rham sequence with boundary conditions on that patch only.
//!
//! The geometric kernel ([`geom`], [`quadrature`], [`projector::kernel`],
//! [`projector::clip`]) is generic over [`scalar::Real`]; everything built on
//! meshes uses `f64` through the aliases below.

pub mod error;
pub mod expansion;
pub mod fe;
pub mod geom;
pub mod linalg;
pub mod lipschitz;
pub mod mesh;
pub mod projector;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod transversal;

pub use error::{Error, Result};

pub type Point3 = geom::Vec3<f64>;
pub type Vector3 = geom::Vec3<f64>;
pub type Matrix3 = geom::Mat3<f64>;
pub type Plane3 = geom::Plane<f64>;
