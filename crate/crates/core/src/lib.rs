//! Isogeometric simulation of a permanent-magnet synchronous machine
//! sector with harmonic mortar coupling, adjoint shape sensitivities and
//! weighted-sum design optimization.
//!
//! Geometry and element kernels are generic over [`scalar::Scalar`]; the
//! aliases below fix the two instantiations the crate uses.

pub mod assembly;
pub mod design;
pub mod error;
pub mod geometry;
pub mod io;
pub mod materials;
pub mod model;
pub mod optimizer;
pub mod scalar;
pub mod scaling;
pub mod sensitivity;
pub mod solver;
pub mod spline;

pub use design::{Bounds, DesignVector, MachineConstants};
pub use model::{Components, Evaluation, Model, Weights};
pub use scalar::{Dual, Scalar};

/// Real-valued geometry.
pub type Patchwork = geometry::MachinePatchwork<f64>;
/// Geometry carrying one tangent direction.
pub type DualPatchwork = geometry::MachinePatchwork<Dual>;
/// Design vector seeded for forward-mode derivatives.
pub type DualDesign = DesignVector<Dual>;
