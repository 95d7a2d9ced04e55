//! Error types, one enum per layer.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("parameter {u} outside knot range [{lo}, {hi}]")]
    OutOfDomain { u: f64, lo: f64, hi: f64 },
    #[error("control net has {got} entries, knot vectors require {expected}")]
    NetMismatch { expected: usize, got: usize },
    #[error("rational weights must be strictly positive")]
    NonPositiveWeight,
    #[error("Jacobian determinant {det:.3e} <= 0 at (u, v) = ({u}, {v})")]
    DegenerateJacobian { u: f64, v: f64, det: f64 },
    #[error("Gauss rule with {0} points is not available (1..=10)")]
    QuadratureOrder(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("design infeasible: {name} violated by {amount:.3e} m")]
    Infeasible { name: &'static str, amount: f64 },
    #[error("design variable {name} = {value} outside [{lo}, {hi}]")]
    OutOfBounds { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("radial scale must be positive, got {0}")]
    BadScale(f64),
    #[error("block {block}: {source}")]
    Patch { block: String, source: SplineError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("BH data row {row}: {msg}")]
    Ingest { row: usize, msg: String },
    #[error("BH data needs at least 4 points, got {0}")]
    TooFew(usize),
    #[error("cannot read BH file {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("material {0} has no remanence")]
    NotMagnet(String),
    #[error("unknown material {0}")]
    Unknown(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("non-finite entry in element {element} of {block}")]
    NonFinite { block: &'static str, element: usize },
    #[error("harmonic index set is empty")]
    NoHarmonics,
    #[error("rotor and stator coupling arcs differ: {0:.3e} m")]
    CouplingMismatch(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton did not converge in {iters} iterations; residual history {history:?}")]
    Diverged { iters: usize, history: Vec<f64> },
    #[error("sparse factorization failed in the {block} block")]
    Singular { block: &'static str },
    #[error("solve failed at beta = {beta_deg} deg, current scale {current_scale}: {source}")]
    AtOperatingPoint { beta_deg: f64, current_scale: f64, source: Box<SolverError> },
    #[error("empty angle list")]
    NoAngles,
    #[error("state is not converged (residual {0:.3e})")]
    NotConverged(f64),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("unknown quantity kind {0}")]
    UnknownKind(String),
    #[error("unknown material {0}")]
    UnknownMaterial(String),
    #[error("{0} must be non-negative")]
    Negative(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("initial design infeasible: {0}")]
    InfeasibleStart(String),
    #[error("bounds invalid for variable {0}")]
    BadBounds(usize),
    #[error("negative objective weight")]
    NegativeWeight,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
}
