use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear system is singular (I - Q not invertible)")]
    SingularSystem,

    #[error("map {label} is not a contraction: Lipschitz bound {bound} >= 1")]
    NotContractive { label: usize, bound: f64 },

    #[error("declared Lipschitz bound {declared} of map {label} violated on a sampled pair (ratio {observed})")]
    DeclaredBoundViolated {
        label: usize,
        declared: f64,
        observed: f64,
    },

    #[error("system has no maps")]
    EmptySystem,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("a certified error bound was requested but some Lipschitz bound is only declared")]
    UncertifiedBound,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("morphisms with tabulated point maps cannot be composed")]
    NotComposable,

    #[error("tabulated map has no sample within radius {radius} of the query point")]
    FNotEvaluable { radius: f64 },

    #[error("no cloud point within {delta} of the query")]
    NoSample { delta: f64 },

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("operation requires one-dimensional source and target blocks")]
    NotOneDimensional,

    #[error("invalid rational literal {0:?}")]
    InvalidRational(String),

    #[error("invalid label {label} for alphabet of size {size}")]
    InvalidLabel { label: usize, size: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("report gate violated: {0}")]
    GateViolation(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
