use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {axis} = {value} lies outside the chart domain [{lower}, {upper}]")]
    OutsideDomain { axis: usize, value: f64, lower: f64, upper: f64 },

    #[error("jet order {requested} exceeds the supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },

    #[error("operation needs jets of order {needed}, got {got}")]
    InsufficientOrder { needed: usize, got: usize },

    #[error("metric is degenerate at the point (|det| = {det:e})")]
    Degenerate { det: f64 },

    #[error("signature mismatch: declared {declared:?}, observed {observed:?}")]
    SignatureMismatch { declared: Vec<i8>, observed: Vec<i8> },

    #[error("null vector encountered while building a pseudo-orthonormal frame")]
    NullVector,

    #[error("unknown catalog metric `{0}`")]
    UnknownMetric(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: usize },

    #[error("matrix is not orthogonal (|Q^T Q - I| = {defect:e})")]
    NotOrthogonal { defect: f64 },

    #[error("frame is not a Chern basis (objective {objective:e} exceeds {threshold:e})")]
    NotChern { objective: f64, threshold: f64 },

    #[error("operation requires a Riemannian (positive definite) metric")]
    NotRiemannian,

    #[error("`{0}` is not a closed manifold chart")]
    NotClosed(String),

    #[error("quadrature did not converge within {nodes} nodes per axis (last change {change:e})")]
    NoConvergence { nodes: usize, change: f64 },

    #[error("{0}")]
    WrongConstruction(String),

    #[error("configuration error: {0}")]
    Config(String),
}
