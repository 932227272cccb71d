use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular jet: {0}")]
    Singularity(String),

    #[error("point {point:?} lies outside the chart domain")]
    Domain { point: Vec<f64> },

    #[error("requested derivative order {requested} exceeds chart capability {max}")]
    Capability { requested: usize, max: usize },

    #[error("non-finite input data: {0}")]
    Data(String),

    #[error("subspace containment violated (worst residual {residual:.3e})")]
    Containment { residual: f64 },

    #[error("Jacobian rank {rank} < intrinsic dimension {dim}: not an immersion")]
    NotImmersion { rank: usize, dim: usize },

    #[error("ambiguous rank for normal space N_{k} across the tolerance band ({low} vs {high})")]
    Regularity { k: usize, low: usize, high: usize },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("frame pivoting unstable: {0}")]
    Frame(String),

    #[error("numerical rank out of admissible band: {0}")]
    NumericalRank(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate extension: tubular radius shrank to {radius:.3e}")]
    DegenerateExtension { radius: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
