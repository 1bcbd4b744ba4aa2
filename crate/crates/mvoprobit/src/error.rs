//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bound: {0}")]
    InvalidBound(String),

    #[error("degenerate correlation: |rho| must be < 1, got {0}")]
    DegenerateCorrelation(f64),

    #[error("correlation matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid cell: lower bound must be below upper bound on axis {axis} ({lower} >= {upper})")]
    InvalidCell { axis: usize, lower: f64, upper: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("stage {stage} out of range for equation {equation} with {n_stages} stages")]
    StageOutOfRange {
        equation: String,
        stage: usize,
        n_stages: usize,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("equation {0} has a constant outcome column; at least two distinct stages are required")]
    DegenerateOutcome(String),

    #[error("log-likelihood is not finite at the starting point")]
    BadStart,

    #[error("invalid likelihood value: {0}")]
    InvalidLikelihood(String),

    #[error("incomplete staging response: {0}")]
    IncompleteResponse(String),

    #[error("inconsistent staging response: {0}")]
    InvalidResponse(String),

    #[error("stage label {0} is not in the merge map domain")]
    LabelOutsideMap(String),

    #[error("invalid merge map: {0}")]
    InvalidMergeMap(String),

    #[error("unknown frequency band label: {0:?}")]
    UnknownBand(String),

    #[error("multimodality index undefined: {0}")]
    UndefinedIndex(String),

    #[error("singular observed information matrix")]
    SingularInformation,

    #[error("{0}")]
    Numerical(String),
}
