use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },

    #[error("row {row}: duplicate edge id {id}")]
    DuplicateEdgeId { row: usize, id: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exponent {value} exceeds the overflow guard {limit}")]
    ExponentOverflow { value: f64, limit: f64 },

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("invalid trace at step {step}: {msg}")]
    InvalidTrace { step: usize, msg: String },

    #[error("covariates of edges into vertex {vertex} differ; vertex model needs destination-constant covariates")]
    CovariateNotDestinationConstant { vertex: usize },

    #[error("power iteration did not converge within {max_iters} iterations")]
    NotConverged { max_iters: usize },

    #[error("transmission counts are all zero")]
    EmptyCounts,

    #[error("edge {edge} has positive count but its source has count zero")]
    InconsistentCounts { edge: usize },

    #[error("no Perron eigenvector on the positive-count subgraph: {reason}")]
    NoPerronVector { reason: String },

    #[error("entry {index} has zero weight but positive mass")]
    ZeroWeight { index: usize },

    #[error("count vector entry {index} is zero")]
    ZeroCount { index: usize },

    #[error("trace has no observed transmissions")]
    NoObservedEdges,

    #[error("design matrix is rank deficient on the given support")]
    RankDeficient,

    #[error("existence check needs {pairs} constraint rows, above the cap {cap}")]
    LpSizeCap { pairs: usize, cap: usize },

    #[error("linear program failed: {0}")]
    LpFailure(String),
}
