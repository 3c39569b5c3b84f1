use thiserror::Error;

/// Errors reported by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("nearest boundary point is not unique")]
    AmbiguousProjection,

    #[error("rejection sampling accepted no point after {0} draws")]
    RejectionBudgetExceeded(usize),

    #[error("domain has no finite bounding box to sample from")]
    UnboundedDomain,

    #[error("time {t} outside [0, {span}]")]
    InvalidTime { t: f64, span: f64 },

    #[error("threshold {m} below max(x, 0) = {floor}")]
    InvalidThreshold { m: f64, floor: f64 },

    #[error("invalid state: {0}")]
    InvalidState(&'static str),

    #[error("barrier must satisfy 0 < a < x (got a = {a}, x = {x})")]
    InvalidBarrier { a: f64, x: f64 },

    #[error("interpolation weight undefined: both endpoints on the boundary")]
    DegenerateLambda,

    #[error("walk starts outside the domain")]
    StartOutsideDomain,

    #[error("root finding did not reach tolerance within {0} iterations")]
    IterationCapExceeded(usize),

    #[error("step cap of {0} reached")]
    StepCapExceeded(u64),

    #[error("problem has no exact solution")]
    MissingExactSolution,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown name: {0}")]
    UnknownName(String),
}

pub type Result<T> = std::result::Result<T, Error>;
