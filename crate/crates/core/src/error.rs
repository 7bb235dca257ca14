use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants split into two families that the CLI maps onto exit codes:
/// precondition violations (bad input, regime outside a theorem's hypotheses)
/// and numerical failures (singular shifts, residual checks, divergence).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {requested} exceeds the configured maximum {limit}")]
    CapacityExceeded { requested: usize, limit: usize },

    #[error("matrix is singular to tolerance (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "resonance: block {block} eigenvalue {mu} collides with leading eigenvalue {lambda} (gap {gap:e})"
    )]
    Resonance {
        block: usize,
        mu: f64,
        lambda: f64,
        gap: f64,
    },

    #[error("residual check failed: {what} = {value:e} exceeds {limit:e} (worst column {column})")]
    Residual {
        what: &'static str,
        value: f64,
        limit: f64,
        column: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("divergence at step {step}: norm {norm:e} exceeds guard {guard:e}")]
    Divergence { step: usize, norm: f64, guard: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("series validation exhausted: achieved {achieved:e} > target {target:e} at order {order}")]
    ValidationExhausted {
        order: usize,
        achieved: f64,
        target: f64,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Exit code used by the command line front end: 2 for precondition
    /// violations, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::DimensionMismatch { .. }
            | Error::CapacityExceeded { .. }
            | Error::Precondition(_)
            | Error::Unsupported(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_) => 2,
            Error::Singular { .. }
            | Error::Resonance { .. }
            | Error::Residual { .. }
            | Error::Divergence { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::ValidationExhausted { .. } => 3,
        }
    }

    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
