use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("matrix is rank deficient: rank {rank} of {dim}")]
    Singular { rank: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("infeasible action: {0}")]
    Infeasible(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("stopping rule sample {0} outside [0, 1]")]
    SampleOutOfRange(f64),

    #[error("stopping rule hit the step cap of {0} (mean may be zero)")]
    StepCap(u64),

    #[error("discretization needs about {estimated} points, cap is {cap}")]
    TooManyPoints { estimated: f64, cap: u64 },

    #[error("reward sampler rejected {0} consecutive draws")]
    SamplerStalled(u64),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("internal: {0}")]
    Internal(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config_err(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Config {
        field,
        reason: reason.into(),
    }
}
