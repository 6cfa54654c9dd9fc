use thiserror::Error;

/// Error type shared by all modules of the simulator.
#[derive(Debug, Clone, Error)]
pub enum GateError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Requested state or model does not fit in the truncated Fock space.
    #[error("truncation: {0}")]
    Truncation(String),

    #[error("configuration: {0}")]
    Config(String),

    /// The integrator itself failed (non-convergence, bad stepping).
    #[error("integration failure: {0}")]
    Integration(String),

    /// A physical invariant was violated during a run (e.g. norm drift).
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("singularity: {0}")]
    Singular(String),

    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, GateError>;
