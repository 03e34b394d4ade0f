use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Lattice or schedule parameters that cannot describe a physical system.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A state that violates its type invariants (normalization, Hermiticity, trace).
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Bloch-like revivals need a nonzero index ramp; with alpha = 0 the walk
    /// never refocuses.
    #[error("no Bloch revival: the index ramp alpha must be positive")]
    NoBlochRevival,

    /// The integrator detected drift beyond tolerance (norm, trace, or
    /// positivity). The message carries a remedy, typically a smaller step.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// A single stochastic realization failed; the whole ensemble aborts.
    #[error("realization {index} failed: {message}")]
    RealizationFailed { index: u64, message: String },

    /// Engine and schedule/noise combinations that have no defined meaning,
    /// e.g. closed forms with a non-Markovian schedule.
    #[error("incompatible engine/schedule combination: {0}")]
    EngineMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
