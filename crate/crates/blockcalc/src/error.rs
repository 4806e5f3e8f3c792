use thiserror::Error;

/// Errors produced by distribution construction, model evaluation,
/// coefficient fitting, and simulation configuration.
#[derive(Debug, Error)]
pub enum Error {
    /// Distribution parameters outside their valid domain (e.g. an empty key
    /// range, a skew parameter not greater than 1, or weights that do not
    /// normalize).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Two probability vectors were expected to cover the same key range.
    #[error("length mismatch: left has {left} keys, right has {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Access-pattern fields are mutually inconsistent.
    #[error("invalid access pattern: {0}")]
    InvalidPattern(String),

    /// A scalar argument fell outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A simulation configuration violates its invariants.
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    /// Too few samples to perform a fit.
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// The regression design is singular (e.g. every sample shares one batch
    /// size), so no unique line exists.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// A measurement file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
