use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the domain of the operation (e.g. `s <= 0`, `t > T`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set that violates a model or configuration invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A safety cap (step count, rejection attempts) was reached.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The Euler-Maruyama recursion left the representable range.
    #[error("path diverged at step {step}: value {value}")]
    PathDivergence { step: usize, value: f64 },

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    /// Monte Carlo of a moment that the classifier reports as infinite.
    #[error("refused: {0}")]
    Refused(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Inputs to a regression that cannot be log-transformed.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown name: {0}")]
    UnknownName(String),
}

impl Error {
    /// Short machine-readable tag used in structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Resource(_) => "resource",
            Error::PathDivergence { .. } => "path_divergence",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Refused(_) => "refused",
            Error::Unsupported(_) => "unsupported",
            Error::Degenerate(_) => "degenerate",
            Error::UnknownName(_) => "unknown_name",
        }
    }
}
