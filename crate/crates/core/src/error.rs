//! Error types shared by all modules.

use thiserror::Error;

/// Unified error type for the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad kernel spec, grid too coarse, malformed
    /// parameters. Maps to exit code 2 in the CLI.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An adaptive quadrature failed to converge.
    #[error("quadrature fault: {0}")]
    Quadrature(String),

    /// Too few samples or otherwise unusable statistics.
    #[error("statistics error: {0}")]
    Statistics(String),

    /// A path integration produced non-finite values or the fault rate
    /// exceeded the allowed budget.
    #[error("integration fault: {0}")]
    Integration(String),

    /// Linear solve failed or was too ill-conditioned to trust.
    #[error("resolution fault: {0}")]
    Resolution(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
