use thiserror::Error;

/// Error type shared by the solver modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid boundary data: {0}")]
    InvalidData(String),

    #[error("weak compatibility validation failed: {0}")]
    ValidationFailed(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("point ({0}, {1}) outside the domain")]
    OutsideDomain(f64, f64),

    #[error("contraction certificate {0} >= 1, hypothesis violated")]
    CertificateFailed(f64),

    #[error("no convergence after {iterations} iterations, last increment {last_increment:e}")]
    NoConvergence {
        iterations: usize,
        last_increment: f64,
        increments: Vec<f64>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
