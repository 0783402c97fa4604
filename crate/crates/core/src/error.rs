use thiserror::Error;

/// Errors raised by the estimation, simulation and testing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a documented invariant (shapes, ranges, site geometry).
    #[error("validation error: {0}")]
    Validation(String),

    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed (factorization, non-PSD matrix, non-finite result).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Every optimizer start failed; carries the best point found.
    #[error("optimizer did not converge after {n_evaluations} evaluations (best objective {objective})")]
    NoConvergence {
        params: crate::data::ModelParams,
        objective: f64,
        n_evaluations: usize,
    },

    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),

    /// Too many bootstrap replicates failed to fit.
    #[error("bootstrap aborted: {failed} of {attempted} replicate fits failed")]
    BootstrapAborted { failed: usize, attempted: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
