use thiserror::Error;

/// Failure modes shared by every analytic routine and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QedError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// The queueing model has no stationary regime for these parameters.
    #[error("unstable system: {0}")]
    Instability(String),
    /// A series, quadrature or root search did not reach its tolerance.
    #[error("numerical non-convergence: {0}")]
    Numerical(String),
    /// A simulation or schedule configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, QedError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(QedError::Domain(msg.into()))
}

pub(crate) fn unstable<T>(msg: impl Into<String>) -> Result<T> {
    Err(QedError::Instability(msg.into()))
}

pub(crate) fn numerical<T>(msg: impl Into<String>) -> Result<T> {
    Err(QedError::Numerical(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(QedError::Config(msg.into()))
}
