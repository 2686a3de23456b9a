use thiserror::Error;

/// Errors raised by the library operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    /// A parameter or input lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),
    /// A point sits too close to a critical point or discontinuity.
    #[error("point {x} lies within {tol:e} of breakpoint {breakpoint}")]
    Proximity { x: f64, breakpoint: f64, tol: f64 },
    /// An orbit hit the breakpoint set where a clean orbit is required.
    #[error("degenerate orbit: {0}")]
    Degenerate(String),
    /// A configured resource cap would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}
