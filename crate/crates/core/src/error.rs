use thiserror::Error;

/// Errors raised by the solvers and analyzers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigenvalue of mode {mode} is degenerate (collides with {other}); the shape derivative is undefined")]
    Degenerate { mode: String, other: String },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("quadrature not converged: panel doubling changed the result by {change:e} (tolerance {tolerance:e})")]
    Precision { change: f64, tolerance: f64 },

    #[error("pulse duration {duration} exceeds the configured cap {cap}")]
    CapExceeded { duration: f64, cap: f64 },

    #[error("norm drift {drift:e} at t = {time} exceeds 1e-6; reduce dt")]
    Instability { drift: f64, time: f64 },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code: 2 for validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Validation(_) | Error::Json(_) => 2,
            Error::Io(_) => 2,
            Error::Degenerate { .. }
            | Error::SolverFailure { .. }
            | Error::Precision { .. }
            | Error::CapExceeded { .. }
            | Error::Instability { .. } => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
