use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },
    #[error("matrix is singular or indefinite: {0}")]
    Singular(String),
    #[error("degenerate channel: user {user} has sigma_min/sigma_max = {ratio:e}")]
    DegenerateChannel { user: usize, ratio: f64 },
    #[error("invalid geometry: {0}")]
    Geometry(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
