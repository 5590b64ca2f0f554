use thiserror::Error;

use crate::solver::Solution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("radial operator evaluated at r = {0}; r must be positive")]
    NonPositiveRadius(f64),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("node {0} is a boundary node; difference quotients need an interior node")]
    BoundaryIndex(usize),

    #[error("window {window} is smaller than twice the local spacing {spacing}")]
    WindowTooSmall { window: f64, spacing: f64 },

    #[error("radius {0} lies outside the sampled domain")]
    OutsideDomain(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The partial iterate is kept so callers can still write diagnostics.
    #[error("solver diverged: residual {residual:e} above tolerance {tol:e} at eps = {eps:e}")]
    Diverged {
        residual: f64,
        tol: f64,
        eps: f64,
        partial: Option<Box<Solution>>,
    },

    #[error("linearization is not monotone at node {node}")]
    NonMonotone { node: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("input is not a converged solution")]
    NotConverged,

    #[error("r* = {r_star} is not a discrete zero of u' (|q| = {q:e})")]
    NotAZero { r_star: f64, q: f64 },

    #[error("insufficient data for the fit: {0}")]
    InsufficientData(String),

    #[error("eigen iteration lost positivity at r = {r} (value {value:e})")]
    LostPositivity { r: f64, value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
