use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid root system: {0}")]
    InvalidRootSystem(String),
    #[error("lambda_k must be positive (got {lambda})")]
    NonPositiveLambda { lambda: f64 },
    #[error("rho must lie in (0,1) (got {rho})")]
    InvalidRadius { rho: f64 },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("point with norm {norm} lies outside the admissible region {region}")]
    OutsideDomain { norm: f64, region: &'static str },
    #[error("expected a unit vector (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("series tail bound {bound:e} exceeds tolerance {tol:e} at max degree {max_degree}")]
    Truncation { bound: f64, tol: f64, max_degree: usize },
    #[error("pole: the points collide up to the group action (distance {distance:e})")]
    Pole { distance: f64 },
    #[error("point within {distance:e} of the hyperplane of root {root}; step too large")]
    HyperplaneProximity { root: usize, distance: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iterate left the bracket [{lower}, {upper}] at iteration {iteration} (value {value})")]
    BracketViolation { lower: f64, upper: f64, value: f64, iteration: usize },
    #[error("error bracket {bracket:e} exceeds requested tolerance {tol:e}")]
    BracketTooWide { bracket: f64, tol: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
