use thiserror::Error;

/// Errors raised by network construction, evaluation and the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed network: {0}")]
    Shape(String),
    #[error("input has length {got}, network expects {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("cannot compose: inner output width {inner_out} differs from outer input width {outer_in}")]
    Composition { inner_out: usize, outer_in: usize },
    #[error("depth mismatch: {0}")]
    Depth(String),
    #[error("interface mismatch: {0}")]
    Interface(String),
    #[error("network does not realize the identity: at x = {x} it returns {got}")]
    NotIdentity { x: f64, got: f64 },
    #[error("invalid activation: {0}")]
    Activation(String),
    #[error("node system is ill-conditioned (estimate {estimate:e})")]
    IllConditioned { estimate: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("size bound violated: {0}")]
    Bound(String),
    #[error("equivalence check failed at probe {probe:?}: residual {residual:e} exceeds {tol:e}")]
    Equivalence { probe: Vec<f64>, residual: f64, tol: f64 },
    #[error("estimated parameter count {bound} exceeds the limit {limit}")]
    TooLarge { bound: u128, limit: u128 },
    #[error("no closed-form reference: {0}")]
    NoReference(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;
