use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum GzError {
    #[error("highest weight must be nonincreasing, got {0:?}")]
    NotDominant(Vec<i64>),
    #[error("highest weight {0:?} is not regular")]
    NotRegular(Vec<i64>),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dimension {dim} exceeds guard {guard}")]
    Guard { dim: usize, guard: usize },
    #[error("level {0:?} is not strictly inside the polytope")]
    NotInterior(Vec<f64>),
    #[error("no flat section: holonomy exponent {0} is not integral")]
    NotBohrSommerfeld(f64),
    #[error("singular pairing at an intersection point (|det| = {0:.3e})")]
    Singular(f64),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, GzError>;
