use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} needs {needed} bytes, budget is {budget} bytes")]
    Capacity { what: &'static str, needed: u128, budget: u128 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("evaluation point {eps} lies on a pole at {pole}")]
    Pole { eps: f64, pole: f64 },

    #[error("root bracket [{lo}, {hi}] does not enclose a sign change (value at upper end {value_hi})")]
    Bracket { lo: f64, hi: f64, value_hi: f64 },

    #[error("root in gap {gap} did not reach tolerance after {iterations} iterations (bracket width {width})")]
    RootTolerance { gap: usize, iterations: usize, width: f64 },

    #[error("dimension {dim} exceeds cap {cap}; use the closed-form bound instead")]
    DimensionCap { dim: usize, cap: usize },

    #[error("argument {value} outside domain: {reason}")]
    Domain { value: f64, reason: &'static str },

    #[error("quadrature did not converge: estimated error {error} > tolerance {tol}")]
    NonConvergence { error: f64, tol: f64 },

    #[error("vector of length {got} does not match truncated lune of size {expected} at k = {k}")]
    SupportViolation { k: String, expected: usize, got: usize },

    #[error("sector with N_E = {sector} has {size} states, cap is {cap}")]
    SectorOverflow { sector: u32, size: u128, cap: u128 },

    #[error("post-condition violated: {0}")]
    Assertion(String),
}
