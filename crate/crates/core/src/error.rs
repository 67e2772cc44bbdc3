use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("requested series order {order} exceeds the cap {cap}")]
    OrderTooLarge { order: i64, cap: i64 },
    #[error("series does not resolve the coefficient of exponent {0}")]
    Unresolvable(i64),
    #[error("quadrature did not converge: value {value}, error estimate {error:e}")]
    QuadratureNotConverged { value: String, error: f64 },
    #[error("root finder did not converge: residual {0:e}")]
    RootsNotConverged(f64),
    #[error("Newton solver failed after {iterations} iterations, residual {residual:e}")]
    NewtonFailed { iterations: usize, residual: f64 },
    #[error("degenerate cut: endpoints {0} and {1} coincide")]
    DegenerateCut(usize, usize),
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("perturbative budget exceeded: 2k+l+n = {requested} > {max}")]
    BudgetExceeded { requested: usize, max: usize },
    #[error("evaluation at a pole: {0}")]
    Pole(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
