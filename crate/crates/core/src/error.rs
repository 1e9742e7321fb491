use thiserror::Error;

/// Errors raised by kernel, geometry and quadrature computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("variable m{index} out of range (expression has {var_count} variables)")]
    VariableOutOfRange { index: usize, var_count: usize },

    #[error("zero denominator in exponent literal at offset {offset}")]
    ZeroDenominator { offset: usize },

    #[error("domain error in `{node}`: {reason}")]
    DomainError { node: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("axis point: modulus of coordinate {index} is zero")]
    AxisPoint { index: usize },

    #[error("defining function is not positive at the evaluation point (rho = {value})")]
    NonPositiveRho { value: f64 },

    #[error("point lies outside the boundary parameter domain (rho(0, r) = {rho_at_axis})")]
    OutsideDomain { rho_at_axis: f64 },

    #[error("root solve did not converge after {iterations} iterations (residual {residual:e})")]
    RootNonConvergence { iterations: usize, residual: f64 },

    #[error("vanishing normal derivative at boundary point")]
    VanishingNormal,

    #[error("singular matrix (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("quadrature did not converge: last estimates {previous:e} and {last:e}")]
    QuadratureNonConvergence { previous: f64, last: f64 },

    #[error("missing norm table entry for multi-index {0:?}")]
    MissingEntry(Vec<u32>),

    #[error("norm table degree {table} does not match requested degree {requested}")]
    DegreeMismatch { table: usize, requested: usize },

    #[error("degenerate expansion point: {0}")]
    Degenerate(String),

    #[error("jet and finite-difference routes disagree: {jet} vs {finite_difference}")]
    RouteDisagreement { jet: f64, finite_difference: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
