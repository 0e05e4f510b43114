use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The unregularized inverse does not exist: strain limit reached.
    #[error("no regularizer and |E| = {magnitude} is at or beyond the strain limit L = {limit}")]
    NoRegularizerAndSupercritical { magnitude: f64, limit: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { what: &'static str, iterations: usize, residual: f64 },

    #[error("implicit midpoint step at t = {t} did not converge in {iterations} iterations; residual trace {trace:?}")]
    MidpointNoConvergence { t: f64, iterations: usize, trace: Vec<f64> },

    #[error("safety strain condition violated: margin {margin} <= 0")]
    SafetyCondition { margin: f64 },

    #[error("at t = {t}, quadrature point {qp} (x = {x:?}): {source}")]
    AtQuadraturePoint { t: f64, qp: usize, x: [f64; 2], source: Box<Error> },

    #[error("run with {label}: {source}")]
    Study { label: String, source: Box<Error> },
}
