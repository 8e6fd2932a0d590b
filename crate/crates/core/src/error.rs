use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("non-finite sample at x = {x}")]
    NonFiniteSample { x: f64 },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("quadrature did not reach tolerance {tol:e} (discrepancy {discrepancy:e})")]
    AssemblyFailure { tol: f64, discrepancy: f64 },
    #[error("stiffness matrix is not positive definite")]
    NotSpd,
    #[error("linear solver diverged (relative residual {residual:e})")]
    SolverDivergence { residual: f64 },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("newton iteration failed at step {step} (scaled residual {residual:e})")]
    NewtonDivergence { step: usize, residual: f64 },
    #[error("stationary search did not converge (best residual {residual:e})")]
    StationaryNoConvergence { residual: f64 },
    #[error("p = {p} violates the compatibility bound p > {bound}")]
    CompatibilityViolation { p: f64, bound: f64 },
    #[error("invalid parameter sequence: {0}")]
    InvalidSequence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
