use thiserror::Error;

/// Errors produced by the wave, root and kernel computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("far-field states coincide (phi_minus = phi_plus = {0})")]
    DegenerateStates(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quartic cap is not positive below the junction for A={a}, B={b}")]
    CapNotPositive { a: f64, b: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("iterate left the principal branch (arg = {arg})")]
    BranchViolation { arg: f64 },

    #[error("non-finite state at xi = {xi}")]
    NonFinite { xi: f64 },

    #[error("insufficient data for the blow-down fit: {nodes} nodes in the window")]
    InsufficientData { nodes: usize },

    #[error("no classical/unbounded bracket found for tau in [2^-20, 2^20]")]
    NoBracket,

    #[error("bisection bracket broken at tau = {tau}: {reason}")]
    BracketBroken { tau: f64, reason: String },

    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("second derivative of v does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
