use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Iteration budget exhausted. Carries the best iterate reached.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("CFL violation: lambda * dt = {0} >= 1")]
    Cfl(f64),

    #[error("policy iteration cycled after {0} iterations; check the argmin tolerance")]
    PolicyCycle(usize),

    #[error("enumeration guard exceeded: {count} policies > {limit}")]
    GuardExceeded { count: u128, limit: u128 },

    #[error("half-line is not certified: {0}")]
    Uncertified(String),

    #[error("operation unsupported by this operator: {0}")]
    Unsupported(&'static str),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("singular linear system")]
    Singular,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code class: 1 input, 2 non-convergence, 3 certificate failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged { .. } | Error::PolicyCycle(_) | Error::Singular => 2,
            Error::Uncertified(_) => 3,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Empty(_) => "empty",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidModel(_) => "invalid_model",
            Error::OutsideDomain { .. } => "outside_domain",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::NotConverged { .. } => "not_converged",
            Error::Cfl(_) => "cfl",
            Error::PolicyCycle(_) => "policy_cycle",
            Error::GuardExceeded { .. } => "guard_exceeded",
            Error::Uncertified(_) => "uncertified",
            Error::Unsupported(_) => "unsupported",
            Error::UnknownName(_) => "unknown_name",
            Error::Singular => "singular",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Parse(_) => "parse",
        }
    }
}
