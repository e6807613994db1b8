use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NskError {
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),

    #[error("no bitangent for m = {m}: {reason}")]
    NoBitangent { m: f64, reason: String },

    #[error("elliptic modulus out of range: k = {0}")]
    InvalidModulus(f64),

    #[error("no cnoidal wave at eps = {eps} (admissible range is (0, {upper}))")]
    InadmissibleEps { eps: f64, upper: f64 },

    #[error("CFL violation at step {step}: {detail}")]
    Cfl { step: usize, detail: String },

    #[error("characteristics crossed at node {node} (jacobian {jac})")]
    CharacteristicCrossing { node: usize, jac: f64 },

    #[error("vacuum at step {step}, node {node}: rho = {rho}")]
    Vacuum { step: usize, node: usize, rho: f64 },

    #[error("blow-up (non-finite value) at step {step}")]
    BlowUp { step: usize },

    #[error("no interface: density never crosses the level {level} upward")]
    NoInterface { level: f64 },

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid orbit: {0}")]
    InvalidOrbit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NskError {
    fn from(e: std::io::Error) -> Self {
        NskError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, NskError>;
