use thiserror::Error;

/// Errors raised by grid construction, solvers and the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LakeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {what} at ring {ring}, angle index {angle}")]
    NonFinite {
        what: &'static str,
        ring: usize,
        angle: usize,
    },

    #[error("logarithmic bathymetry terms need epsilon > 0")]
    DegenerateLog,

    #[error("stream solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("blow-up guard tripped at t = {t}: max |omega| grew from {before:.3e} to {after:.3e}")]
    BlowUp { t: f64, before: f64, after: f64 },

    #[error("envelope domain violated: gamma0 + mu t = {value:.3e} >= M^2 = {limit:.3e}")]
    EnvelopeDomain { value: f64, limit: f64 },

    #[error("modulus is not positive at r = {0:.3e}")]
    ModulusNotPositive(f64),

    #[error("{0}")]
    Invalid(String),

    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LakeError {
    fn from(e: std::io::Error) -> Self {
        LakeError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LakeError>;
