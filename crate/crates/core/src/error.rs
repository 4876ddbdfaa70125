use thiserror::Error;

/// Errors raised by the library. Variants map onto CLI exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate polytope: {0}")]
    Degenerate(String),

    #[error("dimension {dim} exceeds the supported cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("not Fano: {0}")]
    NotFano(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: String,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("damping underflow in {solver} at iteration {iteration} (residual {residual:.3e})")]
    DampingUnderflow {
        solver: String,
        iteration: usize,
        residual: f64,
    },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Degenerate(_)
            | Error::DimensionCap { .. }
            | Error::NotFano(_)
            | Error::Json(_)
            | Error::Io(_) => 1,
            Error::NonConvergence { .. } | Error::DampingUnderflow { .. } | Error::Quadrature(_) => 2,
            Error::Consistency(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
