use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error(
        "GMRES did not converge: relative residual {residual:.3e} after {iterations} iterations"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Relative residual recorded at every restart cycle boundary and at exit.
        history: Vec<f64>,
    },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite value detected at step {step}")]
    NotFinite { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
