use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent wave configuration or coefficient set.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    /// Newton refinement left the analysis box by more than a wavelength.
    #[error("refinement diverged: {0}")]
    Divergence(String),

    #[error("refinement converged to a saddle or degenerate point (min eigenvalue {min_eig:e})")]
    Saddle { location: Vec<f64>, min_eig: f64 },

    #[error("refinement did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("homography fit failed: {0}")]
    Fit(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command line front end: 1 for bad input,
    /// 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Validation(_)
            | Error::UnsupportedDimension(_)
            | Error::Fit(_)
            | Error::Parse { .. } => 1,
            Error::Divergence(_)
            | Error::Saddle { .. }
            | Error::NotConverged { .. }
            | Error::Io(_) => 2,
        }
    }
}
