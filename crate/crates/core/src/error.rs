use std::path::PathBuf;

use crate::spectral::WaveProfile;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    InvalidArgument(String),

    /// The kernel was evaluated at a point where it blows up logarithmically.
    #[error("singular point: kernel evaluated at x = {x}")]
    SingularPoint { x: f64 },

    #[error("singular jacobian after {iterations} newton iterations")]
    SingularJacobian { iterations: usize },

    #[error("newton did not converge in {iterations} iterations (residual {residual_norm:e})")]
    NoConvergence {
        iterations: usize,
        residual_norm: f64,
        last: Box<WaveProfile>,
    },

    #[error("{0}")]
    InvalidState(String),

    #[error("{0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// Short machine-readable tag for the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::SingularPoint { .. } => "singular-point",
            Error::SingularJacobian { .. } => "singular-jacobian",
            Error::NoConvergence { .. } => "no-convergence",
            Error::InvalidState(_) => "invalid-state",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
