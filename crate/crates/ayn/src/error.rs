use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AynError {
    #[error(transparent)]
    Core(#[from] ayn_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        /// 1-based; 0 when the problem is not tied to a line.
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("missing required resource: {0}")]
    MissingResource(&'static str),
    #[error("{0}")]
    Invalid(String),
}

impl AynError {
    /// Stable machine-readable kind for the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            AynError::Core(ayn_core::Error::Diverged { .. }) => "diverged",
            AynError::Core(_) => "core",
            AynError::Io { .. } => "io",
            AynError::Format { .. } => "format",
            AynError::Config { .. } => "config",
            AynError::MissingResource(_) => "missing-resource",
            AynError::Invalid(_) => "invalid",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AynError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        AynError::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, AynError>;
