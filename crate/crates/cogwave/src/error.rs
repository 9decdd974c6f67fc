use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cogwave_core::Error),
    #[error("invalid {name}: {reason}")]
    Param { name: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
}

impl Error {
    pub fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Param {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn format(path: impl Into<String>, reason: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// True for a mask with no usable (desired) bins.
    pub fn is_degenerate_mask(&self) -> bool {
        matches!(self, Error::Core(cogwave_core::Error::DegenerateMask(_)))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
