use std::path::PathBuf;

/// Errors produced by ingestion, analysis, and simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data is internally inconsistent.
    #[error("validation failed: {0}")]
    Validation(String),

    /// The manifest file is missing a field or holds a malformed value.
    #[error("manifest schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    /// A file referenced by a manifest does not exist.
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("frame dimensions differ in {context}: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        context: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// Frame and force streams cannot be aligned in time.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Analysis parameters are incompatible with the data.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("could not decode {}: {message}", path.display())]
    Decode { path: PathBuf, message: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the environment (filesystem) rather than of the input data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
