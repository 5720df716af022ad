use std::path::{Path, PathBuf};

/// Failure of a command, carrying its exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tactile_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input or arguments, 3 for filesystem failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_io() => 3,
            CliError::Io { .. } => 3,
            _ => 2,
        }
    }
}
