use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{what} {} not found; produce it with `numprobe {producer}`", path.display())]
    MissingArtifact {
        what: &'static str,
        path: PathBuf,
        producer: &'static str,
    },
    #[error("{0}")]
    Transport(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 success, 1 usage or config, 2 data, 3 transport exhaustion.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) | CliError::MissingArtifact { .. } | CliError::Io { .. } => 2,
            CliError::Transport(_) => 3,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}
