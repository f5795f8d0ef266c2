use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, arguments or input data.
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] hotcs_core::Error),
    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: hotcs_core::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }

    pub fn stage(context: impl Into<String>, source: hotcs_core::Error) -> Self {
        Error::Stage { context: context.into(), source }
    }

    /// Process exit status: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format { .. } => 2,
            Error::Core(e) if is_input_error(e) => 2,
            _ => 3,
        }
    }
}

fn is_input_error(e: &hotcs_core::Error) -> bool {
    use hotcs_core::Error as E;
    !matches!(e, E::Postcondition(_) | E::RankDeficient(_))
}
