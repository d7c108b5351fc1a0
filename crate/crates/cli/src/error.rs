use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI command, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameter values; exit status 2.
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: resqu_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] resqu_core::Error),

    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

/// Parameter errors from the core become usage errors; the rest pass through.
pub(crate) fn usage(err: resqu_core::Error) -> CliError {
    use resqu_core::Error as E;
    match err {
        E::InvalidParameter(_) | E::Domain { .. } | E::NoDiscrimination => CliError::Usage(err.to_string()),
        other => CliError::Core(other),
    }
}
