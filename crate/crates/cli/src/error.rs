use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read {}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: mp2_core::Error,
    },

    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] mp2_core::Error),
}

impl CliError {
    /// 2 for bad input or validation, 3 for numeric blow-up, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonFinite { .. } | CliError::Core(mp2_core::Error::NonFiniteLoss { .. }) => 3,
            CliError::Output { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn input(path: impl Into<PathBuf>, source: mp2_core::Error) -> Self {
        CliError::Input {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Output {
            path: path.into(),
            source,
        }
    }
}
