use std::path::{Path, PathBuf};

use thiserror::Error;
use zombierank_core::ingest::{CacheError, IngestError};
use zombierank_core::synth::SynthError;

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for malformed input or an invalid configuration.
pub const EXIT_INVALID: i32 = 2;
/// Exit status when some community's PageRank hit the iteration cap.
pub const EXIT_NONCONVERGED: i32 = 3;
/// Exit status for file-system failures.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("PageRank did not converge in {0} community(ies); outputs were still written")]
    NonConvergence(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Input { .. } => EXIT_INVALID,
            CliError::NonConvergence(_) => EXIT_NONCONVERGED,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn input(path: &Path, message: impl ToString) -> CliError {
        CliError::Input { path: path.to_path_buf(), message: message.to_string() }
    }

    pub(crate) fn ingest(path: &Path) -> impl FnOnce(IngestError) -> CliError + '_ {
        move |e| match e {
            IngestError::Io(source) => CliError::Io { path: path.to_path_buf(), source },
            other => CliError::input(path, other),
        }
    }

    pub(crate) fn cache(path: &Path) -> impl FnOnce(CacheError) -> CliError + '_ {
        move |e| match e {
            CacheError::Io(source) => CliError::Io { path: path.to_path_buf(), source },
            other => CliError::input(path, other),
        }
    }

    pub(crate) fn csv(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
        move |e| {
            if e.is_io_error() {
                match e.into_kind() {
                    csv::ErrorKind::Io(source) => CliError::Io { path: path.to_path_buf(), source },
                    other => CliError::input(path, format!("{other:?}")),
                }
            } else {
                CliError::input(path, e)
            }
        }
    }

    pub(crate) fn synth(path: &Path) -> impl FnOnce(SynthError) -> CliError + '_ {
        move |e| match e {
            SynthError::Io(source) | SynthError::Ingest(IngestError::Io(source)) => {
                CliError::Io { path: path.to_path_buf(), source }
            }
            SynthError::Invalid(message) => CliError::Invalid(message),
            other => CliError::input(path, other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
