use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::IngestError;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INGEST: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{failed} of {total} records failed")]
    BatchFailures { failed: usize, total: usize },
    #[error("replay differs from the recorded run: {0}")]
    ReplayMismatch(String),
}

/// Maps the first recognizable cause in the chain to an exit status.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<IngestError>().is_some() {
            return EXIT_INGEST;
        }
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
                CliError::BatchFailures { .. } => EXIT_NUMERICAL,
                CliError::ReplayMismatch(_) => EXIT_OTHER,
            };
        }
        if let Some(e) = cause.downcast_ref::<subdata::Error>() {
            return if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            };
        }
    }
    EXIT_OTHER
}
