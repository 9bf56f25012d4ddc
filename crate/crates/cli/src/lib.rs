//! Library half of the `tethernav` binary: scenario files, benchmark
//! execution and the on-disk artifact formats. Kept as a library so the
//! integration tests can drive benchmarks in-process.

pub mod bench;
pub mod output;
pub mod scenario;

use thiserror::Error;

/// Top-level failure classes, one per process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration: unparseable file, invalid field, impossible
    /// geometry. Exit code 1.
    #[error("configuration error: {0}")]
    Config(String),
    /// Filesystem trouble. Exit code 2.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<tethernav_core::InvalidConfig> for CliError {
    fn from(e: tethernav_core::InvalidConfig) -> Self {
        CliError::Config(e.0)
    }
}
