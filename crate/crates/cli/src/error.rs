use std::fmt;

use lcdm_core::distfield::DistError;
use lcdm_core::morpho::MorphoError;
use lcdm_core::simkit::SimError;

/// Failure of a subcommand, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, malformed input or an invalid configuration.
    Invalid(String),
    /// A file could not be read or written.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<MorphoError> for CliError {
    fn from(e: MorphoError) -> Self {
        match e {
            MorphoError::Io { .. } | MorphoError::Dist(DistError::Io { .. }) => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
