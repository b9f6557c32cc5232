//! Command-line front end: file IO, manifests and the `diffedit` subcommands.

use std::path::{Path, PathBuf};

pub mod commands;
pub mod io;
pub mod manifest;

pub use commands::{run, Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] diffedit::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stable name for the `error` field of the JSON error object.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::MalformedHeader(_) => "MalformedHeader",
            CliError::UnsupportedFormat(_) => "UnsupportedFormat",
            CliError::Io { .. } => "Io",
            CliError::InvalidManifest(_) => "InvalidManifest",
            CliError::Usage(_) => "Usage",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() })
    }
}
