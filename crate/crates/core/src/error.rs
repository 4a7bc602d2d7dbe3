use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid of {requested} voxels exceeds the limit of {limit}")]
    GridTooLarge { requested: u64, limit: u64 },

    #[error("no free start/goal pair found after {attempts} attempts")]
    WorldTooDense { attempts: usize },

    #[error("start or goal clearance {clearance:.3} m is below robot radius {radius:.3} m")]
    InsufficientClearance { clearance: f64, radius: f64 },

    #[error("unsupported {kind} schema version {found} (expected {expected})")]
    SchemaVersion { kind: &'static str, found: u32, expected: u32 },

    #[error("malformed ESDF blob: {0}")]
    MalformedBlob(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Serialize(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
