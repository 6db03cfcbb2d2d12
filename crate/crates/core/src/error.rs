use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tessellation: segments={segments}, rings={rings} (both must be >= 3)")]
    InvalidTessellation { segments: usize, rings: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("quaternion has zero norm")]
    ZeroQuaternion,

    #[error("point is at or behind the camera plane (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("feature channel count changed from {expected} to {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("degenerate vertex set: {0}")]
    DegenerateGeometry(String),

    #[error("empty mask: {0}")]
    EmptyMask(String),

    #[error("tracker is not initialized")]
    Uninitialized,

    #[error("bad feature file {path}: {reason}")]
    FeatureFormat { path: PathBuf, reason: String },

    #[error("resolution mismatch in {what}: expected {expected:?}, found {found:?}")]
    ResolutionMismatch {
        what: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
