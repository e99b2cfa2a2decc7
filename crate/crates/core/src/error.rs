use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input {height}x{width} is smaller than the minimum {min_height}x{min_width}")]
    InputTooSmall {
        height: usize,
        width: usize,
        min_height: usize,
        min_width: usize,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("non-finite loss at step {step} (batch {height}x{width}, d_loss={d_loss}, g_loss={g_loss})")]
    NonFiniteLoss {
        step: u64,
        height: usize,
        width: usize,
        d_loss: f64,
        g_loss: f64,
    },

    #[error("no decodable images found in {0}")]
    EmptyDataset(PathBuf),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),

    #[error("image error for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("i/o error for {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }
}

/// Failures while reading a checkpoint. Each corruption mode is its own variant.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint blob is truncated: need {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("checkpoint contains unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("checkpoint is missing parameter `{0}`")]
    MissingParameter(String),

    #[error("parameter `{name}` has shape {found:?} in checkpoint, model expects {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("scalar width {found} in checkpoint does not match {expected}")]
    ScalarWidth { found: usize, expected: usize },

    #[error("overlapping blob entries at `{0}`")]
    Overlap(String),

    #[error("malformed manifest line {line}: {message}")]
    Malformed { line: usize, message: String },
}
