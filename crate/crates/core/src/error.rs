use std::path::PathBuf;

use thiserror::Error;

use crate::appearance::MotionState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate completion problem: {0}")]
    DegenerateProblem(String),

    #[error("invalid motion state: {0}")]
    InvalidState(String),

    #[error("invalid observation mask: {0}")]
    InvalidMask(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("template initialization failed: {0}")]
    TemplateInit(String),

    #[error("tracker lost at frame {frame}; last valid state {last:?}")]
    TrackerLost { frame: usize, last: MotionState },

    #[error("failed to read frame {index} ({path}): {reason}")]
    Ingestion {
        index: usize,
        path: PathBuf,
        reason: String,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("ground truth has {boxes} boxes but the sequence has {frames} frames")]
    CountMismatch { boxes: usize, frames: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
