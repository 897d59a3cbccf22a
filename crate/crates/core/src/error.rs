use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left_h}x{left_w} vs {right_h}x{right_w}")]
    DimensionMismatch {
        left_h: usize,
        left_w: usize,
        right_h: usize,
        right_w: usize,
    },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("malformed RLE: {0}")]
    MalformedRle(String),

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("no error region: prediction already equals ground truth")]
    NoErrorRegion,

    #[error("invalid prompt: {0}")]
    InvalidPrompt(String),

    #[error("memory bank: {0}")]
    MemoryBank(String),

    #[error("segmenter: {0}")]
    Segmenter(String),

    #[error("no mask candidates to select from")]
    NoCandidates,

    #[error("sequence length mismatch: {0} predictions vs {1} ground-truth frames")]
    LengthMismatch(usize, usize),

    #[error("no frames left to score")]
    EmptyScoredSet,

    #[error("unpaired mask: {0}")]
    Unpaired(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("manifest {location}: {message}")]
    Manifest { location: String, message: String },

    #[error("report: {0}")]
    Report(String),

    #[error("PGM: {0}")]
    Pgm(String),

    #[error("synthetic dataset: {0}")]
    Synth(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn manifest(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Manifest {
            location: location.into(),
            message: message.into(),
        }
    }
}
