use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("audio too short: {samples} samples, one frame needs {needed}")]
    AudioTooShort { samples: usize, needed: usize },

    #[error("unsupported sample rate: {0} Hz (supported: 8000, 16000)")]
    UnsupportedSampleRate(u32),

    #[error("{path}: audio has {channels} channels; downmix to mono before feature extraction")]
    MultiChannel { path: PathBuf, channels: u16 },

    #[error("unsupported audio encoding in {path}: {reason}")]
    UnsupportedAudio { path: PathBuf, reason: String },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite likelihood in utterance {0}")]
    NonFiniteLikelihood(String),

    #[error("degenerate DET: scores need at least one positive and one negative")]
    DegenerateDet,

    #[error("time base mismatch in {utterance}: {frames} frames vs transcript ending at frame {transcript_frames}")]
    TimeBaseMismatch {
        utterance: String,
        frames: usize,
        transcript_frames: usize,
    },

    #[error("model not found: {0}")]
    ModelNotFound(PathBuf),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("model encoding: {0}")]
    Encoding(#[from] bincode::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 1,
            Error::NonFiniteLikelihood(_) | Error::DegenerateDet => 3,
            _ => 2,
        }
    }
}
