use std::path::PathBuf;

use crate::lang::LanguageTag;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("character {ch:?} at offset {offset} has no phoneme mapping for {language}")]
    UnmappableGrapheme {
        ch: char,
        offset: usize,
        language: LanguageTag,
    },
    #[error("symbol {symbol:?} is not in the {language} inventory")]
    UnknownSymbol { symbol: String, language: LanguageTag },
    #[error("phoneme id {id} is out of range for the {language} inventory")]
    UnknownId { id: u32, language: LanguageTag },
    #[error("language mismatch: expected {expected}, got {actual}")]
    LanguageMismatch {
        expected: LanguageTag,
        actual: LanguageTag,
    },
    #[error("no translator registered for {src} -> {dst}")]
    TranslatorUnavailable { src: LanguageTag, dst: LanguageTag },
    #[error("malformed {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("cannot align {text_len} phonemes onto {mel_len} frames")]
    InfeasibleAlignment { text_len: usize, mel_len: usize },
    #[error("loss term `{term}` is not finite ({value})")]
    NonFiniteLoss { term: &'static str, value: f64 },
    #[error("model not loaded")]
    ModelNotLoaded,
    #[error("unknown speaker {0:?}")]
    UnknownSpeaker(String),

    #[error("{what} contains a non-finite value at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("negative offset {offset} is below the minimum of {min} frames")]
    InvalidNegativeOffset { offset: i64, min: usize },

    #[error("audio covers {available} video frames, {required} required")]
    InsufficientAudio { required: usize, available: usize },
    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("clip of {len} frames has no frame at least {window} frames away from {target}")]
    ClipTooShort {
        len: usize,
        target: usize,
        window: usize,
    },

    #[error("no face found{}", frame.map(|f| format!(" in frame {f}")).unwrap_or_default())]
    NoFaceFound { frame: Option<usize> },
    #[error("crop geometry does not match: {0}")]
    GeometryMismatch(String),
    #[error("unknown landmark provider {0:?}")]
    UnknownProvider(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no mp4 encoder registered")]
    EncoderUnavailable,
    #[error("external encoder failed: {0}")]
    EncoderFailed(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    Config(String),
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error("wav codec: {0}")]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the pipeline stage it surfaced in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
