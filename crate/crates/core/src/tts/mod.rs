//! Multilingual end-to-end text-to-speech: text encoder with language
//! embeddings, duration predictor, normalising flow, waveform decoder, and
//! the adversarial speaker classifier used during training.

mod align;
mod config;
mod io;
mod model;
mod probe;
mod schedule;
mod synth;
mod train;

pub use align::{monotonic_align, monotonic_align_path, path_durations};
pub use config::{TtsConfig, UPSAMPLE_RATES};
pub use io::TTS_CHECKPOINT_KIND;
pub use model::{
    masked_mean, pooled_encoding, speaker_mean_penalty, SpeakerEntry, SpeakerProfile, SymbolTable, TextEncoding,
    TtsModel,
};
pub use probe::probe_accuracy;
pub use schedule::lambda_schedule;
pub use synth::{SynthesisOptions, SynthesisTrace, TtsSession};
pub use train::{pooled_encodings, LossBreakdown, TtsExample, TtsTrainer};
