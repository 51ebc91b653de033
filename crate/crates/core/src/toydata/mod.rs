//! Deterministic synthetic corpora: procedural voices, rendered talking
//! faces and on-disk manifests.

pub mod corpus;
pub mod face;
pub mod voice;

pub use corpus::{
    build_corpus, generate_utterances, speaker_audio, tts_training_set, read_clip, read_fps_sidecar, Manifest, ManifestRow, ToySpec, ToySpeaker,
    ToyUtterance, MANIFEST_FILE,
};
pub use face::{mouth_height, render_face_clip, FaceClip, FaceStyle, SyntheticProvider, SYNTHETIC_PROVIDER};
pub use voice::{render_voice, speaker_pitch, PHONEME_SAMPLES};
