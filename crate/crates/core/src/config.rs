//! TOML configuration covering every module.
//!
//! Every key is optional; missing keys take the defaults below.
//!
//! ```toml
//! [tts]        # TtsConfig
//! [sync]       # SyncConfig
//! [facegen]    # FacegenConfig
//! [pipeline]   # DubConfig, with [pipeline.synthesis] and [pipeline.crop]
//! [train]      # TrainConfig
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facegen::FacegenConfig;
use crate::lang::LanguageTag;
use crate::pipeline::DubConfig;
use crate::sync_expert::SyncConfig;
use crate::toydata::ToySpec;
use crate::tts::TtsConfig;

/// Training-run settings shared by the `train` subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    /// Toy corpus generated in memory for training.
    pub languages: Vec<LanguageTag>,
    pub speakers_per_language: usize,
    pub utterances_per_speaker: usize,
    pub corpus_seed: u64,
    /// Length of the clip used for face-generator training.
    pub clip_frames: usize,
    /// Where the trained checkpoint is written.
    pub output: PathBuf,
    /// Frozen sync expert supervising face-generator training.
    pub sync_checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            languages: vec![LanguageTag::Ko, LanguageTag::En],
            speakers_per_language: 2,
            utterances_per_speaker: 10,
            corpus_seed: 1,
            clip_frames: 50,
            output: PathBuf::from("checkpoint.safetensors"),
            sync_checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn toy_spec(&self) -> ToySpec {
        ToySpec::new(
            self.speakers_per_language,
            self.languages.clone(),
            self.utterances_per_speaker,
            self.corpus_seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tts: TtsConfig,
    pub sync: SyncConfig,
    pub facegen: FacegenConfig,
    pub pipeline: DubConfig,
    pub train: TrainConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.tts.validate()?;
        self.sync.validate()?;
        self.facegen.validate()?;
        self.train.toy_spec().validate()?;
        if self.sync.face_size != self.facegen.face_size || self.sync.mel_bins != self.facegen.mel_bins {
            return Err(Error::Config("sync and facegen must agree on face_size and mel_bins".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = Config::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = Config::from_toml("[train]\nsteps = 10\n[facegen]\nsync_weight = 0.5\n").unwrap();
        assert_eq!(cfg.train.steps, 10);
        assert_eq!(cfg.facegen.sync_weight, 0.5);
        assert_eq!(cfg.tts, TtsConfig::default());
    }

    #[test]
    fn unknown_section_is_rejected() {
        assert!(Config::from_toml("[bogus]\nx = 1\n").is_err());
    }

    #[test]
    fn mismatched_face_sizes_are_rejected() {
        assert!(Config::from_toml("[sync]\nface_size = 32\n").is_err());
    }
}
