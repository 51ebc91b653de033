use std::path::Path;

use super::config::TtsConfig;
use super::model::{SpeakerEntry, SymbolTable, TtsModel};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::lang::LanguageTag;
use crate::textfront::Frontend;

pub const TTS_CHECKPOINT_KIND: &str = "tts";

impl TtsModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let languages: Vec<&str> = LanguageTag::ALL.iter().map(|l| l.code()).collect();
        Checkpoint::new(TTS_CHECKPOINT_KIND, &self.cfg, &self.params)?
            .with_record("speakers", &self.speakers)?
            .with_record("languages", &languages)?
            .with_record("inventories", &self.symbols)?
            .save(path)
    }

    /// Loads a checkpoint, refusing it when its phoneme inventories differ
    /// from those of `frontend`.
    pub fn load(path: &Path, frontend: &Frontend) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        ck.expect_kind(TTS_CHECKPOINT_KIND, path)?;
        let stored: SymbolTable = ck.record("inventories")?;
        let current = SymbolTable::from_frontend(frontend);
        for lang in LanguageTag::ALL {
            let i = lang.index();
            if stored.hashes[i] != current.hashes[i] || stored.sizes[i] != current.sizes[i] {
                return Err(Error::Checkpoint {
                    path: path.to_path_buf(),
                    reason: format!("{lang} phoneme inventory differs from the one the model was trained with"),
                });
            }
        }
        let languages: Vec<String> = ck.record("languages")?;
        if languages.iter().map(String::as_str).ne(LanguageTag::ALL.iter().map(|l| l.code())) {
            return Err(Error::Checkpoint { path: path.to_path_buf(), reason: format!("language table {languages:?}") });
        }
        let cfg: TtsConfig = ck.config()?;
        let speakers: Vec<SpeakerEntry> = ck.record("speakers")?;
        let model = TtsModel::new(cfg, current, speakers)?;
        ck.restore(&model.params)?;
        Ok(model)
    }
}
