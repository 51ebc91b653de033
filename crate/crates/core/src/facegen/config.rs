use candle_core::DType;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUPPORTED_FACE_SIZES: [usize; 5] = [64, 96, 128, 256, 512];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FacegenConfig {
    pub face_size: usize,
    pub mel_bins: usize,
    /// Width of the first generator level; deeper levels double it.
    pub channels: usize,
    pub audio_dim: usize,
    pub gru_hidden: usize,
    pub disc_channels: usize,
    pub disc_scales: usize,
    pub sync_weight: f64,
    pub adv_weight: f64,
    pub learning_rate: f64,
    pub disc_learning_rate: f64,
    /// Sync windows (of five frames) per training step.
    pub batch_windows: usize,
    /// Probability that a training sample is geometrically augmented.
    pub augment_prob: f64,
    pub max_shift_frac: f64,
    pub max_angle: f64,
    pub max_zoom_delta: f64,
    pub seed: u64,
    #[serde(skip)]
    pub dtype: Option<DType>,
}

impl Default for FacegenConfig {
    fn default() -> Self {
        FacegenConfig {
            face_size: 64,
            mel_bins: 40,
            channels: 8,
            audio_dim: 64,
            gru_hidden: 64,
            disc_channels: 16,
            disc_scales: 2,
            sync_weight: 0.03,
            adv_weight: 0.07,
            learning_rate: 1e-3,
            disc_learning_rate: 1e-3,
            batch_windows: 1,
            augment_prob: 0.5,
            max_shift_frac: 0.05,
            max_angle: 5.0,
            max_zoom_delta: 0.05,
            seed: 11,
            dtype: None,
        }
    }
}

impl FacegenConfig {
    pub fn dtype(&self) -> DType {
        self.dtype.unwrap_or(DType::F32)
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_FACE_SIZES.contains(&self.face_size) {
            return Err(Error::Config(format!(
                "face_size {} not in {SUPPORTED_FACE_SIZES:?}",
                self.face_size
            )));
        }
        if self.disc_scales == 0 || (self.face_size >= 256 && self.disc_scales != 3) {
            return Err(Error::Config(format!(
                "{} discriminator scales at face_size {}; use 3 from 256 upwards",
                self.disc_scales, self.face_size
            )));
        }
        if self.channels == 0 || self.audio_dim == 0 || self.gru_hidden == 0 || self.disc_channels == 0 {
            return Err(Error::Config("facegen widths must be positive".into()));
        }
        if self.batch_windows == 0 {
            return Err(Error::Config("batch_windows must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.augment_prob) {
            return Err(Error::Config(format!("augment_prob {} outside [0, 1]", self.augment_prob)));
        }
        if self.max_shift_frac > 0.1 || self.max_angle > 15.0 || self.max_zoom_delta > 0.15 {
            return Err(Error::Config("augmentation ranges exceed their bounds".into()));
        }
        Ok(())
    }
}
