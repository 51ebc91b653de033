use serde::{Deserialize, Serialize};

use crate::audio::MelConfig;
use crate::error::{Error, Result};

/// Decoder upsampling factors; their product is the hop length.
pub const UPSAMPLE_RATES: [usize; 3] = [8, 8, 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TtsConfig {
    pub hidden_dim: usize,
    pub n_text_layers: usize,
    pub n_heads: usize,
    pub ffn_dim: usize,
    pub n_flow_steps: usize,
    pub latent_dim: usize,
    pub decoder_channels: usize,
    pub mel_bins: usize,
    pub n_fft: usize,
    pub sample_rate: u32,
    pub hop_length: usize,
    /// Steepness of the adversarial-weight ramp.
    pub lambda_gamma: f64,
    /// Weight of the speaker-centroid penalty.
    pub reg_weight: f64,
    /// Weight of the adversarial speaker-classification loss.
    pub adv_weight: f64,
    pub mel_weight: f64,
    pub kl_weight: f64,
    pub duration_weight: f64,
    /// Latent frames decoded to waveform per training example.
    pub segment_frames: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Std of the initial speaker embeddings.
    pub speaker_init_std: f64,
    pub seed: u64,
}

impl Default for TtsConfig {
    fn default() -> Self {
        TtsConfig {
            hidden_dim: 64,
            n_text_layers: 2,
            n_heads: 2,
            ffn_dim: 128,
            n_flow_steps: 2,
            latent_dim: 16,
            decoder_channels: 128,
            mel_bins: 40,
            n_fft: 1024,
            sample_rate: 22050,
            hop_length: 256,
            lambda_gamma: 10.0,
            reg_weight: 1.0,
            adv_weight: 3.0,
            mel_weight: 45.0,
            kl_weight: 1.0,
            duration_weight: 1.0,
            segment_frames: 8,
            learning_rate: 2e-3,
            batch_size: 4,
            speaker_init_std: 0.3,
            seed: 1234,
        }
    }
}

impl TtsConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("hidden_dim", self.hidden_dim),
            ("n_text_layers", self.n_text_layers),
            ("n_heads", self.n_heads),
            ("ffn_dim", self.ffn_dim),
            ("n_flow_steps", self.n_flow_steps),
            ("latent_dim", self.latent_dim),
            ("decoder_channels", self.decoder_channels),
            ("mel_bins", self.mel_bins),
            ("segment_frames", self.segment_frames),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("tts.{name} must be positive")));
        }
        if self.hidden_dim % self.n_heads != 0 {
            return Err(Error::Config("tts.hidden_dim must be divisible by tts.n_heads".into()));
        }
        if self.latent_dim % 2 != 0 {
            return Err(Error::Config("tts.latent_dim must be even".into()));
        }
        if self.hop_length != UPSAMPLE_RATES.iter().product::<usize>() {
            return Err(Error::Config(format!(
                "tts.hop_length must equal the decoder upsampling factor {}",
                UPSAMPLE_RATES.iter().product::<usize>()
            )));
        }
        if self.decoder_channels % 8 != 0 {
            return Err(Error::Config("tts.decoder_channels must be divisible by 8".into()));
        }
        if self.reg_weight < 0.0 || self.adv_weight < 0.0 || self.lambda_gamma <= 0.0 {
            return Err(Error::Config("tts loss weights must be non-negative and lambda_gamma positive".into()));
        }
        Ok(())
    }

    pub fn mel(&self) -> MelConfig {
        MelConfig {
            sample_rate: self.sample_rate,
            n_fft: self.n_fft,
            hop_length: self.hop_length,
            mel_bins: self.mel_bins,
            ..MelConfig::default()
        }
    }
}
