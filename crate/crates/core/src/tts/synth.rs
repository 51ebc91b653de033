use std::sync::Arc;

use candle_core::{DType, Device, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::{SpeakerProfile, TtsModel};
use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::lang::LanguageTag;
use crate::textfront::PhonemeSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisOptions {
    /// Scale of the prior sample noise; 0 decodes the prior mean.
    pub noise_scale: f64,
    /// Multiplier on predicted durations.
    pub length_scale: f64,
    pub seed: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            noise_scale: 0.667,
            length_scale: 1.0,
            seed: 0,
        }
    }
}

/// What the synthesizer did with the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisTrace {
    /// True when the zero vector replaced the speaker embedding.
    pub substitution: bool,
    /// Rounded frames per phoneme.
    pub durations: Vec<usize>,
    pub n_frames: usize,
}

/// Read-only inference handle; clones share the loaded model.
#[derive(Clone, Default)]
pub struct TtsSession {
    model: Option<Arc<TtsModel>>,
}

impl TtsSession {
    pub fn new(model: TtsModel) -> Self {
        TtsSession {
            model: Some(Arc::new(model)),
        }
    }

    pub fn unloaded() -> Self {
        TtsSession { model: None }
    }

    pub fn model(&self) -> Result<&TtsModel> {
        self.model.as_deref().ok_or(Error::ModelNotLoaded)
    }

    pub fn speaker_profile(&self, speaker_id: &str) -> Result<SpeakerProfile> {
        self.model()?.speaker_profile(speaker_id)
    }

    /// Text ids → waveform of `sum(durations) · hop` samples.
    ///
    /// A speaker whose native language differs from `lang` is conditioned on
    /// the zero vector in every speaker-conditioned submodule.
    pub fn synthesize(
        &self,
        seq: &PhonemeSequence,
        lang: LanguageTag,
        speaker: &SpeakerProfile,
        opts: &SynthesisOptions,
    ) -> Result<(Waveform, SynthesisTrace)> {
        let m = self.model()?;
        if seq.language != lang {
            return Err(Error::LanguageMismatch {
                expected: lang,
                actual: seq.language,
            });
        }
        let cfg = m.config();
        let h = cfg.hidden_dim;
        let substitution = speaker.native_language != lang;
        if speaker.embedding.len() != h {
            return Err(Error::ShapeMismatch(format!(
                "speaker embedding has {} values, model expects {h}",
                speaker.embedding.len()
            )));
        }
        if seq.is_empty() {
            let trace = SynthesisTrace {
                substitution,
                durations: Vec::new(),
                n_frames: 0,
            };
            return Ok((Waveform::silence(0, cfg.sample_rate), trace));
        }
        let spk = if substitution {
            Tensor::zeros(h, DType::F32, &Device::Cpu)?
        } else {
            Tensor::from_slice(&speaker.embedding, h, &Device::Cpu)?
        };
        let lang_vec = m.language_embedding(lang)?;

        let t = seq.len();
        let ids = Tensor::from_vec(m.symbols().global_ids(seq)?, (1, t), &Device::Cpu)?;
        let text_mask = Tensor::ones((1, 1, t), DType::F32, &Device::Cpu)?;
        let g = spk.unsqueeze(0)?;
        let enc = m.encoder.forward(&ids, &text_mask, &lang_vec.unsqueeze(0)?)?;
        let logw = m.duration.forward(&enc.hidden, &text_mask, &lang_vec.unsqueeze(0)?, &g)?;
        let w: Vec<f32> = logw.exp()?.flatten_all()?.to_vec1()?;
        let durations: Vec<usize> = w
            .iter()
            .map(|&d| ((d as f64 * opts.length_scale).round() as usize).max(1))
            .collect();
        let n_frames: usize = durations.iter().sum();

        let mut attn = vec![0f32; t * n_frames];
        let mut y = 0;
        for (x, &d) in durations.iter().enumerate() {
            for _ in 0..d {
                attn[x * n_frames + y] = 1.0;
                y += 1;
            }
        }
        let attn = Tensor::from_vec(attn, (1, t, n_frames), &Device::Cpu)?;
        let m_p = enc.m_p.matmul(&attn)?;
        let logs_p = enc.logs_p.matmul(&attn)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let n = cfg.latent_dim * n_frames;
        let eps: Vec<f32> = (0..n).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
        let eps = Tensor::from_vec(eps, (1, cfg.latent_dim, n_frames), &Device::Cpu)?;
        let z_p = (&m_p + ((eps * logs_p.exp()?)? * opts.noise_scale)?)?;
        let mel_mask = Tensor::ones((1, 1, n_frames), DType::F32, &Device::Cpu)?;
        let z = m.flow.reverse(&z_p, &mel_mask, &g)?;
        let audio: Vec<f32> = m.decoder.forward(&z, &g)?.flatten_all()?.to_vec1()?;
        let wave = Waveform::new(audio, cfg.sample_rate)?;
        Ok((
            wave,
            SynthesisTrace {
                substitution,
                durations,
                n_frames,
            },
        ))
    }
}
