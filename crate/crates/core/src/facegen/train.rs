use std::sync::Arc;

use candle_core::{Device, Tensor};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::augment::{augment, AugmentParams};
use super::disc::{hinge_disc_loss, hinge_gen_loss};
use super::model::FacegenModel;
use super::negative::sample_negative_index;
use crate::audio::SYNC_MEL_FRAMES;
use crate::error::{Error, Result};
use crate::facecrop::FaceFrame;
use crate::nn::scalar;
use crate::sync_expert::{sync_bce, AlignedClip, SyncExpert, SYNC_WINDOW};

/// Training windows drawn from one clip, already augmented.
#[derive(Debug, Clone)]
pub struct FacegenBatch {
    /// `(N, 3, S, S)` ground-truth frames, window-major.
    pub targets: Tensor,
    /// `(N, 3, S, S)` identity frames.
    pub identities: Tensor,
    /// Clip frame index of every target.
    pub frame_indices: Vec<u32>,
    /// `(N / 5, 1, 17, mel_bins)` audio of each window.
    pub mel_chunks: Tensor,
}

/// Per-term losses of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FacegenLosses {
    pub l1: f64,
    pub sync: f64,
    pub adv_g: f64,
    pub adv_d: f64,
    pub total_g: f64,
}

/// Differentiable generator objective for one batch.
pub struct GeneratorTerms {
    pub generated: Tensor,
    pub l1: Tensor,
    pub sync: Tensor,
    pub adv_g: Option<Tensor>,
    pub total: Tensor,
}

fn check(term: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteLoss { term, value })
    }
}

pub struct FacegenTrainer {
    model: FacegenModel,
    expert: Arc<SyncExpert>,
    opt_g: AdamW,
    opt_d: AdamW,
    rng: ChaCha8Rng,
    step: usize,
}

impl FacegenTrainer {
    /// `expert` stays frozen: none of its parameters are optimised here.
    pub fn new(model: FacegenModel, expert: Arc<SyncExpert>) -> Result<Self> {
        let (cfg, ecfg) = (model.config(), expert.config());
        if ecfg.face_size != cfg.face_size || ecfg.mel_bins != cfg.mel_bins {
            return Err(Error::Config(format!(
                "sync expert sees {}px faces and {} mel bins, generator {}px and {}",
                ecfg.face_size, ecfg.mel_bins, cfg.face_size, cfg.mel_bins
            )));
        }
        let adam = |lr| ParamsAdamW { lr, beta1: 0.5, beta2: 0.999, weight_decay: 0.0, ..Default::default() };
        Ok(FacegenTrainer {
            opt_g: AdamW::new(model.generator_params(), adam(cfg.learning_rate))?,
            opt_d: AdamW::new(model.disc_params(), adam(cfg.disc_learning_rate))?,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4641_4345),
            step: 0,
            model,
            expert,
        })
    }

    pub fn model(&self) -> &FacegenModel {
        &self.model
    }

    pub fn into_model(self) -> FacegenModel {
        self.model
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Random windows of `clip`; every frame of a window shares one
    /// augmentation draw.
    pub fn sample_batch(&mut self, clip: &AlignedClip) -> Result<FacegenBatch> {
        let cfg = self.model.config().clone();
        if clip.face_size() != cfg.face_size {
            return Err(Error::ShapeMismatch(format!("{}px clip for a {}px generator", clip.face_size(), cfg.face_size)));
        }
        let n = clip.len();
        if n < SYNC_WINDOW + 1 {
            return Err(Error::ClipTooShort { len: n, target: 0, window: SYNC_WINDOW });
        }
        let mut targets = Vec::new();
        let mut identities = Vec::new();
        let mut indices = Vec::new();
        let mut mels = Vec::new();
        for _ in 0..cfg.batch_windows {
            let start = self.rng.gen_range(0..=n - SYNC_WINDOW);
            let p = if self.rng.gen_bool(cfg.augment_prob) {
                AugmentParams::sample(&mut self.rng, &cfg)
            } else {
                AugmentParams::IDENTITY
            };
            for t in start..start + SYNC_WINDOW {
                let id = sample_negative_index(&mut self.rng, n, t)?;
                targets.push(augment(&clip.faces[t], &p)?);
                identities.push(augment(&clip.faces[id], &p)?);
                indices.push(t as u32);
            }
            mels.extend(clip.mel_chunk(start));
        }
        self.batch_from(&targets, &identities, indices, mels)
    }

    /// Assembles a batch from explicit frames; `targets.len()` must be a
    /// multiple of the sync window.
    pub fn batch_from(
        &self,
        targets: &[FaceFrame],
        identities: &[FaceFrame],
        frame_indices: Vec<u32>,
        mel_chunks: Vec<f32>,
    ) -> Result<FacegenBatch> {
        let dtype = self.model.dtype();
        let b = targets.len() / SYNC_WINDOW;
        let mel_bins = self.model.config().mel_bins;
        let stack = |fs: &[FaceFrame]| -> Result<Tensor> {
            let ts = fs.iter().map(|f| f.to_tensor()).collect::<Result<Vec<_>>>()?;
            Ok(Tensor::stack(&ts, 0)?.to_dtype(dtype)?)
        };
        Ok(FacegenBatch {
            targets: stack(targets)?,
            identities: stack(identities)?,
            frame_indices,
            mel_chunks: Tensor::from_vec(mel_chunks, (b, 1, SYNC_MEL_FRAMES, mel_bins), &Device::Cpu)?.to_dtype(dtype)?,
        })
    }

    /// Generator objective `l1 + w_sync·sync + w_adv·adv_g` for `batch`.
    pub fn generator_terms(&self, batch: &FacegenBatch, clip: &AlignedClip) -> Result<GeneratorTerms> {
        let cfg = self.model.config();
        let s = cfg.face_size;
        let feats = self.model.audio_encode_frames(&clip.mel, clip.len())?;
        let idx = Tensor::new(batch.frame_indices.as_slice(), &Device::Cpu)?;
        let audio = feats.index_select(&idx, 0)?;
        let generated = self.model.generate(&batch.targets, &batch.identities, &audio)?;
        let l1 = (&generated - &batch.targets)?.abs()?.mean_all()?;
        let n = generated.dims()[0];
        let lower = generated.narrow(2, s / 2, s / 2)?.reshape((n / SYNC_WINDOW, 3 * SYNC_WINDOW, s / 2, s))?;
        let cos = self.expert.cosine(&lower, &batch.mel_chunks)?;
        let sync = sync_bce(&cos, &cos.ones_like()?)?;
        let mut total = (&l1 + (&sync * cfg.sync_weight)?)?;
        let adv_g = if cfg.adv_weight > 0.0 {
            let a = hinge_gen_loss(&self.model.disc().forward(&generated)?)?;
            total = (total + (&a * cfg.adv_weight)?)?;
            Some(a)
        } else {
            None
        };
        Ok(GeneratorTerms { generated, l1, sync, adv_g, total })
    }

    /// Generator update, then (with a positive adversarial weight) a
    /// discriminator update on the detached output.
    pub fn training_step(&mut self, clip: &AlignedClip) -> Result<FacegenLosses> {
        let batch = self.sample_batch(clip)?;
        let terms = self.generator_terms(&batch, clip)?;
        let l1 = check("l1", scalar(&terms.l1)?)?;
        let sync = check("sync", scalar(&terms.sync)?)?;
        let adv_g = match &terms.adv_g {
            Some(a) => check("adv_g", scalar(a)?)?,
            None => 0.0,
        };
        let total_g = check("total_g", scalar(&terms.total)?)?;
        self.opt_g.backward_step(&terms.total)?;
        let mut adv_d = 0.0;
        if self.model.config().adv_weight > 0.0 {
            let disc = self.model.disc();
            let real = disc.forward(&batch.targets)?;
            let fake = disc.forward(&terms.generated.detach())?;
            let d_loss = hinge_disc_loss(&real, &fake)?;
            adv_d = check("adv_d", scalar(&d_loss)?)?;
            self.opt_d.backward_step(&d_loss)?;
        }
        self.step += 1;
        Ok(FacegenLosses { l1, sync, adv_g, adv_d, total_g })
    }
}
