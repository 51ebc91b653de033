use candle_core::{Device, Tensor};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::{AlignedClip, SyncWindow, SYNC_WINDOW};
use super::model::{sync_bce, windows_to_tensors, SyncExpert};
use crate::error::{Error, Result};
use crate::nn::{scalar, to_f32_vec};

/// Mean cosine of in-sync and off-sync pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncSeparation {
    pub in_sync: f64,
    pub off_sync: f64,
}

impl SyncSeparation {
    pub fn gap(&self) -> f64 {
        self.in_sync - self.off_sync
    }
}

/// Draws a window start in `clip` and a valid negative shift for it.
fn sample_pair(rng: &mut impl Rng, clip: &AlignedClip) -> Option<(usize, i64)> {
    let last = clip.len().checked_sub(SYNC_WINDOW)?;
    for _ in 0..16 {
        let start = rng.gen_range(0..=last);
        if let Some(shift) = clip.sample_shift(rng, start) {
            return Some((start, shift));
        }
    }
    None
}

fn usable(clips: &[AlignedClip]) -> Result<Vec<&AlignedClip>> {
    let ok: Vec<&AlignedClip> = clips.iter().filter(|c| c.len() >= SYNC_WINDOW + super::MIN_NEGATIVE_SHIFT).collect();
    if ok.is_empty() {
        return Err(Error::ClipTooShort {
            len: clips.iter().map(|c| c.len()).max().unwrap_or(0),
            target: 0,
            window: SYNC_WINDOW + super::MIN_NEGATIVE_SHIFT,
        });
    }
    Ok(ok)
}

/// Pairs of windows sharing the same frames: one with aligned audio, one with
/// shifted audio.
fn sample_batch(rng: &mut impl Rng, clips: &[&AlignedClip], n: usize) -> Result<(Vec<SyncWindow>, Vec<f32>)> {
    let mut windows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while windows.len() < n {
        let clip = clips[rng.gen_range(0..clips.len())];
        let Some((start, shift)) = sample_pair(rng, clip) else { continue };
        windows.push(clip.window(start, 0)?);
        labels.push(1.0);
        if windows.len() < n {
            windows.push(clip.negative_window(start, shift)?);
            labels.push(0.0);
        }
    }
    Ok((windows, labels))
}

pub struct SyncTrainer {
    expert: SyncExpert,
    opt: AdamW,
    rng: ChaCha8Rng,
    step: usize,
}

impl SyncTrainer {
    pub fn new(expert: SyncExpert) -> Result<Self> {
        let cfg = expert.config().clone();
        let opt = AdamW::new(
            expert.params().vars(),
            ParamsAdamW { lr: cfg.learning_rate, weight_decay: 0.0, ..Default::default() },
        )?;
        Ok(SyncTrainer { rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5359_4e43), expert, opt, step: 0 })
    }

    pub fn expert(&self) -> &SyncExpert {
        &self.expert
    }

    pub fn into_expert(self) -> SyncExpert {
        self.expert
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// One update on a fresh batch of positives and shifted negatives.
    pub fn training_step(&mut self, clips: &[AlignedClip]) -> Result<f64> {
        let clips = usable(clips)?;
        let (windows, labels) = sample_batch(&mut self.rng, &clips, self.expert.config().batch_size)?;
        let (f, m) = windows_to_tensors(&windows, self.expert.config())?;
        let y = Tensor::from_vec(labels, windows.len(), &Device::Cpu)?;
        let loss = sync_bce(&self.expert.cosine(&f, &m)?, &y)?;
        let value = scalar(&loss)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { term: "sync", value });
        }
        self.opt.backward_step(&loss)?;
        self.step += 1;
        Ok(value)
    }
}

/// Trains a fresh expert on `clips` for `steps` updates.
pub fn train_expert(expert: SyncExpert, clips: &[AlignedClip], steps: usize) -> Result<SyncExpert> {
    let mut t = SyncTrainer::new(expert)?;
    for _ in 0..steps {
        t.training_step(clips)?;
    }
    Ok(t.into_expert())
}

/// Mean cosine over `n_pairs` in-sync windows and as many shifted ones.
pub fn measure_separation(expert: &SyncExpert, clips: &[AlignedClip], n_pairs: usize, seed: u64) -> Result<SyncSeparation> {
    let clips = usable(clips)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (windows, labels) = sample_batch(&mut rng, &clips, 2 * n_pairs)?;
    let mut cos = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(32) {
        let (f, m) = windows_to_tensors(chunk, expert.config())?;
        cos.extend(to_f32_vec(&expert.cosine(&f, &m)?)?);
    }
    let mean = |want: f32| {
        let v: Vec<f64> = cos.iter().zip(&labels).filter(|(_, &l)| l == want).map(|(&c, _)| c as f64).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    Ok(SyncSeparation { in_sync: mean(1.0), off_sync: mean(0.0) })
}
