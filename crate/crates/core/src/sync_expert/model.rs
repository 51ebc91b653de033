use std::path::Path;

use candle_core::{DType, Device, Tensor, D};
use serde::{Deserialize, Serialize};

use super::data::{SyncWindow, SYNC_WINDOW};
use crate::audio::SYNC_MEL_FRAMES;
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::nn::{to_f32_vec, Conv2d, Linear, Params};

pub const SYNC_CHECKPOINT_KIND: &str = "sync_expert";
const MEL_OFFSET: f64 = 5.0;
const MEL_SCALE: f64 = 0.2;
const NORM_EPS: f64 = 1e-12;
const INPUT_EPS: f64 = 1e-4;
const FRAME_FEATURES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyncConfig {
    pub face_size: usize,
    pub mel_bins: usize,
    pub embed_dim: usize,
    pub channels: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(skip)]
    pub dtype: Option<DType>,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            face_size: 64,
            mel_bins: 40,
            embed_dim: 64,
            channels: 8,
            learning_rate: 1e-3,
            batch_size: 16,
            seed: 7,
            dtype: None,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<()> {
        if self.face_size == 0 || self.face_size % 32 != 0 {
            return Err(Error::Config(format!("sync face_size {} is not a multiple of 32", self.face_size)));
        }
        if self.mel_bins == 0 || self.embed_dim == 0 || self.channels == 0 || self.batch_size < 2 {
            return Err(Error::Config("sync expert sizes must be positive and batch_size at least 2".into()));
        }
        Ok(())
    }
}

/// Positive or negative pair label for the sync loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncLabel {
    InSync,
    OffSync,
}

/// Binary cross-entropy of `(cos + 1) / 2` against the label.
pub fn sync_loss(v: &[f32], a: &[f32], label: SyncLabel) -> f64 {
    let cos: f64 = v.iter().zip(a).map(|(x, y)| *x as f64 * *y as f64).sum();
    let s = ((cos + 1.0) / 2.0).clamp(0.0, 1.0);
    match label {
        SyncLabel::InSync => -s.max(f64::MIN_POSITIVE).ln(),
        SyncLabel::OffSync => -(1.0 - s).max(f64::MIN_POSITIVE).ln(),
    }
}

/// Mean sync loss over a batch of cosines; `in_sync` holds 1 for positives.
pub fn sync_bce(cos: &Tensor, in_sync: &Tensor) -> Result<Tensor> {
    let eps = 1e-7;
    let s = ((cos + 1.0)? * 0.5)?.clamp(eps, 1.0 - eps)?;
    let pos = (in_sync * s.log()?)?;
    let neg = ((1.0 - in_sync)? * (1.0 - &s)?.log()?)?;
    Ok((pos + neg)?.mean_all()?.neg()?)
}

fn l2_normalize(x: &Tensor) -> Result<Tensor> {
    let n = (x.sqr()?.sum_keepdim(D::Minus1)? + NORM_EPS)?.sqrt()?;
    Ok(x.broadcast_div(&n)?)
}

fn conv_out(n: usize, stride: usize) -> usize {
    (n - 1) / stride + 1
}

/// Strided ReLU convolutions followed by a linear projection.
struct ConvStack {
    convs: Vec<Conv2d>,
    proj: Linear,
}

impl ConvStack {
    fn new(p: &Params, c_in: usize, c: usize, strides: &[usize], (h, w): (usize, usize), out: usize) -> Result<Self> {
        let widths = [c_in, c, 2 * c, 2 * c, 4 * c];
        let mut convs = Vec::new();
        let (mut h, mut w) = (h, w);
        for (i, &s) in strides.iter().enumerate() {
            convs.push(Conv2d::he(&p.pp(format!("conv{i}")), widths[i], widths[i + 1], 3, s, 1)?);
            h = conv_out(h, s);
            w = conv_out(w, s);
        }
        let flat = widths[strides.len()] * h * w;
        Ok(ConvStack { convs, proj: Linear::new(&p.pp("proj"), flat, out)? })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut x = x.clone();
        for c in &self.convs {
            x = c.forward(&x)?.relu()?;
        }
        self.proj.forward(&x.flatten_from(1)?)
    }
}

/// Two-tower audio/lip embedding network.
pub struct SyncExpert {
    cfg: SyncConfig,
    params: Params,
    /// Shared per-frame encoder of the lip crops.
    frame: ConvStack,
    visual: Linear,
    audio: ConvStack,
}

impl SyncExpert {
    pub fn new(cfg: SyncConfig) -> Result<Self> {
        cfg.validate()?;
        let p = Params::new(cfg.seed, cfg.dtype.unwrap_or(DType::F32));
        let s = cfg.face_size;
        let c = cfg.channels;
        Ok(SyncExpert {
            frame: ConvStack::new(&p.pp("frame"), 3, c, &[2, 2, 2, 2], (s / 2, s), FRAME_FEATURES)?,
            visual: Linear::new(&p.pp("visual"), SYNC_WINDOW * FRAME_FEATURES, cfg.embed_dim)?,
            audio: ConvStack::new(&p.pp("audio"), 1, c, &[1, 2, 2, 2], (SYNC_MEL_FRAMES, cfg.mel_bins), cfg.embed_dim)?,
            params: p,
            cfg,
        })
    }

    pub fn config(&self) -> &SyncConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Unit embeddings for `frames: (B, 3·W, S/2, S)` and
    /// `mel: (B, 1, M, mel_bins)`. Frames are standardised per sample, so a
    /// uniform brightness shift leaves the visual embedding unchanged.
    pub fn embed(&self, frames: &Tensor, mel: &Tensor) -> Result<(Tensor, Tensor)> {
        let s = self.cfg.face_size;
        let (b, c, h, w) = frames.dims4()?;
        if (c, h, w) != (3 * SYNC_WINDOW, s / 2, s) {
            return Err(Error::ShapeMismatch(format!(
                "sync frames ({b}, {c}, {h}, {w}), expected (B, {}, {}, {s})",
                3 * SYNC_WINDOW,
                s / 2
            )));
        }
        let (mb, _, mt, mf) = mel.dims4()?;
        if mb != b || (mt, mf) != (SYNC_MEL_FRAMES, self.cfg.mel_bins) {
            return Err(Error::ShapeMismatch(format!(
                "sync mel ({mb}, _, {mt}, {mf}) for {b} windows of {SYNC_MEL_FRAMES}x{}",
                self.cfg.mel_bins
            )));
        }
        let dtype = self.params.dtype();
        let (frames, mel) = (frames.to_dtype(dtype)?, mel.to_dtype(dtype)?);
        let flat = frames.flatten_from(1)?;
        let mean = flat.mean_keepdim(1)?;
        let centred = flat.broadcast_sub(&mean)?;
        let std = (centred.sqr()?.mean_keepdim(1)? + INPUT_EPS)?.sqrt()?;
        let frames = centred.broadcast_div(&std)?.reshape((b * SYNC_WINDOW, 3, h, w))?;
        let per_frame = self.frame.forward(&frames)?.relu()?.reshape((b, SYNC_WINDOW * FRAME_FEATURES))?;
        let v = l2_normalize(&self.visual.forward(&per_frame)?)?;
        let a = l2_normalize(&self.audio.forward(&((&mel + MEL_OFFSET)? * MEL_SCALE)?)?)?;
        Ok((v, a))
    }

    /// Cosine similarity per window; embeddings are unit-norm.
    pub fn cosine(&self, frames: &Tensor, mel: &Tensor) -> Result<Tensor> {
        let (v, a) = self.embed(frames, mel)?;
        Ok((v * a)?.sum(1)?)
    }

    pub fn embed_pair(&self, w: &SyncWindow) -> Result<(Vec<f32>, Vec<f32>)> {
        let (f, m) = windows_to_tensors(std::slice::from_ref(w), &self.cfg)?;
        let (v, a) = self.embed(&f, &m)?;
        Ok((to_f32_vec(&v)?, to_f32_vec(&a)?))
    }

    pub fn score(&self, w: &SyncWindow) -> Result<f64> {
        let (v, a) = self.embed_pair(w)?;
        Ok(v.iter().zip(&a).map(|(x, y)| *x as f64 * *y as f64).sum())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Checkpoint::new(SYNC_CHECKPOINT_KIND, &self.cfg, &self.params)?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        ck.expect_kind(SYNC_CHECKPOINT_KIND, path)?;
        let model = SyncExpert::new(ck.config()?)?;
        ck.restore(&model.params)?;
        Ok(model)
    }
}

/// Stacks windows into `(B, 3·W, S/2, S)` frames and `(B, 1, M, mel_bins)` mels.
pub fn windows_to_tensors(windows: &[SyncWindow], cfg: &SyncConfig) -> Result<(Tensor, Tensor)> {
    let s = cfg.face_size;
    let mut frames = Vec::new();
    let mut mels = Vec::new();
    for w in windows {
        w.validate()?;
        if w.face_size != s || w.mel_bins != cfg.mel_bins {
            return Err(Error::ShapeMismatch(format!(
                "window of {}px / {} mel bins for an expert of {s}px / {}",
                w.face_size, w.mel_bins, cfg.mel_bins
            )));
        }
        frames.extend_from_slice(&w.frames);
        mels.extend_from_slice(&w.mel_chunk);
    }
    let b = windows.len();
    let f = Tensor::from_vec(frames, (b, SYNC_WINDOW, s / 2, s, 3), &Device::Cpu)?
        .permute((0, 1, 4, 2, 3))?
        .reshape((b, 3 * SYNC_WINDOW, s / 2, s))?;
    let m = Tensor::from_vec(mels, (b, 1, SYNC_MEL_FRAMES, cfg.mel_bins), &Device::Cpu)?;
    Ok((f, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyncConfig {
        SyncConfig { face_size: 32, channels: 4, embed_dim: 8, ..Default::default() }
    }

    fn window(cfg: &SyncConfig, value: f32) -> SyncWindow {
        let s = cfg.face_size;
        SyncWindow {
            frames: (0..SYNC_WINDOW * s / 2 * s * 3).map(|i| value * ((i % 7) as f32 / 7.0)).collect(),
            mel_chunk: (0..SYNC_MEL_FRAMES * cfg.mel_bins).map(|i| (i % 5) as f32 - 3.0).collect(),
            face_size: s,
            mel_bins: cfg.mel_bins,
        }
    }

    #[test]
    fn closed_form_losses() {
        let v = [1.0, 0.0];
        assert_eq!(sync_loss(&v, &[1.0, 0.0], SyncLabel::InSync), 0.0);
        assert_eq!(sync_loss(&v, &[-1.0, 0.0], SyncLabel::OffSync), 0.0);
        for label in [SyncLabel::InSync, SyncLabel::OffSync] {
            assert!((sync_loss(&v, &[0.0, 1.0], label) - 0.693_147_180_559_945_3).abs() < 1e-12);
        }
    }

    #[test]
    fn embeddings_are_unit_and_deterministic() {
        let cfg = small();
        let e = SyncExpert::new(cfg.clone()).unwrap();
        for value in [0.0, 0.3, 1.0] {
            let (v, a) = e.embed_pair(&window(&cfg, value)).unwrap();
            for x in [&v, &a] {
                let n: f32 = x.iter().map(|t| t * t).sum::<f32>().sqrt();
                assert!((n - 1.0).abs() < 1e-5 && x.iter().all(|t| t.is_finite()));
            }
            assert_eq!((v.clone(), a.clone()), e.embed_pair(&window(&cfg, value)).unwrap());
        }
    }

    #[test]
    fn rejects_wrong_window() {
        let e = SyncExpert::new(small()).unwrap();
        let mut w = window(&small(), 0.5);
        w.frames.pop();
        assert!(matches!(e.embed_pair(&w), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn batch_loss_matches_scalar_loss() {
        let cos = Tensor::new(&[0.3f32, -0.5, 0.9], &Device::Cpu).unwrap();
        let lab = Tensor::new(&[1.0f32, 0.0, 0.0], &Device::Cpu).unwrap();
        let got = crate::nn::scalar(&sync_bce(&cos, &lab).unwrap()).unwrap();
        let want = [(0.3, SyncLabel::InSync), (-0.5, SyncLabel::OffSync), (0.9, SyncLabel::OffSync)]
            .iter()
            .map(|&(c, l)| {
                let a = [(1.0f64 - c * c).sqrt() as f32, c as f32];
                sync_loss(&[0.0, 1.0], &a, l)
            })
            .sum::<f64>()
            / 3.0;
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }
}
