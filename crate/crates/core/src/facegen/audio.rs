use candle_core::{Device, Tensor};

use super::config::FacegenConfig;
use crate::audio::{mel_end_for_frame, MelSpectrogram, SYNC_MEL_FRAMES};
use crate::error::{Error, Result};
use crate::nn::{Conv2d, Linear, Params};

const MEL_OFFSET: f64 = 5.0;
const MEL_SCALE: f64 = 0.2;

/// Single-layer GRU over a `(T, in)` sequence.
struct Gru {
    input: Linear,
    hidden_w: Tensor,
    hidden_b: Tensor,
    hidden: usize,
}

impl Gru {
    fn new(p: &Params, in_dim: usize, hidden: usize) -> Result<Self> {
        let bound = 1.0 / (hidden as f64).sqrt();
        Ok(Gru {
            input: Linear::new(&p.pp("input"), in_dim, 3 * hidden)?,
            hidden_w: p.uniform("hidden_weight", (hidden, 3 * hidden), bound)?,
            hidden_b: p.uniform("hidden_bias", 3 * hidden, bound)?,
            hidden,
        })
    }

    fn forward(&self, xs: &Tensor) -> Result<Tensor> {
        let (t, _) = xs.dims2()?;
        let h_dim = self.hidden;
        let gx = self.input.forward(xs)?;
        let mut h = Tensor::zeros((1, h_dim), xs.dtype(), xs.device())?;
        let mut out = Vec::with_capacity(t);
        for i in 0..t {
            let gx_t = gx.narrow(0, i, 1)?;
            let gh = h.matmul(&self.hidden_w)?.broadcast_add(&self.hidden_b)?;
            let r = candle_nn::ops::sigmoid(&(gx_t.narrow(1, 0, h_dim)? + gh.narrow(1, 0, h_dim)?)?)?;
            let z = candle_nn::ops::sigmoid(&(gx_t.narrow(1, h_dim, h_dim)? + gh.narrow(1, h_dim, h_dim)?)?)?;
            let n = (gx_t.narrow(1, 2 * h_dim, h_dim)? + (r * gh.narrow(1, 2 * h_dim, h_dim)?)?)?.tanh()?;
            h = ((&z * &h)? + ((1.0 - &z)? * n)?)?;
            out.push(h.clone());
        }
        Ok(Tensor::cat(&out, 0)?)
    }
}

/// Per-frame convolutional mel features followed by a causal GRU.
pub struct AudioEncoder {
    convs: Vec<Conv2d>,
    proj: Linear,
    gru: Gru,
    mel_bins: usize,
}

impl AudioEncoder {
    pub(crate) fn new(p: &Params, cfg: &FacegenConfig) -> Result<Self> {
        let c = cfg.channels;
        let widths = [1, c, 2 * c, 2 * c, 4 * c];
        let strides = [1, 2, 2, 2];
        let (mut h, mut w) = (SYNC_MEL_FRAMES, cfg.mel_bins);
        let mut convs = Vec::new();
        for (i, &s) in strides.iter().enumerate() {
            convs.push(Conv2d::new(&p.pp(format!("conv{i}")), widths[i], widths[i + 1], 3, s, 1)?);
            h = (h - 1) / s + 1;
            w = (w - 1) / s + 1;
        }
        Ok(AudioEncoder {
            convs,
            proj: Linear::new(&p.pp("proj"), 4 * c * h * w, cfg.audio_dim)?,
            gru: Gru::new(&p.pp("gru"), cfg.audio_dim, cfg.gru_hidden)?,
            mel_bins: cfg.mel_bins,
        })
    }

    /// Mel context of each of the first `n_frames` video frames:
    /// `(n_frames, 1, 17, mel_bins)`, each ending with the frame's last mel column.
    pub fn windows(&self, mel: &MelSpectrogram, n_frames: usize) -> Result<Tensor> {
        if mel.mel_bins != self.mel_bins {
            return Err(Error::ShapeMismatch(format!("{} mel bins, expected {}", mel.mel_bins, self.mel_bins)));
        }
        if n_frames == 0 || mel.video_frames() < n_frames {
            return Err(Error::InsufficientAudio { required: n_frames.max(1), available: mel.video_frames() });
        }
        let mut v = Vec::with_capacity(n_frames * SYNC_MEL_FRAMES * self.mel_bins);
        for t in 0..n_frames {
            v.extend(mel.window(mel_end_for_frame(t, mel.hop_length), SYNC_MEL_FRAMES));
        }
        Ok(Tensor::from_vec(v, (n_frames, 1, SYNC_MEL_FRAMES, self.mel_bins), &Device::Cpu)?)
    }

    /// `(n_frames, gru_hidden)` features; frame t depends on mel frames up to
    /// the end of video frame t only.
    pub fn forward(&self, mel: &MelSpectrogram, n_frames: usize, dtype: candle_core::DType) -> Result<Tensor> {
        let mut x = ((self.windows(mel, n_frames)?.to_dtype(dtype)? + MEL_OFFSET)? * MEL_SCALE)?;
        for c in &self.convs {
            x = c.forward(&x)?.relu()?;
        }
        let x = self.proj.forward(&x.flatten_from(1)?)?.relu()?;
        self.gru.forward(&x)
    }
}
