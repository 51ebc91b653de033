use std::f64::consts::PI;
use std::sync::Arc;

use candle_core::{DType, Device, Tensor};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::Result;
use crate::nn::conv;

const MAG_EPS: f64 = 1e-6;
const LOG_FLOOR: f64 = 1e-5;
/// Log-mel value of a silent frame.
pub const SILENCE_LOG_MEL: f32 = -11.512_925;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop_length: usize,
    pub mel_bins: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            sample_rate: 22050,
            n_fft: 1024,
            hop_length: 256,
            mel_bins: 40,
            fmin: 0.0,
            fmax: 8000.0,
        }
    }
}

impl MelConfig {
    pub fn n_freqs(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Frame count under center padding.
    pub fn n_frames(&self, n_samples: usize) -> usize {
        n_samples / self.hop_length + 1
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters, row-major `(mel_bins, n_freqs)`.
pub fn mel_filterbank(cfg: &MelConfig) -> Vec<f64> {
    let nf = cfg.n_freqs();
    let (lo, hi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
    let edges: Vec<f64> = (0..cfg.mel_bins + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.mel_bins + 1) as f64))
        .collect();
    let mut fb = vec![0.0; cfg.mel_bins * nf];
    for m in 0..cfg.mel_bins {
        let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..nf {
            let f = k as f64 * cfg.sample_rate as f64 / cfg.n_fft as f64;
            let w = if f > l && f <= c {
                (f - l) / (c - l)
            } else if f > c && f < r {
                (r - f) / (r - c)
            } else {
                0.0
            };
            fb[m * nf + k] = w;
        }
    }
    fb
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Index of sample `i` of a signal of length `len` extended by reflection.
fn reflect_index(i: isize, len: usize) -> Option<usize> {
    match len {
        0 => None,
        1 => Some(0),
        _ => {
            let period = 2 * (len as isize - 1);
            let m = i.rem_euclid(period);
            Some(if m < len as isize { m } else { period - m } as usize)
        }
    }
}

/// Log-magnitude mel spectrogram, row-major `(n_frames, mel_bins)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub frames: Vec<f32>,
    pub n_frames: usize,
    pub mel_bins: usize,
    pub sample_rate: u32,
    pub hop_length: usize,
}

impl MelSpectrogram {
    pub fn compute(wave: &Waveform, cfg: &MelConfig) -> Self {
        let nf = cfg.n_freqs();
        let fb = mel_filterbank(cfg);
        let window = hann(cfg.n_fft);
        let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        let n_frames = cfg.n_frames(wave.len());
        let half = (cfg.n_fft / 2) as isize;
        let mut frames = Vec::with_capacity(n_frames * cfg.mel_bins);
        let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
        let mut mag = vec![0.0; nf];
        for t in 0..n_frames {
            let start = (t * cfg.hop_length) as isize - half;
            for (j, b) in buf.iter_mut().enumerate() {
                let s = reflect_index(start + j as isize, wave.len()).map_or(0.0, |i| wave.samples[i] as f64);
                *b = Complex::new(s * window[j], 0.0);
            }
            fft.process(&mut buf);
            for (k, m) in mag.iter_mut().enumerate() {
                *m = (buf[k].norm_sqr() + MAG_EPS).sqrt();
            }
            for row in fb.chunks(nf) {
                let e: f64 = row.iter().zip(&mag).map(|(w, m)| w * m).sum();
                frames.push(e.max(LOG_FLOOR).ln() as f32);
            }
        }
        MelSpectrogram {
            frames,
            n_frames,
            mel_bins: cfg.mel_bins,
            sample_rate: cfg.sample_rate,
            hop_length: cfg.hop_length,
        }
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.frames[t * self.mel_bins..(t + 1) * self.mel_bins]
    }

    /// Frames `[start, end)` as a new spectrogram.
    pub fn slice(&self, start: usize, end: usize) -> MelSpectrogram {
        MelSpectrogram {
            frames: self.frames[start * self.mel_bins..end * self.mel_bins].to_vec(),
            n_frames: end - start,
            ..self.clone()
        }
    }

    /// `len` frames ending before frame `end` as `(len, mel_bins)` values;
    /// positions before the first frame read as silence.
    pub fn window(&self, end: usize, len: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(len * self.mel_bins);
        for t in end as isize - len as isize..end as isize {
            if t < 0 {
                out.extend(std::iter::repeat(SILENCE_LOG_MEL).take(self.mel_bins));
            } else {
                out.extend_from_slice(self.frame(t as usize));
            }
        }
        out
    }

    /// Number of whole video frames whose audio these mel frames cover.
    pub fn video_frames(&self) -> usize {
        self.n_frames * self.hop_length / super::SAMPLES_PER_FRAME
    }

    /// `(mel_bins, n_frames)` f32 tensor.
    pub fn to_tensor(&self) -> Result<Tensor> {
        Ok(Tensor::from_slice(&self.frames, (self.n_frames, self.mel_bins), &Device::Cpu)?.t()?.contiguous()?)
    }
}

/// Differentiable mel spectrogram for batched waveform tensors.
#[derive(Debug, Clone)]
pub struct MelTransform {
    cfg: MelConfig,
    /// `(2·n_freqs, 1, 1, n_fft)` windowed cosine and sine kernels.
    dft: Tensor,
    /// `(mel_bins, n_freqs)`
    fb: Tensor,
}

impl MelTransform {
    pub fn new(cfg: &MelConfig, dtype: DType) -> Result<Self> {
        let nf = cfg.n_freqs();
        let n = cfg.n_fft;
        let window = hann(n);
        let mut k = Vec::with_capacity(2 * nf * n);
        for part in 0..2 {
            for f in 0..nf {
                for (j, w) in window.iter().enumerate() {
                    let a = 2.0 * PI * (f * j) as f64 / n as f64;
                    k.push(w * if part == 0 { a.cos() } else { -a.sin() });
                }
            }
        }
        let dft = Tensor::from_vec(k, (2 * nf, 1, 1, n), &Device::Cpu)?.to_dtype(dtype)?;
        let fb = Tensor::from_vec(mel_filterbank(cfg), (cfg.mel_bins, nf), &Device::Cpu)?.to_dtype(dtype)?;
        Ok(MelTransform { cfg: cfg.clone(), dft, fb })
    }

    pub fn config(&self) -> &MelConfig {
        &self.cfg
    }

    /// `wave: (N, L)` → log-mel `(N, mel_bins, L/hop + 1)`.
    pub fn forward(&self, wave: &Tensor) -> Result<Tensor> {
        let (n, len) = wave.dims2()?;
        let half = (self.cfg.n_fft / 2) as isize;
        let idx: Vec<u32> = (-half..len as isize + half)
            .map(|i| reflect_index(i, len).unwrap_or(0) as u32)
            .collect();
        let idx = Tensor::from_vec(idx, len + 2 * half as usize, &Device::Cpu)?;
        let padded = wave.index_select(&idx, 1)?.reshape((n, 1, 1, ()))?;
        let spec = conv::conv2d(&padded, &self.dft, (1, self.cfg.hop_length), (0, 0))?.squeeze(2)?;
        let nf = self.cfg.n_freqs();
        let re = spec.narrow(1, 0, nf)?;
        let im = spec.narrow(1, nf, nf)?;
        let mag = ((re.sqr()? + im.sqr()?)? + MAG_EPS)?.sqrt()?;
        let mel = self.fb.broadcast_matmul(&mag)?;
        Ok(mel.maximum(LOG_FLOOR)?.log()?)
    }
}
