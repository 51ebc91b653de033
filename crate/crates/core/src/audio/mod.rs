//! Mono waveforms, WAV I/O and mel spectrograms.

mod mel;

use std::path::Path;

pub use mel::{mel_filterbank, MelConfig, MelSpectrogram, MelTransform, SILENCE_LOG_MEL};

use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 22050;
pub const FPS: u32 = 25;
/// Audio samples spanned by one video frame.
pub const SAMPLES_PER_FRAME: usize = (SAMPLE_RATE / FPS) as usize;

/// Mel frames spanning five video frames (0.2 s at hop 256).
pub const SYNC_MEL_FRAMES: usize = 17;

/// Count of mel frames (at `hop`) whose centres lie before the end of
/// video frame `video_frame`; the audio context of that frame ends there.
pub fn mel_end_for_frame(video_frame: usize, hop: usize) -> usize {
    ((video_frame + 1) * SAMPLES_PER_FRAME).div_ceil(hop)
}

/// Mono audio with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Waveform {
    /// Clips to [-1, 1]; rejects non-finite samples.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite {
                what: "waveform",
                index: i,
            });
        }
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Ok(Waveform { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Waveform {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Writes 16-bit PCM mono.
    pub fn write_wav(&self, path: &Path) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec)?;
        for &s in &self.samples {
            w.write_sample((s.clamp(-1.0, 1.0) * i16::MAX as f32).round() as i16)?;
        }
        w.finalize()?;
        Ok(())
    }

    /// Reads a mono WAV; multi-channel input is averaged.
    pub fn read_wav(path: &Path) -> Result<Self> {
        let mut r = hound::WavReader::open(path)?;
        let spec = r.spec();
        let raw: Vec<f32> = match spec.sample_format {
            hound::SampleFormat::Float => r.samples::<f32>().collect::<std::result::Result<_, _>>()?,
            hound::SampleFormat::Int => {
                let scale = (1i64 << (spec.bits_per_sample - 1)) as f32;
                r.samples::<i32>()
                    .map(|s| s.map(|v| v as f32 / scale))
                    .collect::<std::result::Result<_, _>>()?
            }
        };
        let ch = spec.channels.max(1) as usize;
        let samples = raw.chunks(ch).map(|c| c.iter().sum::<f32>() / ch as f32).collect();
        Waveform::new(samples, spec.sample_rate)
    }

    /// Root-mean-square energy of each consecutive `window`-sample block.
    pub fn block_rms(&self, window: usize) -> Vec<f32> {
        self.samples
            .chunks(window)
            .map(|c| (c.iter().map(|s| s * s).sum::<f32>() / c.len() as f32).sqrt())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_second_of_mel_covers_twenty_five_frames() {
        let mel = MelSpectrogram::compute(&Waveform::silence(22050, SAMPLE_RATE), &MelConfig::default());
        assert_eq!(mel.video_frames(), 25);
        assert!(mel_end_for_frame(24, 256) <= mel.n_frames);
        assert_eq!(mel.window(3, 5).len(), 5 * mel.mel_bins);
        assert_eq!(mel.window(3, 5)[0], SILENCE_LOG_MEL);
    }

    #[test]
    fn wav_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let w = Waveform::new((0..1000).map(|i| (i as f32 * 0.01).sin() * 0.8).collect(), SAMPLE_RATE).unwrap();
        w.write_wav(&path).unwrap();
        let r = Waveform::read_wav(&path).unwrap();
        assert_eq!(r.sample_rate, SAMPLE_RATE);
        assert_eq!(r.len(), w.len());
        for (a, b) in r.samples.iter().zip(&w.samples) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_non_finite_and_clips() {
        assert!(Waveform::new(vec![0.0, f32::NAN], SAMPLE_RATE).is_err());
        assert_eq!(Waveform::new(vec![2.0, -3.0], SAMPLE_RATE).unwrap().samples, [1.0, -1.0]);
    }

    #[test]
    fn frame_span() {
        assert_eq!(SAMPLES_PER_FRAME, 882);
    }
}
