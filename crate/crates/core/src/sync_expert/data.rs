use image::RgbImage;
use rand::Rng;

use crate::audio::{mel_end_for_frame, MelConfig, MelSpectrogram, Waveform, SYNC_MEL_FRAMES};
use crate::error::{Error, Result};
use crate::facecrop::{crop, expand_region, FaceFrame, LandmarkSet, MarginParams};
use crate::toydata::render_face_clip;

/// Video frames per sync window (0.2 s at 25 fps).
pub const SYNC_WINDOW: usize = 5;
/// Smallest audio shift, in frames, used for off-sync negatives.
pub const MIN_NEGATIVE_SHIFT: usize = 4;

/// Face crops of a clip with the mel spectrogram of its audio.
#[derive(Debug, Clone)]
pub struct AlignedClip {
    pub faces: Vec<FaceFrame>,
    pub mel: MelSpectrogram,
}

impl AlignedClip {
    pub fn new(faces: Vec<FaceFrame>, mel: MelSpectrogram) -> Result<Self> {
        if mel.video_frames() < faces.len() {
            return Err(Error::InsufficientAudio { required: faces.len(), available: mel.video_frames() });
        }
        Ok(AlignedClip { faces, mel })
    }

    /// Crops every frame at its landmark-derived geometry.
    pub fn from_frames(
        frames: &[RgbImage],
        landmarks: &[LandmarkSet],
        audio: &Waveform,
        face_size: usize,
        mel: &MelConfig,
    ) -> Result<Self> {
        let margins = MarginParams::default();
        let faces = frames
            .iter()
            .zip(landmarks)
            .map(|(f, lm)| crop(f, &expand_region(lm, f.dimensions(), &margins)?, face_size))
            .collect::<Result<Vec<_>>>()?;
        Self::new(faces, MelSpectrogram::compute(audio, mel))
    }

    /// Renders the toy face for `audio` and crops it.
    pub fn from_toy(audio: &Waveform, identity_seed: u64, face_size: usize, mel: &MelConfig) -> Result<Self> {
        let clip = render_face_clip(audio, identity_seed);
        Self::from_frames(&clip.frames, &clip.landmarks, audio, face_size, mel)
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_size(&self) -> usize {
        self.faces.first().map_or(0, |f| f.size)
    }

    /// Mel frames preceding the end of window `[start, start + SYNC_WINDOW)`.
    pub fn mel_chunk(&self, start: usize) -> Vec<f32> {
        self.mel.window(mel_end_for_frame(start + SYNC_WINDOW - 1, self.mel.hop_length), SYNC_MEL_FRAMES)
    }

    /// Window of lower-half frames starting at `start` with the audio of
    /// `start + shift`.
    pub fn window(&self, start: usize, shift: i64) -> Result<SyncWindow> {
        let audio_start = start as i64 + shift;
        let last = self.len() as i64 - SYNC_WINDOW as i64;
        if start as i64 > last || audio_start < 0 || audio_start > last {
            return Err(Error::ShapeMismatch(format!(
                "window at {start} shifted by {shift} leaves a {}-frame clip",
                self.len()
            )));
        }
        let frames = self.faces[start..start + SYNC_WINDOW].iter().flat_map(|f| f.lower_half()).collect();
        Ok(SyncWindow {
            frames,
            mel_chunk: self.mel_chunk(audio_start as usize),
            face_size: self.face_size(),
            mel_bins: self.mel.mel_bins,
        })
    }

    /// Off-sync window: the audio is taken `shift` frames away.
    pub fn negative_window(&self, start: usize, shift: i64) -> Result<SyncWindow> {
        if shift.unsigned_abs() < MIN_NEGATIVE_SHIFT as u64 {
            return Err(Error::InvalidNegativeOffset { offset: shift, min: MIN_NEGATIVE_SHIFT });
        }
        self.window(start, shift)
    }

    /// A random valid negative shift for a window at `start`, or `None` when
    /// the clip is too short to hold one.
    pub fn sample_shift(&self, rng: &mut impl Rng, start: usize) -> Option<i64> {
        let last = self.len().checked_sub(SYNC_WINDOW)? as i64;
        let candidates: Vec<i64> = (-last..=last)
            .filter(|s| s.unsigned_abs() >= MIN_NEGATIVE_SHIFT as u64)
            .filter(|s| (0..=last).contains(&(start as i64 + s)))
            .collect();
        (!candidates.is_empty()).then(|| candidates[rng.gen_range(0..candidates.len())])
    }
}

/// Five consecutive lower-half face crops with the aligned mel chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncWindow {
    /// `(SYNC_WINDOW, S/2, S, 3)` values in [0, 1].
    pub frames: Vec<f32>,
    /// `(SYNC_MEL_FRAMES, mel_bins)` log-mel values.
    pub mel_chunk: Vec<f32>,
    pub face_size: usize,
    pub mel_bins: usize,
}

impl SyncWindow {
    pub fn validate(&self) -> Result<()> {
        let s = self.face_size;
        if self.frames.len() != SYNC_WINDOW * (s / 2) * s * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} frame values for a {SYNC_WINDOW}x{}x{s}x3 window",
                self.frames.len(),
                s / 2
            )));
        }
        if self.mel_chunk.len() != SYNC_MEL_FRAMES * self.mel_bins {
            return Err(Error::ShapeMismatch(format!(
                "{} mel values for a {SYNC_MEL_FRAMES}x{} chunk",
                self.mel_chunk.len(),
                self.mel_bins
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn clip(n: usize) -> AlignedClip {
        let mel = MelSpectrogram::compute(&Waveform::silence(n * 882, 22050), &MelConfig::default());
        AlignedClip::new(vec![FaceFrame::filled(16, [0.5; 3]); n], mel).unwrap()
    }

    #[test]
    fn zero_shift_negative_is_rejected() {
        let c = clip(20);
        assert!(matches!(c.negative_window(3, 0), Err(Error::InvalidNegativeOffset { offset: 0, .. })));
        assert!(c.negative_window(3, 2).is_err());
        assert!(c.negative_window(3, 4).is_ok());
    }

    #[test]
    fn window_shapes() {
        let w = clip(12).window(7, 0).unwrap();
        w.validate().unwrap();
        assert_eq!(w.frames.len(), 5 * 8 * 16 * 3);
    }

    #[test]
    fn sampled_shifts_are_valid() {
        let c = clip(12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for start in 0..=7 {
            let s = c.sample_shift(&mut rng, start).unwrap();
            assert!(c.negative_window(start, s).is_ok());
        }
        assert!(clip(8).sample_shift(&mut rng, 2).is_none());
    }
}
