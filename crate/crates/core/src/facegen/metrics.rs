use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{faces_to_tensor, FacegenModel};
use super::negative::sample_negative_index;
use crate::error::Result;
use crate::facecrop::FaceFrame;
use crate::nn::to_f32_vec;
use crate::sync_expert::{windows_to_tensors, AlignedClip, SyncExpert, SyncWindow, SYNC_WINDOW};

/// Regenerates every frame of `clip` from its masked self, a seeded
/// identity frame and the clip's audio.
pub fn reconstruct_clip(model: &FacegenModel, clip: &AlignedClip, seed: u64) -> Result<Vec<FaceFrame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feats = model.audio_encode_frames(&clip.mel, clip.len())?;
    let mut out = Vec::with_capacity(clip.len());
    for start in (0..clip.len()).step_by(16) {
        let end = (start + 16).min(clip.len());
        let ids: Vec<&FaceFrame> = (start..end)
            .map(|t| sample_negative_index(&mut rng, clip.len(), t).map(|i| &clip.faces[i]))
            .collect::<Result<_>>()?;
        let refs: Vec<&FaceFrame> = clip.faces[start..end].iter().collect();
        let frames = model.generate(
            &faces_to_tensor(&refs, model.dtype())?,
            &faces_to_tensor(&ids, model.dtype())?,
            &feats.narrow(0, start, end - start)?,
        )?;
        for i in 0..end - start {
            out.push(FaceFrame::from_tensor(&frames.get(i)?)?);
        }
    }
    Ok(out)
}

/// Mean absolute per-pixel difference.
pub fn mean_l1(a: &[FaceFrame], b: &[FaceFrame]) -> f64 {
    let (sum, n) = a.iter().zip(b).fold((0.0, 0usize), |(s, n), (x, y)| {
        let d: f64 = x.pixels.iter().zip(&y.pixels).map(|(p, q)| (p - q).abs() as f64).sum();
        (s + d, n + x.pixels.len())
    });
    sum / n.max(1) as f64
}

/// Mean magnitude of the 4-neighbour Laplacian over interior pixels.
pub fn laplacian_sharpness(frames: &[FaceFrame]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for f in frames {
        let s = f.size;
        for y in 1..s - 1 {
            for x in 1..s - 1 {
                for c in 0..3 {
                    let l = 4.0 * f.get(y, x, c) - f.get(y - 1, x, c) - f.get(y + 1, x, c) - f.get(y, x - 1, c)
                        - f.get(y, x + 1, c);
                    sum += l.abs() as f64;
                    n += 1;
                }
            }
        }
    }
    sum / n.max(1) as f64
}

/// Mean expert cosine over every in-sync window of `faces` against `clip`'s audio.
pub fn expert_cosine(expert: &SyncExpert, faces: &[FaceFrame], clip: &AlignedClip) -> Result<f64> {
    let mut windows = Vec::new();
    for start in 0..=faces.len().saturating_sub(SYNC_WINDOW) {
        windows.push(SyncWindow {
            frames: faces[start..start + SYNC_WINDOW].iter().flat_map(|f| f.lower_half()).collect(),
            mel_chunk: clip.mel_chunk(start),
            face_size: clip.face_size(),
            mel_bins: clip.mel.mel_bins,
        });
    }
    let mut cos = Vec::new();
    for chunk in windows.chunks(32) {
        let (f, m) = windows_to_tensors(chunk, expert.config())?;
        cos.extend(to_f32_vec(&expert.cosine(&f, &m)?)?);
    }
    Ok(cos.iter().map(|&c| c as f64).sum::<f64>() / cos.len().max(1) as f64)
}
