use rand::Rng;

use crate::error::{Error, Result};
use crate::facecrop::FaceFrame;
use crate::sync_expert::SYNC_WINDOW;

/// Index of a frame at least one sync window away from `target`.
pub fn sample_negative_index(rng: &mut impl Rng, len: usize, target: usize) -> Result<usize> {
    let candidates: Vec<usize> = (0..len).filter(|&i| i.abs_diff(target) >= SYNC_WINDOW).collect();
    if target >= len || candidates.is_empty() {
        return Err(Error::ClipTooShort { len, target, window: SYNC_WINDOW });
    }
    Ok(candidates[rng.gen_range(0..candidates.len())])
}

/// A frame from a different part of the clip, used as the identity input.
pub fn sample_negative<'a>(rng: &mut impl Rng, clip: &'a [FaceFrame], target: usize) -> Result<&'a FaceFrame> {
    Ok(&clip[sample_negative_index(rng, clip.len(), target)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn offset_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert!((5..10).contains(&sample_negative_index(&mut rng, 10, 0).unwrap()));
            assert_eq!(sample_negative_index(&mut rng, 6, 0).unwrap(), 5);
        }
        assert!(matches!(sample_negative_index(&mut rng, 4, 0), Err(Error::ClipTooShort { .. })));
    }
}
