use crate::error::{Error, Result};

/// Best monotonic alignment of `t_text` phonemes onto `t_mel` frames.
///
/// `log_lik` is row-major `(t_text, t_mel)`. Every frame is assigned to
/// exactly one phoneme, phoneme order is preserved, no phoneme is skipped,
/// and the summed log-likelihood of the assigned cells is maximal. Returns
/// the phoneme index of each frame.
pub fn monotonic_align_path(log_lik: &[f64], t_text: usize, t_mel: usize) -> Result<Vec<usize>> {
    if t_text > t_mel {
        return Err(Error::InfeasibleAlignment {
            text_len: t_text,
            mel_len: t_mel,
        });
    }
    if log_lik.len() != t_text * t_mel {
        return Err(Error::ShapeMismatch(format!(
            "log-likelihood has {} cells, expected {t_text}x{t_mel}",
            log_lik.len()
        )));
    }
    if t_text == 0 {
        return Ok(Vec::new());
    }
    let neg = f64::NEG_INFINITY;
    // best[x][y]: best score of frames 0..=y with frame y on phoneme x
    let mut best = vec![neg; t_text * t_mel];
    for y in 0..t_mel {
        // phoneme x needs y >= x and enough frames left for the rest
        let lo = (t_text + y).saturating_sub(t_mel);
        let hi = y.min(t_text - 1);
        for x in lo..=hi {
            let prev = if y == 0 {
                0.0
            } else {
                let stay = best[x * t_mel + y - 1];
                let advance = if x > 0 { best[(x - 1) * t_mel + y - 1] } else { neg };
                stay.max(advance)
            };
            best[x * t_mel + y] = prev + log_lik[x * t_mel + y];
        }
    }
    let mut path = vec![0; t_mel];
    let mut x = t_text - 1;
    for y in (0..t_mel).rev() {
        path[y] = x;
        if y > 0 && x > 0 {
            let stay = best[x * t_mel + y - 1];
            let advance = best[(x - 1) * t_mel + y - 1];
            if x == y || advance > stay {
                x -= 1;
            }
        }
    }
    Ok(path)
}

/// [`monotonic_align_path`] as a binary `(t_text, t_mel)` matrix.
pub fn monotonic_align(log_lik: &[f64], t_text: usize, t_mel: usize) -> Result<Vec<Vec<u8>>> {
    let path = monotonic_align_path(log_lik, t_text, t_mel)?;
    let mut m = vec![vec![0u8; t_mel]; t_text];
    for (y, &x) in path.iter().enumerate() {
        m[x][y] = 1;
    }
    Ok(m)
}

/// Frames per phoneme of an alignment path.
pub fn path_durations(path: &[usize], t_text: usize) -> Vec<usize> {
    let mut d = vec![0; t_text];
    for &x in path {
        d[x] += 1;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_phoneme_takes_all_frames() {
        let m = monotonic_align(&[-1.0, -5.0, -2.0], 1, 3).unwrap();
        assert_eq!(m, vec![vec![1, 1, 1]]);
    }

    #[test]
    fn diagonal() {
        let m = monotonic_align(&[0.0, -9.0, -9.0, 0.0], 2, 2).unwrap();
        assert_eq!(m, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn infeasible() {
        assert!(matches!(
            monotonic_align(&[0.0; 6], 3, 2),
            Err(Error::InfeasibleAlignment { text_len: 3, mel_len: 2 })
        ));
    }

    #[test]
    fn prefers_high_likelihood_split() {
        // phoneme 0 strongly prefers frames 0..3
        let ll = [0.0, 0.0, 0.0, -5.0, -5.0, -5.0, -5.0, 0.0];
        assert_eq!(monotonic_align_path(&ll, 2, 4).unwrap(), [0, 0, 0, 1]);
        assert_eq!(path_durations(&[0, 0, 0, 1], 2), [3, 1]);
    }
}
