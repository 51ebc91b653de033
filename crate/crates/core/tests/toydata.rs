use std::path::Path;

use sha2::{Digest, Sha256};

use polydub::audio::{Waveform, FPS, SAMPLES_PER_FRAME};
use polydub::textfront::Frontend;
use polydub::toydata::{build_corpus, read_clip, read_fps_sidecar, render_face_clip, render_voice, ToySpec};
use polydub::LanguageTag;

/// Hash over every file below `dir`, in sorted path order.
fn tree_digest(dir: &Path) -> String {
    fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out)
            } else {
                out.push(p)
            }
        }
    }
    let mut files = Vec::new();
    walk(dir, &mut files);
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(dir).unwrap().to_string_lossy().as_bytes());
        h.update(std::fs::read(&f).unwrap());
    }
    hex::encode(h.finalize())
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn corpus_is_counted_and_reproducible() {
    let spec = ToySpec::new(2, vec![LanguageTag::Ko, LanguageTag::En], 5, 4);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = build_corpus(&spec, a.path()).unwrap();
    build_corpus(&spec, b.path()).unwrap();
    assert_eq!(m.rows.len(), 20);
    assert_eq!(tree_digest(a.path()), tree_digest(b.path()));

    for row in &m.rows {
        let audio = Waveform::read_wav(&m.resolve(&row.audio_path)).unwrap();
        let clip_dir = m.resolve(&row.video_path);
        assert_eq!(read_fps_sidecar(&clip_dir).unwrap(), FPS);
        let frames = read_clip(&clip_dir).unwrap().len();
        let video_samples = frames * SAMPLES_PER_FRAME;
        assert!(audio.len().abs_diff(video_samples) <= 256, "{}: {} vs {video_samples}", row.utt_id, audio.len());
    }
}

#[test]
fn empty_corpus_is_not_an_error() {
    let spec = ToySpec::new(2, vec![LanguageTag::En], 0, 4);
    let dir = tempfile::tempdir().unwrap();
    let m = build_corpus(&spec, dir.path()).unwrap();
    assert!(m.rows.is_empty());
}

#[test]
fn mouth_height_tracks_audio_energy() {
    let seq = Frontend::bundled().preprocess("hello beautiful world", LanguageTag::En).unwrap();
    let audio = render_voice(&seq, 17);
    let clip = render_face_clip(&audio, 3);
    let rms: Vec<f64> = audio
        .samples
        .chunks(SAMPLES_PER_FRAME)
        .map(|c| (c.iter().map(|&x| x as f64 * x as f64).sum::<f64>() / c.len() as f64).sqrt())
        .collect();
    let heights: Vec<f64> = clip.mouth_heights.iter().map(|&h| h as f64).collect();
    assert_eq!(heights.len(), rms.len());
    let r = pearson(&heights, &rms);
    assert!(r > 0.99, "r = {r}");
}

#[test]
fn one_second_of_audio_is_25_frames() {
    let clip = render_face_clip(&Waveform::silence(22050, 22050), 0);
    assert_eq!(clip.frames.len(), 25);
    assert_eq!(clip.landmarks.len(), 25);
}
