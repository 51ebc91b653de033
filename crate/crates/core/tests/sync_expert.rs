use polydub::audio::MelConfig;
use polydub::sync_expert::{measure_separation, sync_loss, AlignedClip, SyncConfig, SyncExpert, SyncLabel};
use polydub::toydata::{generate_utterances, ToySpec};
use polydub::LanguageTag;
use proptest::prelude::*;

fn unit(v: Vec<f32>) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt().max(1e-6);
    v.into_iter().map(|x| x / n).collect()
}

fn clips(cfg: &SyncConfig) -> Vec<AlignedClip> {
    let spec = ToySpec::new(2, vec![LanguageTag::Ko, LanguageTag::En], 2, 5);
    let mel = MelConfig { mel_bins: cfg.mel_bins, ..MelConfig::default() };
    generate_utterances(&spec)
        .unwrap()
        .iter()
        .map(|u| AlignedClip::from_toy(&u.audio, u.speaker.seed, cfg.face_size, &mel).unwrap())
        .collect()
}

proptest! {
    #[test]
    fn paired_losses_bound_below(v in prop::collection::vec(-1.0f32..1.0, 8), a in prop::collection::vec(-1.0f32..1.0, 8)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3) && a.iter().any(|x| x.abs() > 1e-3));
        let (v, a) = (unit(v), unit(a));
        let sum = sync_loss(&v, &a, SyncLabel::InSync) + sync_loss(&v, &a, SyncLabel::OffSync);
        prop_assert!(sum >= 2.0 * std::f64::consts::LN_2 - 1e-9);
    }
}

#[test]
fn paired_losses_meet_bound_at_orthogonality() {
    let sum = sync_loss(&[1.0, 0.0], &[0.0, 1.0], SyncLabel::InSync) + sync_loss(&[1.0, 0.0], &[0.0, 1.0], SyncLabel::OffSync);
    assert!((sum - 2.0 * std::f64::consts::LN_2).abs() < 1e-9);
}

#[test]
fn score_ignores_small_brightness_offsets() {
    let cfg = SyncConfig::default();
    let expert = SyncExpert::new(cfg.clone()).unwrap();
    let clip = &clips(&cfg)[0];
    for start in [0, 3] {
        let w = clip.window(start, 0).unwrap();
        let base = expert.score(&w).unwrap();
        for offset in [-0.05f32, 0.05] {
            let mut brighter = w.clone();
            brighter.frames.iter_mut().for_each(|p| *p = (*p + offset).clamp(0.0, 1.0));
            let delta = (expert.score(&brighter).unwrap() - base).abs();
            assert!(delta < 0.02, "offset {offset}: score moved by {delta}");
        }
    }
}

#[test]
fn untrained_expert_does_not_separate() {
    let cfg = SyncConfig::default();
    let expert = SyncExpert::new(cfg.clone()).unwrap();
    let sep = measure_separation(&expert, &clips(&cfg), 100, 0).unwrap();
    assert!(sep.gap().abs() < 0.1, "gap {}", sep.gap());
}

#[test]
fn checkpoint_round_trip() {
    let cfg = SyncConfig::default();
    let expert = SyncExpert::new(cfg.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sync.safetensors");
    expert.save(&path).unwrap();
    let restored = SyncExpert::load(&path).unwrap();
    let w = clips(&cfg)[1].window(2, 0).unwrap();
    assert_eq!(expert.score(&w).unwrap(), restored.score(&w).unwrap());
}
