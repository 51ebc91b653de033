use std::sync::Arc;

use candle_core::{DType, Tensor};
use polydub::audio::MelConfig;
use polydub::facegen::{FacegenConfig, FacegenModel, FacegenTrainer};
use polydub::sync_expert::{AlignedClip, SyncConfig, SyncExpert, SYNC_WINDOW};
use polydub::toydata::{generate_utterances, speaker_audio, ToySpec};
use polydub::LanguageTag;

fn toy_clip(face_size: usize, mel_bins: usize) -> AlignedClip {
    let spec = ToySpec::new(1, vec![LanguageTag::En], 4, 9);
    let utts = generate_utterances(&spec).unwrap();
    let audio = speaker_audio(&utts, "en0", 20).unwrap();
    AlignedClip::from_toy(&audio, utts[0].speaker.seed, face_size, &MelConfig { mel_bins, ..MelConfig::default() }).unwrap()
}

#[test]
fn generator_gradient_matches_finite_differences() {
    let cfg = FacegenConfig {
        channels: 4,
        audio_dim: 8,
        gru_hidden: 8,
        disc_channels: 4,
        dtype: Some(DType::F64),
        ..FacegenConfig::default()
    };
    let expert = SyncExpert::new(SyncConfig { channels: 4, dtype: Some(DType::F64), ..SyncConfig::default() }).unwrap();
    let clip = toy_clip(cfg.face_size, cfg.mel_bins);
    let trainer = FacegenTrainer::new(FacegenModel::new(cfg).unwrap(), Arc::new(expert)).unwrap();
    let batch = trainer
        .batch_from(
            &clip.faces[..SYNC_WINDOW],
            &clip.faces[10..10 + SYNC_WINDOW],
            (0..SYNC_WINDOW as u32).collect(),
            clip.mel_chunk(0),
        )
        .unwrap();
    let total = |t: &FacegenTrainer| t.generator_terms(&batch, &clip).unwrap().total;
    let loss = total(&trainer);
    assert!(loss.to_scalar::<f64>().unwrap() > 0.0);
    let grads = loss.backward().unwrap();

    let params = trainer.model().generator_params();
    let mut checked = 0;
    for var in &params {
        if checked == 6 {
            break;
        }
        let g = grads.get(var).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let (k, &gk) = g.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
        if gk.abs() < 1e-5 {
            continue;
        }
        let base = var.as_tensor().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let h = 1e-6;
        let eval = |delta: f64| {
            let mut v = base.clone();
            v[k] += delta;
            var.set(&Tensor::from_vec(v, var.shape(), var.device()).unwrap()).unwrap();
            total(&trainer).to_scalar::<f64>().unwrap()
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        eval(0.0);
        let rel = (fd - gk).abs() / gk.abs().max(fd.abs());
        assert!(rel < 1e-3, "parameter element {k}: analytic {gk}, finite difference {fd}");
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn objective_is_l1_when_other_weights_are_zero() {
    let cfg = FacegenConfig { sync_weight: 0.0, adv_weight: 0.0, ..FacegenConfig::default() };
    let clip = toy_clip(cfg.face_size, cfg.mel_bins);
    let expert = Arc::new(SyncExpert::new(SyncConfig::default()).unwrap());
    let mut trainer = FacegenTrainer::new(FacegenModel::new(cfg).unwrap(), expert).unwrap();
    let losses = trainer.training_step(&clip).unwrap();
    assert_eq!(losses.total_g, losses.l1);
    assert_eq!(losses.adv_d, 0.0);
}

#[test]
fn checkpoint_round_trip() {
    let cfg = FacegenConfig::default();
    let clip = toy_clip(cfg.face_size, cfg.mel_bins);
    let model = FacegenModel::new(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("facegen.safetensors");
    model.save(&path).unwrap();
    let restored = FacegenModel::load(&path).unwrap();
    let a = polydub::facegen::reconstruct_clip(&model, &clip, 0).unwrap();
    let b = polydub::facegen::reconstruct_clip(&restored, &clip, 0).unwrap();
    assert_eq!(a, b);
}
