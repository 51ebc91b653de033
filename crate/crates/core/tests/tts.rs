use polydub::textfront::Frontend;
use polydub::toydata::{generate_utterances, tts_training_set, ToySpec};
use polydub::tts::{SymbolTable, SynthesisOptions, TtsConfig, TtsModel, TtsSession, TtsTrainer};
use polydub::{Error, LanguageTag};

fn small_model() -> (TtsModel, Vec<polydub::tts::TtsExample>) {
    let spec = ToySpec::new(1, vec![LanguageTag::Ko, LanguageTag::En], 2, 3);
    let utts = generate_utterances(&spec).unwrap();
    let cfg = TtsConfig::default();
    let (speakers, examples) = tts_training_set(&spec, &utts, &cfg.mel());
    let model = TtsModel::new(cfg, SymbolTable::from_frontend(Frontend::bundled()), speakers).unwrap();
    (model, examples)
}

fn copy_bundled_tables(dir: &std::path::Path) {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for entry in std::fs::read_dir(data).unwrap() {
        let path = entry.unwrap().path();
        std::fs::copy(&path, dir.join(path.file_name().unwrap())).unwrap();
    }
}

#[test]
fn checkpoint_round_trip_preserves_synthesis() {
    let (model, examples) = small_model();
    let mut trainer = TtsTrainer::new(model, 3).unwrap();
    for _ in 0..3 {
        trainer.training_step(&examples[..2]).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tts.safetensors");
    trainer.model().save(&path).unwrap();
    let restored = TtsModel::load(&path, Frontend::bundled()).unwrap();

    let seq = Frontend::bundled().preprocess("hello world", LanguageTag::En).unwrap();
    let opts = SynthesisOptions { noise_scale: 0.0, ..SynthesisOptions::default() };
    let a = TtsSession::new(trainer.into_model());
    let b = TtsSession::new(restored);
    let run = |s: &TtsSession| s.synthesize(&seq, LanguageTag::En, &s.speaker_profile("en0").unwrap(), &opts).unwrap();
    let (wa, ta) = run(&a);
    let (wb, tb) = run(&b);
    assert_eq!(ta, tb);
    assert_eq!(wa.samples, wb.samples);
}

#[test]
fn checkpoint_rejects_changed_inventory() {
    let (model, _) = small_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tts.safetensors");
    model.save(&path).unwrap();

    let tables = dir.path().join("tables");
    std::fs::create_dir(&tables).unwrap();
    copy_bundled_tables(&tables);
    let inv = tables.join("inventory_ja.txt");
    let text = format!("{}\nxq\n", std::fs::read_to_string(&inv).unwrap().trim_end());
    std::fs::write(&inv, text).unwrap();
    let changed = Frontend::from_dir(&tables).unwrap();

    match TtsModel::load(&path, &changed) {
        Err(Error::Checkpoint { reason, .. }) => assert!(reason.contains("ja"), "{reason}"),
        other => panic!("expected a checkpoint error, got {:?}", other.map(|_| ())),
    }
    assert!(TtsModel::load(&path, &Frontend::from_dir(&{
        let same = dir.path().join("same");
        std::fs::create_dir(&same).unwrap();
        copy_bundled_tables(&same);
        same
    })
    .unwrap())
    .is_ok());
}

#[test]
fn synthesis_is_deterministic_without_noise() {
    let (model, _) = small_model();
    let session = TtsSession::new(model);
    let seq = Frontend::bundled().preprocess("안녕하세요", LanguageTag::Ko).unwrap();
    let profile = session.speaker_profile("ko0").unwrap();
    let opts = SynthesisOptions { noise_scale: 0.0, ..SynthesisOptions::default() };
    let a = session.synthesize(&seq, LanguageTag::Ko, &profile, &opts).unwrap();
    let b = session.synthesize(&seq, LanguageTag::Ko, &profile, &opts).unwrap();
    assert_eq!(a.0.samples, b.0.samples);
    assert!(!a.1.substitution);
}

#[test]
fn unloaded_session_and_language_mismatch_are_errors() {
    let seq = Frontend::bundled().preprocess("hello", LanguageTag::En).unwrap();
    assert!(matches!(TtsSession::unloaded().speaker_profile("en0"), Err(Error::ModelNotLoaded)));

    let (model, _) = small_model();
    let session = TtsSession::new(model);
    let profile = session.speaker_profile("en0").unwrap();
    let err = session.synthesize(&seq, LanguageTag::Ko, &profile, &SynthesisOptions::default()).unwrap_err();
    assert!(matches!(err, Error::LanguageMismatch { .. }));
    assert!(matches!(session.speaker_profile("nobody"), Err(Error::UnknownSpeaker(_))));
}
