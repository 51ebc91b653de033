//! Command implementations behind the `polydub` binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tracing::info;

use polydub::audio::MelConfig;
use polydub::config::Config;
use polydub::facecrop::ProviderRegistry;
use polydub::facegen::{FacegenModel, FacegenTrainer};
use polydub::pipeline::{register_source_video, DubRequest, Dubber, StageTimingReport, SOURCES_DIR};
use polydub::sync_expert::{measure_separation, AlignedClip, SyncExpert, SyncTrainer};
use polydub::textfront::Frontend;
use polydub::toydata::{generate_utterances, read_clip, read_fps_sidecar, speaker_audio, tts_training_set, Manifest};
use polydub::tts::{SymbolTable, TtsModel, TtsTrainer};
use polydub::{Error, Result};

pub mod server;

/// Which model `train` fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TrainTarget {
    Tts,
    Facegen,
    Sync,
}

const LOG_EVERY: usize = 100;

/// Trains `target` on the toy corpus described by `cfg.train` and writes the
/// checkpoint to `cfg.train.output`.
pub fn train(target: TrainTarget, cfg: &Config) -> Result<PathBuf> {
    match target {
        TrainTarget::Tts => train_tts(cfg),
        TrainTarget::Sync => train_sync(cfg),
        TrainTarget::Facegen => train_facegen(cfg),
    }?;
    Ok(cfg.train.output.clone())
}

fn train_tts(cfg: &Config) -> Result<()> {
    let spec = cfg.train.toy_spec();
    let utts = generate_utterances(&spec)?;
    let (speakers, examples) = tts_training_set(&spec, &utts, &cfg.tts.mel());
    if examples.is_empty() {
        return Err(Error::Config("toy corpus has no utterances".into()));
    }
    let model = TtsModel::new(cfg.tts.clone(), SymbolTable::from_frontend(Frontend::bundled()), speakers)?;
    let mut trainer = TtsTrainer::new(model, cfg.train.steps)?;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.tts.seed);
    let batch = cfg.tts.batch_size.min(examples.len());
    for step in 0..cfg.train.steps {
        order.shuffle(&mut rng);
        let chunk: Vec<_> = order[..batch].iter().map(|&i| examples[i].clone()).collect();
        let losses = trainer.training_step(&chunk)?;
        if step % LOG_EVERY == 0 {
            info!(step, total = losses.total, mel = losses.recon_mel, lambda = losses.lambda, "tts");
        }
    }
    trainer.model().save(&cfg.train.output)
}

fn sync_clips(cfg: &Config, seed: u64) -> Result<Vec<AlignedClip>> {
    let mut spec = cfg.train.toy_spec();
    spec.seed = seed;
    let mel = MelConfig { mel_bins: cfg.sync.mel_bins, ..MelConfig::default() };
    generate_utterances(&spec)?
        .iter()
        .map(|u| AlignedClip::from_toy(&u.audio, u.speaker.seed, cfg.sync.face_size, &mel))
        .collect()
}

fn train_sync(cfg: &Config) -> Result<()> {
    let train = sync_clips(cfg, cfg.train.corpus_seed)?;
    let held_out = sync_clips(cfg, cfg.train.corpus_seed.wrapping_add(1))?;
    let mut trainer = SyncTrainer::new(SyncExpert::new(cfg.sync.clone())?)?;
    for step in 0..cfg.train.steps {
        let loss = trainer.training_step(&train)?;
        if step % LOG_EVERY == 0 {
            info!(step, loss, "sync");
        }
    }
    let sep = measure_separation(trainer.expert(), &held_out, 200, cfg.sync.seed)?;
    info!(in_sync = sep.in_sync, off_sync = sep.off_sync, gap = sep.gap(), "held-out separation");
    trainer.expert().save(&cfg.train.output)
}

fn train_facegen(cfg: &Config) -> Result<()> {
    let expert_path = cfg
        .train
        .sync_checkpoint
        .as_ref()
        .ok_or_else(|| Error::Config("train.sync_checkpoint is required for facegen training".into()))?;
    let expert = Arc::new(SyncExpert::load(expert_path)?);
    let spec = cfg.train.toy_spec();
    let utts = generate_utterances(&spec)?;
    let speaker = spec.speakers().into_iter().next().ok_or_else(|| Error::Config("toy corpus has no speakers".into()))?;
    let audio = speaker_audio(&utts, &speaker.speaker_id, cfg.train.clip_frames).ok_or_else(|| {
        Error::Config(format!("speaker {} has fewer than {} frames of audio", speaker.speaker_id, cfg.train.clip_frames))
    })?;
    let mel = MelConfig { mel_bins: cfg.facegen.mel_bins, ..MelConfig::default() };
    let clip = AlignedClip::from_toy(&audio, speaker.seed, cfg.facegen.face_size, &mel)?;
    let mut trainer = FacegenTrainer::new(FacegenModel::new(cfg.facegen.clone())?, expert)?;
    for step in 0..cfg.train.steps {
        let l = trainer.training_step(&clip)?;
        if step % LOG_EVERY == 0 {
            info!(step, l1 = l.l1, sync = l.sync, adv_g = l.adv_g, adv_d = l.adv_d, "facegen");
        }
    }
    trainer.model().save(&cfg.train.output)
}

/// Detects faces in a frame directory and stores the source video under
/// `models/sources/<video_id>`.
pub fn register(models: &Path, video_id: &str, frames_dir: &Path, cfg: &Config) -> Result<usize> {
    let frames = read_clip(frames_dir)?;
    let fps = read_fps_sidecar(frames_dir)?;
    let entry = register_source_video(video_id, frames, fps, &ProviderRegistry::with_builtin(), &cfg.pipeline.crop)?;
    entry.save(&models.join(SOURCES_DIR).join(video_id))?;
    Ok(entry.len())
}

/// Requests for every manifest row, each dubbing the row's own video.
///
/// Videos not yet known to `dubber` are registered first.
pub fn manifest_requests(dubber: &mut Dubber, manifest: &Manifest) -> Result<Vec<DubRequest>> {
    let providers = ProviderRegistry::with_builtin();
    let mut reqs = Vec::with_capacity(manifest.rows.len());
    for row in &manifest.rows {
        if dubber.source(&row.utt_id).is_none() {
            let dir = manifest.resolve(&row.video_path);
            let entry = register_source_video(
                &row.utt_id,
                read_clip(&dir)?,
                read_fps_sidecar(&dir)?,
                &providers,
                &dubber.config().crop,
            )?;
            dubber.add_source(entry);
        }
        reqs.push(DubRequest {
            text: row.text.clone(),
            language: row.language,
            speaker_id: row.speaker_id.clone(),
            source_video_id: row.utt_id.clone(),
            translate_from: None,
        });
    }
    Ok(reqs)
}

/// Median stage report over `reps` passes of the manifest.
pub fn bench(models: &Path, manifest: &Path, reps: usize, cfg: &Config) -> Result<StageTimingReport> {
    let mut dubber = Dubber::load(models, cfg.pipeline.clone())?;
    let manifest = Manifest::read(manifest)?;
    let reqs = manifest_requests(&mut dubber, &manifest)?;
    let scratch = tempfile::tempdir()?;
    dubber.bench(&reqs, reps, scratch.path())
}
