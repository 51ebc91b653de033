use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::encode::{encode_video, Container, Mp4Encoder, VideoArtifact};
use super::source::{ping_pong_index, CropConfig, SourceVideoEntry};
use super::timing::{median_report, Clock, StageTimingReport, SystemClock};
use crate::audio::{MelConfig, MelSpectrogram, Waveform, SAMPLES_PER_FRAME};
use crate::error::{Error, Result};
use crate::facecrop::{crop, paste_back, FaceFrame};
use crate::facegen::{FacegenModel, GenInput};
use crate::lang::LanguageTag;
use crate::nn::to_f32_vec;
use crate::textfront::{Frontend, TranslationHook};
use crate::tts::{SynthesisOptions, SynthesisTrace, TtsModel, TtsSession};

/// Text checked before synthesis; the default accepts everything.
pub trait ContentFilter: Send + Sync {
    fn check(&self, text: &str, lang: LanguageTag) -> Result<()>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AllowAll;

impl ContentFilter for AllowAll {
    fn check(&self, _text: &str, _lang: LanguageTag) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DubRequest {
    pub text: String,
    pub language: LanguageTag,
    pub speaker_id: String,
    pub source_video_id: String,
    #[serde(default)]
    pub translate_from: Option<LanguageTag>,
}

/// Orchestration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DubConfig {
    pub container: Container,
    pub encoder: Option<Mp4Encoder>,
    pub synthesis: SynthesisOptions,
    pub crop: CropConfig,
}

impl Default for DubConfig {
    fn default() -> Self {
        DubConfig {
            container: Container::ImageSequence,
            encoder: None,
            synthesis: SynthesisOptions::default(),
            crop: CropConfig::default(),
        }
    }
}

pub struct DubOutput {
    pub frames: Vec<RgbImage>,
    /// Synthesized speech padded to a whole number of video frames.
    pub audio: Waveform,
    pub artifact: VideoArtifact,
    pub trace: SynthesisTrace,
    pub report: StageTimingReport,
}

impl DubOutput {
    pub fn response(&self) -> DubResponse {
        DubResponse {
            artifact_dir: self.artifact.dir.clone(),
            mp4: self.artifact.mp4.clone(),
            n_frames: self.frames.len(),
            audio_seconds: self.audio.duration_secs(),
            substitution: self.trace.substitution,
            report: self.report.clone(),
        }
    }
}

/// Metadata returned to callers of the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DubResponse {
    pub artifact_dir: PathBuf,
    pub mp4: Option<PathBuf>,
    pub n_frames: usize,
    pub audio_seconds: f64,
    /// True when the speaker embedding was replaced by the zero vector.
    pub substitution: bool,
    pub report: StageTimingReport,
}

/// File names inside a model directory.
pub const TTS_FILE: &str = "tts.safetensors";
pub const FACEGEN_FILE: &str = "facegen.safetensors";
pub const SOURCES_DIR: &str = "sources";

/// One loaded model bundle with its registered source videos.
pub struct Dubber {
    frontend: Arc<Frontend>,
    translator: TranslationHook,
    filter: Box<dyn ContentFilter>,
    tts: TtsSession,
    facegen: Arc<FacegenModel>,
    sources: BTreeMap<String, SourceVideoEntry>,
    cfg: DubConfig,
    clock: Arc<dyn Clock>,
}

impl Dubber {
    pub fn new(tts: TtsSession, facegen: Arc<FacegenModel>, cfg: DubConfig) -> Self {
        Dubber {
            frontend: Arc::new(Frontend::bundled().clone()),
            translator: TranslationHook::new(),
            filter: Box::new(AllowAll),
            tts,
            facegen,
            sources: BTreeMap::new(),
            cfg,
            clock: Arc::new(SystemClock::default()),
        }
    }

    /// Loads `tts.safetensors`, `facegen.safetensors` and every source video
    /// saved under `sources/<video_id>/` in `dir`.
    pub fn load(dir: &Path, cfg: DubConfig) -> Result<Self> {
        let frontend = Frontend::bundled();
        let tts = TtsModel::load(&dir.join(TTS_FILE), frontend)?;
        let facegen = FacegenModel::load(&dir.join(FACEGEN_FILE))?;
        let mut dubber = Dubber::new(TtsSession::new(tts), Arc::new(facegen), cfg);
        let sources = dir.join(SOURCES_DIR);
        if sources.is_dir() {
            let mut ids = Vec::new();
            for entry in fs::read_dir(&sources).map_err(|e| Error::io(&sources, e))? {
                let entry = entry.map_err(|e| Error::io(&sources, e))?;
                if entry.path().is_dir() {
                    ids.push(entry.file_name().to_string_lossy().into_owned());
                }
            }
            ids.sort();
            for id in ids {
                dubber.add_source(SourceVideoEntry::load(&id, &sources.join(&id))?);
            }
        }
        Ok(dubber)
    }

    pub fn with_frontend(mut self, frontend: Arc<Frontend>) -> Self {
        self.frontend = frontend;
        self
    }

    pub fn with_translator(mut self, translator: TranslationHook) -> Self {
        self.translator = translator;
        self
    }

    pub fn with_filter(mut self, filter: impl ContentFilter + 'static) -> Self {
        self.filter = Box::new(filter);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn add_source(&mut self, entry: SourceVideoEntry) {
        self.sources.insert(entry.video_id.clone(), entry);
    }

    pub fn source_ids(&self) -> impl Iterator<Item = &str> {
        self.sources.keys().map(String::as_str)
    }

    pub fn source(&self, video_id: &str) -> Option<&SourceVideoEntry> {
        self.sources.get(video_id)
    }

    pub fn config(&self) -> &DubConfig {
        &self.cfg
    }

    /// Text → speech → lip-synced frames pasted into the source video,
    /// written under `out_dir`.
    pub fn dub(&self, req: &DubRequest, out_dir: &Path) -> Result<DubOutput> {
        let start = self.clock.now();

        let (seq, source, speaker) = (|| {
            let source = self
                .sources
                .get(&req.source_video_id)
                .ok_or_else(|| Error::InvalidRequest(format!("unknown source video {:?}", req.source_video_id)))?;
            let speaker = self.tts.speaker_profile(&req.speaker_id)?;
            let text = match req.translate_from {
                Some(src) => self.translator.translate(&req.text, src, req.language)?,
                None => req.text.clone(),
            };
            if text.trim().is_empty() {
                return Err(Error::InvalidRequest("empty text".into()));
            }
            self.filter.check(&text, req.language)?;
            let seq = self.frontend.preprocess(&text, req.language)?;
            if seq.is_empty() {
                return Err(Error::InvalidRequest("text is empty after cleaning".into()));
            }
            Ok((seq, source, speaker))
        })()
        .map_err(|e: Error| e.in_stage("preprocess"))?;
        let t_pre = self.clock.now();

        let (audio, trace) = (|| {
            let (wave, trace) = self.tts.synthesize(&seq, req.language, &speaker, &self.cfg.synthesis)?;
            Ok((pad_to_frames(wave), trace))
        })()
        .map_err(|e: Error| e.in_stage("tts"))?;
        let n_frames = audio.len() / SAMPLES_PER_FRAME;
        let t_tts = self.clock.now();

        let faces = self.generate_faces(&audio, source, n_frames).map_err(|e| e.in_stage("facegen"))?;
        let t_gen = self.clock.now();

        let frames = faces
            .iter()
            .enumerate()
            .map(|(i, face)| {
                let j = ping_pong_index(i, source.len());
                paste_back(&source.frames[j], face, &source.geometries[j], self.cfg.crop.blend_margin)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("merge"))?;
        let t_merge = self.clock.now();

        let artifact = encode_video(&frames, &audio, self.cfg.container, out_dir, self.cfg.encoder.as_ref())
            .map_err(|e| e.in_stage("encode"))?;
        let t_enc = self.clock.now();

        let mut report = StageTimingReport::new(audio.duration_secs());
        let marks = [start, t_pre, t_tts, t_gen, t_merge, t_enc];
        for (stage, w) in super::STAGES.iter().zip(marks.windows(2)) {
            report.record(stage, w[1] - w[0]);
        }
        report.total_seconds = t_enc - start;
        Ok(DubOutput { frames, audio, artifact, trace, report })
    }

    fn generate_faces(&self, audio: &Waveform, source: &SourceVideoEntry, n_frames: usize) -> Result<Vec<FaceFrame>> {
        if n_frames == 0 {
            return Err(Error::InsufficientAudio { required: 1, available: 0 });
        }
        let fcfg = self.facegen.config();
        let s = fcfg.face_size;
        let mel = MelSpectrogram::compute(audio, &MelConfig { mel_bins: fcfg.mel_bins, ..MelConfig::default() });
        let feats = self.facegen.audio_encode_frames(&mel, n_frames)?;
        let dim = feats.dim(1)?;
        let feats = to_f32_vec(&feats)?;

        let m = source.len();
        let mut crops: Vec<Option<FaceFrame>> = vec![None; m];
        let mut face_at = |j: usize| -> Result<FaceFrame> {
            if crops[j].is_none() {
                crops[j] = Some(crop(&source.frames[j], &source.geometries[j], s)?);
            }
            Ok(crops[j].clone().expect("cached"))
        };
        let mut inputs = Vec::with_capacity(n_frames);
        for i in 0..n_frames {
            let j = ping_pong_index(i, m);
            inputs.push(GenInput {
                reference: face_at(j)?,
                identity: face_at((j + m / 2) % m)?,
                audio_feat: feats[i * dim..(i + 1) * dim].to_vec(),
            });
        }
        self.facegen.generate_frames(&inputs)
    }

    /// Median per-stage report over `reps` runs of every request, after one
    /// discarded warm-up run.
    pub fn bench(&self, reqs: &[DubRequest], reps: usize, scratch: &Path) -> Result<StageTimingReport> {
        if reqs.is_empty() || reps == 0 {
            return Err(Error::InvalidRequest("bench needs at least one request and one repetition".into()));
        }
        self.dub(&reqs[0], &scratch.join("warmup"))?;
        let mut reports = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut total: Option<StageTimingReport> = None;
            for (k, req) in reqs.iter().enumerate() {
                let out = self.dub(req, &scratch.join(format!("rep{r}_{k}")))?;
                total = Some(match total {
                    None => out.report,
                    Some(t) => t.merged(&out.report),
                });
            }
            reports.push(total.expect("non-empty request set"));
        }
        Ok(median_report(&reports))
    }
}

/// Appends silence so the waveform covers a whole number of video frames.
fn pad_to_frames(wave: Waveform) -> Waveform {
    let n = wave.len().div_ceil(SAMPLES_PER_FRAME) * SAMPLES_PER_FRAME;
    let mut samples = wave.samples;
    samples.resize(n, 0.0);
    Waveform { samples, sample_rate: wave.sample_rate }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_reaches_frame_boundary() {
        let w = pad_to_frames(Waveform::silence(SAMPLES_PER_FRAME + 1, 22050));
        assert_eq!(w.len(), 2 * SAMPLES_PER_FRAME);
        let w = pad_to_frames(Waveform::silence(3 * SAMPLES_PER_FRAME, 22050));
        assert_eq!(w.len(), 3 * SAMPLES_PER_FRAME);
    }
}
