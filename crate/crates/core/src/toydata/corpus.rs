use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::face::render_face_clip;
use super::voice::{fnv1a, render_voice};
use crate::audio::{MelConfig, MelSpectrogram, Waveform, FPS, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::lang::LanguageTag;
use crate::textfront::{Frontend, PhonemeSequence};
use crate::tts::{SpeakerEntry, TtsExample};

const TOY_WORDS_KO: &str = include_str!("../../data/toy_words_ko.txt");
const MAX_VOCAB_PER_SPEAKER: usize = 12;
const WORDS_PER_UTTERANCE: std::ops::RangeInclusive<usize> = 3..=5;

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const FPS_SIDECAR: &str = "fps.txt";

/// Parameters of a synthetic corpus. `n_speakers` counts speakers per
/// language; each speaker talks in a single native language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToySpec {
    pub n_speakers: usize,
    pub languages: Vec<LanguageTag>,
    pub utterances_per_speaker: usize,
    pub seed: u64,
    pub fps: u32,
    pub sample_rate: u32,
}

impl ToySpec {
    pub fn new(n_speakers: usize, languages: Vec<LanguageTag>, utterances_per_speaker: usize, seed: u64) -> Self {
        ToySpec {
            n_speakers,
            languages,
            utterances_per_speaker,
            seed,
            fps: FPS,
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fps != FPS || self.sample_rate != SAMPLE_RATE {
            return Err(Error::Config(format!(
                "toy corpora use {FPS} fps and {SAMPLE_RATE} Hz, got {} fps and {} Hz",
                self.fps, self.sample_rate
            )));
        }
        let mut langs = self.languages.clone();
        langs.sort();
        langs.dedup();
        if langs.len() != self.languages.len() {
            return Err(Error::Config("toy spec lists a language twice".into()));
        }
        Ok(())
    }

    /// All speakers in language-major order.
    pub fn speakers(&self) -> Vec<ToySpeaker> {
        let mut out = Vec::new();
        for &language in &self.languages {
            for s in 0..self.n_speakers {
                let index = out.len();
                out.push(ToySpeaker {
                    speaker_id: format!("{}{s}", language.code()),
                    language,
                    seed: self.seed.wrapping_mul(64).wrapping_add(index as u64 + 1),
                    index,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToySpeaker {
    pub speaker_id: String,
    pub language: LanguageTag,
    /// Drives both the voice pitch and the face identity.
    pub seed: u64,
    pub index: usize,
}

/// One generated utterance, held in memory.
#[derive(Debug, Clone)]
pub struct ToyUtterance {
    pub utt_id: String,
    pub speaker: ToySpeaker,
    pub text: String,
    pub phonemes: PhonemeSequence,
    pub audio: Waveform,
}

/// The first `n_frames` video frames of one speaker's utterances played
/// back to back, or `None` when they are too short.
pub fn speaker_audio(utts: &[ToyUtterance], speaker_id: &str, n_frames: usize) -> Option<Waveform> {
    let need = n_frames * crate::audio::SAMPLES_PER_FRAME;
    let mut samples = Vec::with_capacity(need);
    for u in utts.iter().filter(|u| u.speaker.speaker_id == speaker_id) {
        samples.extend_from_slice(&u.audio.samples);
        if samples.len() >= need {
            samples.truncate(need);
            return Some(Waveform { samples, sample_rate: u.audio.sample_rate });
        }
    }
    None
}

/// Speaker table and training examples for the utterances of `spec`.
pub fn tts_training_set(spec: &ToySpec, utts: &[ToyUtterance], mel: &MelConfig) -> (Vec<SpeakerEntry>, Vec<TtsExample>) {
    let speakers = spec
        .speakers()
        .into_iter()
        .map(|s| SpeakerEntry { speaker_id: s.speaker_id, native_language: s.language })
        .collect();
    let examples = utts
        .iter()
        .map(|u| TtsExample {
            seq: u.phonemes.clone(),
            speaker: u.speaker.index,
            wave: u.audio.clone(),
            mel: MelSpectrogram::compute(&u.audio, mel),
        })
        .collect();
    (speakers, examples)
}

impl ToyUtterance {
    pub fn n_frames(&self) -> usize {
        self.audio.len() / crate::audio::SAMPLES_PER_FRAME
    }
}

fn word_pool(frontend: &Frontend, lang: LanguageTag) -> Vec<String> {
    let mut words: Vec<String> = match lang {
        LanguageTag::Ko => TOY_WORDS_KO.lines().map(str::trim).filter(|w| !w.is_empty()).map(String::from).collect(),
        LanguageTag::En => frontend
            .lexicon(lang)
            .iter()
            .map(|(k, _)| k)
            .filter(|k| (3..=8).contains(&k.len()) && k.chars().all(|c| c.is_ascii_lowercase()))
            .map(String::from)
            .collect(),
        LanguageTag::Ja | LanguageTag::Zh => frontend
            .lexicon(lang)
            .iter()
            .map(|(k, _)| k)
            .filter(|k| (1..=3).contains(&k.chars().count()))
            .map(String::from)
            .collect(),
    };
    words.sort();
    words.dedup();
    words
}

/// Disjoint word lists, one per speaker of `lang`, so utterance content
/// correlates with speaker identity.
fn private_vocabularies(spec: &ToySpec, frontend: &Frontend, lang: LanguageTag) -> Vec<Vec<String>> {
    let mut pool = word_pool(frontend, lang);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ fnv1a(lang.code().as_bytes()));
    pool.shuffle(&mut rng);
    let per = (pool.len() / spec.n_speakers.max(1)).min(MAX_VOCAB_PER_SPEAKER).max(1);
    (0..spec.n_speakers)
        .map(|s| pool.iter().skip(s * per).take(per).cloned().collect())
        .collect()
}

fn join_words(words: &[String], lang: LanguageTag) -> String {
    match lang {
        LanguageTag::Ko | LanguageTag::En => words.join(" "),
        LanguageTag::Ja => words.join("、"),
        LanguageTag::Zh => words.join("，"),
    }
}

/// Generates every utterance of `spec` in memory, speaker by speaker.
pub fn generate_utterances(spec: &ToySpec) -> Result<Vec<ToyUtterance>> {
    spec.validate()?;
    let frontend = Frontend::bundled();
    let speakers = spec.speakers();
    let mut out = Vec::with_capacity(speakers.len() * spec.utterances_per_speaker);
    for &lang in &spec.languages {
        let vocab = private_vocabularies(spec, frontend, lang);
        for speaker in speakers.iter().filter(|s| s.language == lang) {
            let words = &vocab[speaker.index % spec.n_speakers];
            let mut rng = ChaCha8Rng::seed_from_u64(speaker.seed ^ 0x7574_7465);
            for u in 0..spec.utterances_per_speaker {
                let n = rng.gen_range(WORDS_PER_UTTERANCE);
                let picked: Vec<String> = (0..n).map(|_| words[rng.gen_range(0..words.len())].clone()).collect();
                let text = join_words(&picked, lang);
                let phonemes = frontend.preprocess(&text, lang)?;
                let audio = render_voice(&phonemes, speaker.seed);
                out.push(ToyUtterance {
                    utt_id: format!("{}_{u:04}", speaker.speaker_id),
                    speaker: speaker.clone(),
                    text,
                    phonemes,
                    audio,
                });
            }
        }
    }
    Ok(out)
}

/// One manifest record; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub utt_id: String,
    pub audio_path: PathBuf,
    pub video_path: PathBuf,
    pub text: String,
    pub speaker_id: String,
    pub language: LanguageTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.utt_id,
                r.audio_path.display(),
                r.video_path.display(),
                r.text,
                r.speaker_id,
                r.language
            ));
        }
        s
    }

    pub fn parse(text: &str, root: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(Error::Parse {
                    what: "manifest",
                    line: i + 1,
                    reason: format!("expected 6 tab-separated fields, found {}", f.len()),
                });
            }
            rows.push(ManifestRow {
                utt_id: f[0].into(),
                audio_path: f[1].into(),
                video_path: f[2].into(),
                text: f[3].into(),
                speaker_id: f[4].into(),
                language: f[5].parse()?,
            });
        }
        Ok(Manifest { root: root.to_path_buf(), rows })
    }

    /// Reads `path`; relative row paths resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }
}

/// Path of frame `i` inside a clip directory.
pub fn frame_path(clip_dir: &Path, i: usize) -> PathBuf {
    clip_dir.join(format!("{i:05}.png"))
}

/// Writes each clip's frame rate next to its frames.
pub fn write_fps_sidecar(clip_dir: &Path, fps: u32) -> Result<()> {
    let p = clip_dir.join(FPS_SIDECAR);
    fs::write(&p, format!("{fps}\n")).map_err(|e| Error::io(&p, e))
}

pub fn read_fps_sidecar(clip_dir: &Path) -> Result<u32> {
    let p = clip_dir.join(FPS_SIDECAR);
    let s = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    s.trim().parse().map_err(|_| Error::Config(format!("bad frame rate in {}", p.display())))
}

/// Loads the numbered frames of a clip directory in order.
pub fn read_clip(clip_dir: &Path) -> Result<Vec<image::RgbImage>> {
    let mut frames = Vec::new();
    loop {
        let p = frame_path(clip_dir, frames.len());
        if !p.exists() {
            return Ok(frames);
        }
        frames.push(image::open(&p)?.to_rgb8());
    }
}

fn write_utterance(out_dir: &Path, utt: &ToyUtterance) -> Result<ManifestRow> {
    let audio_path = PathBuf::from("audio").join(format!("{}.wav", utt.utt_id));
    let video_path = PathBuf::from("video").join(&utt.utt_id);
    utt.audio.write_wav(&out_dir.join(&audio_path))?;
    let clip_dir = out_dir.join(&video_path);
    fs::create_dir_all(&clip_dir).map_err(|e| Error::io(&clip_dir, e))?;
    let clip = render_face_clip(&utt.audio, utt.speaker.seed);
    for (i, f) in clip.frames.iter().enumerate() {
        f.save(frame_path(&clip_dir, i))?;
    }
    write_fps_sidecar(&clip_dir, clip.fps)?;
    Ok(ManifestRow {
        utt_id: utt.utt_id.clone(),
        audio_path,
        video_path,
        text: utt.text.clone(),
        speaker_id: utt.speaker.speaker_id.clone(),
        language: utt.speaker.language,
    })
}

/// Writes WAV audio, PNG frame sequences and `manifest.tsv` under `out_dir`.
///
/// Utterances are rendered on all available cores; the manifest is written
/// once, in generation order.
pub fn build_corpus(spec: &ToySpec, out_dir: &Path) -> Result<Manifest> {
    let utts = generate_utterances(spec)?;
    let audio_dir = out_dir.join("audio");
    fs::create_dir_all(&audio_dir).map_err(|e| Error::io(&audio_dir, e))?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(utts.len().max(1));
    let chunk = utts.len().div_ceil(workers).max(1);
    let rows: Vec<Result<ManifestRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = utts
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|u| write_utterance(out_dir, u)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("corpus worker panicked")).collect()
    });
    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    };
    let mp = out_dir.join(MANIFEST_FILE);
    let mut f = fs::File::create(&mp).map_err(|e| Error::io(&mp, e))?;
    f.write_all(manifest.to_tsv().as_bytes()).map_err(|e| Error::io(&mp, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speakers_are_per_language() {
        let spec = ToySpec::new(2, vec![LanguageTag::Ko, LanguageTag::En], 1, 0);
        let ids: Vec<String> = spec.speakers().into_iter().map(|s| s.speaker_id).collect();
        assert_eq!(ids, ["ko0", "ko1", "en0", "en1"]);
    }

    #[test]
    fn vocabularies_are_disjoint() {
        let spec = ToySpec::new(3, vec![LanguageTag::En], 1, 5);
        let v = private_vocabularies(&spec, Frontend::bundled(), LanguageTag::En);
        for a in 0..3 {
            for b in a + 1..3 {
                assert!(v[a].iter().all(|w| !v[b].contains(w)));
            }
        }
    }

    #[test]
    fn every_language_generates() {
        let spec = ToySpec::new(2, LanguageTag::ALL.to_vec(), 3, 9);
        let utts = generate_utterances(&spec).unwrap();
        assert_eq!(utts.len(), 24);
        assert!(utts.iter().all(|u| !u.phonemes.is_empty() && u.n_frames() > 0));
    }

    #[test]
    fn rejects_foreign_frame_rate() {
        let mut spec = ToySpec::new(1, vec![LanguageTag::Ko], 1, 0);
        spec.fps = 30;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn manifest_round_trips() {
        let spec = ToySpec::new(1, vec![LanguageTag::Ja], 2, 3);
        let dir = tempfile::tempdir().unwrap();
        let m = build_corpus(&spec, dir.path()).unwrap();
        let back = Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(m, back);
        let clip = read_clip(&back.resolve(&back.rows[0].video_path)).unwrap();
        let audio = Waveform::read_wav(&back.resolve(&back.rows[0].audio_path)).unwrap();
        assert_eq!(clip.len() * crate::audio::SAMPLES_PER_FRAME, audio.len());
    }
}
