use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::audio::{Waveform, FPS};
use crate::error::{Error, Result};
use crate::toydata::corpus::{frame_path, write_fps_sidecar};

/// Output container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Container {
    #[default]
    ImageSequence,
    Mp4,
}

impl std::str::FromStr for Container {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image_sequence" => Ok(Container::ImageSequence),
            "mp4" => Ok(Container::Mp4),
            other => Err(Error::Config(format!("unknown container {other:?}"))),
        }
    }
}

/// External mp4 encoder invoked through an argument template.
///
/// Placeholders: `{frames}` (printf-style frame pattern, `%05d.png`),
/// `{audio}` (WAV path), `{fps}` and `{output}` (target mp4 path).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mp4Encoder {
    pub program: String,
    pub args: Vec<String>,
}

impl Mp4Encoder {
    /// Arguments of the `ffmpeg` invocation this adapter is modelled on.
    pub fn ffmpeg() -> Self {
        let a = |s: &str| s.to_string();
        Mp4Encoder {
            program: a("ffmpeg"),
            args: vec![
                a("-y"),
                a("-framerate"),
                a("{fps}"),
                a("-i"),
                a("{frames}"),
                a("-i"),
                a("{audio}"),
                a("-c:v"),
                a("libx264"),
                a("-pix_fmt"),
                a("yuv420p"),
                a("-c:a"),
                a("aac"),
                a("-shortest"),
                a("{output}"),
            ],
        }
    }

    pub fn render_args(&self, frames: &Path, audio: &Path, fps: u32, output: &Path) -> Vec<String> {
        self.args
            .iter()
            .map(|a| {
                a.replace("{frames}", &frames.display().to_string())
                    .replace("{audio}", &audio.display().to_string())
                    .replace("{fps}", &fps.to_string())
                    .replace("{output}", &output.display().to_string())
            })
            .collect()
    }
}

/// Files written for one dubbed clip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoArtifact {
    pub container: Container,
    /// Directory holding the frame sequence and audio.
    pub dir: PathBuf,
    pub audio: PathBuf,
    pub frames: Vec<PathBuf>,
    pub mp4: Option<PathBuf>,
}

/// Writes `frames` and `audio` as a lossless image sequence and, for mp4,
/// hands them to `encoder`.
pub fn encode_video(
    frames: &[RgbImage],
    audio: &Waveform,
    container: Container,
    out_dir: &Path,
    encoder: Option<&Mp4Encoder>,
) -> Result<VideoArtifact> {
    let expected = (audio.duration_secs() * FPS as f64).round() as usize;
    if frames.len() != expected {
        return Err(Error::InvalidRequest(format!(
            "{} frames for {:.3} s of audio, expected {expected}",
            frames.len(),
            audio.duration_secs()
        )));
    }
    if container == Container::Mp4 && encoder.is_none() {
        return Err(Error::EncoderUnavailable);
    }
    let frame_dir = out_dir.join("frames");
    fs::create_dir_all(&frame_dir).map_err(|e| Error::io(&frame_dir, e))?;
    let mut paths = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let p = frame_path(&frame_dir, i);
        f.save(&p)?;
        paths.push(p);
    }
    write_fps_sidecar(&frame_dir, FPS)?;
    let audio_path = out_dir.join("audio.wav");
    audio.write_wav(&audio_path)?;
    let mp4 = match (container, encoder) {
        (Container::Mp4, Some(enc)) => {
            let output = out_dir.join("output.mp4");
            let args = enc.render_args(&frame_dir.join("%05d.png"), &audio_path, FPS, &output);
            let status = Command::new(&enc.program)
                .args(&args)
                .output()
                .map_err(|e| Error::EncoderFailed(format!("{}: {e}", enc.program)))?;
            if !status.status.success() {
                return Err(Error::EncoderFailed(format!(
                    "{} exited with {}: {}",
                    enc.program,
                    status.status,
                    String::from_utf8_lossy(&status.stderr).trim()
                )));
            }
            Some(output)
        }
        _ => None,
    };
    Ok(VideoArtifact { container, dir: out_dir.to_path_buf(), audio: audio_path, frames: paths, mp4 })
}
