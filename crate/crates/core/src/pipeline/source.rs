use std::fs;
use std::path::Path;
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::FPS;
use crate::error::{Error, Result};
use crate::facecrop::{expand_region, CropGeometry, GeometrySmoother, MarginParams, ProviderRegistry};
use crate::toydata::corpus::{frame_path, read_clip, read_fps_sidecar, write_fps_sidecar};

const GEOMETRY_FILE: &str = "geometry.json";

/// Crop settings applied when a source video is registered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropConfig {
    pub provider: String,
    pub margins: MarginParams,
    /// Weight of the newest frame in exponential geometry smoothing; `None`
    /// uses raw per-frame geometry.
    pub smoothing_alpha: Option<f64>,
    /// Width of the feathered border used when pasting faces back.
    pub blend_margin: u32,
}

impl Default for CropConfig {
    fn default() -> Self {
        CropConfig {
            provider: crate::toydata::SYNTHETIC_PROVIDER.to_string(),
            margins: MarginParams::default(),
            smoothing_alpha: Some(0.6),
            blend_margin: 4,
        }
    }
}

/// A reference video with crop geometry precomputed for every frame.
#[derive(Debug, Clone)]
pub struct SourceVideoEntry {
    pub video_id: String,
    pub frames: Arc<Vec<RgbImage>>,
    pub geometries: Vec<CropGeometry>,
    pub fps: u32,
}

impl SourceVideoEntry {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// SHA-256 over the serialized geometry cache.
    pub fn geometry_checksum(&self) -> String {
        let json = serde_json::to_vec(&self.geometries).expect("geometry serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Writes frames, frame rate and geometry cache under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, f) in self.frames.iter().enumerate() {
            f.save(frame_path(dir, i))?;
        }
        write_fps_sidecar(dir, self.fps)?;
        let p = dir.join(GEOMETRY_FILE);
        fs::write(&p, serde_json::to_vec_pretty(&self.geometries)?).map_err(|e| Error::io(&p, e))
    }

    pub fn load(video_id: &str, dir: &Path) -> Result<Self> {
        let p = dir.join(GEOMETRY_FILE);
        let geometries: Vec<CropGeometry> =
            serde_json::from_slice(&fs::read(&p).map_err(|e| Error::io(&p, e))?)?;
        let frames = read_clip(dir)?;
        if frames.len() != geometries.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} frames but {} cached geometries in {}",
                frames.len(),
                geometries.len(),
                dir.display()
            )));
        }
        Ok(SourceVideoEntry { video_id: video_id.into(), frames: Arc::new(frames), geometries, fps: read_fps_sidecar(dir)? })
    }
}

/// Detects landmarks on every frame and caches the crop geometry.
pub fn register_source_video(
    video_id: &str,
    frames: Vec<RgbImage>,
    fps: u32,
    providers: &ProviderRegistry,
    crop: &CropConfig,
) -> Result<SourceVideoEntry> {
    if fps != FPS {
        return Err(Error::InvalidRequest(format!("source video at {fps} fps; resample to {FPS} first")));
    }
    if frames.is_empty() {
        return Err(Error::InvalidRequest("source video has no frames".into()));
    }
    let mut smoother = crop.smoothing_alpha.map(GeometrySmoother::new).transpose()?;
    let mut geometries = Vec::with_capacity(frames.len());
    for (k, f) in frames.iter().enumerate() {
        let lm = providers.detect_landmarks(f, &crop.provider).map_err(|e| match e {
            Error::NoFaceFound { .. } => Error::NoFaceFound { frame: Some(k) },
            e => e,
        })?;
        let raw = expand_region(&lm, f.dimensions(), &crop.margins)?;
        geometries.push(match smoother.as_mut() {
            Some(s) => s.update(&raw, f.dimensions()),
            None => raw,
        });
    }
    Ok(SourceVideoEntry { video_id: video_id.to_string(), frames: Arc::new(frames), geometries, fps })
}

/// Source frame shown at output frame `i` when `len` frames play
/// forward, then backward, repeatedly.
pub fn ping_pong_index(i: usize, len: usize) -> usize {
    if len <= 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    let k = i % period;
    if k < len {
        k
    } else {
        period - k
    }
}
