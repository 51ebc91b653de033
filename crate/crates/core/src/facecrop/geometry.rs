use serde::{Deserialize, Serialize};

use super::LandmarkSet;
use crate::error::{Error, Result};

/// Horizontal and upward head margins applied around the landmark box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarginParams {
    /// Square side as a multiple of the larger landmark-box dimension.
    pub scale: f64,
    /// Upward shift of the square's top edge, as a fraction of the box height.
    pub up: f64,
}

impl Default for MarginParams {
    fn default() -> Self {
        MarginParams { scale: 1.6, up: 0.3 }
    }
}

/// Square source-frame region resampled to the model resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropGeometry {
    pub x0: i64,
    pub y0: i64,
    pub side: u32,
    /// True when the region had to be moved or shrunk to fit the frame.
    pub clamped: bool,
}

impl CropGeometry {
    /// Resampling factor from the region to `size` pixels.
    pub fn scale(&self, size: usize) -> f64 {
        size as f64 / self.side as f64
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && y >= self.y0 && x < self.x0 + self.side as i64 && y < self.y0 + self.side as i64
    }

    pub fn within(&self, width: u32, height: u32) -> bool {
        self.side > 0
            && self.x0 >= 0
            && self.y0 >= 0
            && self.x0 + self.side as i64 <= width as i64
            && self.y0 + self.side as i64 <= height as i64
    }
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Expands the landmark bounding box to a head-covering square.
///
/// The square has side `scale·max(w, h)`, is centred horizontally on the
/// box, and its top edge sits `up·h` above the box. A square that leaves the
/// frame is moved back inside (and shrunk if larger than the frame).
pub fn expand_region(lm: &LandmarkSet, frame_size: (u32, u32), margins: &MarginParams) -> Result<CropGeometry> {
    let (min_x, min_y, max_x, max_y) = lm.bounds()?;
    let (w, h) = (max_x - min_x, max_y - min_y);
    let side = round_half_up(margins.scale * w.max(h)).max(1);
    let cx = (min_x + max_x) / 2.0;
    let x0 = round_half_up(cx - side as f64 / 2.0);
    let y0 = round_half_up(min_y - margins.up * h);
    Ok(clamp_region(x0, y0, side, frame_size))
}

/// Moves (and if needed shrinks) a square so it lies inside the frame.
pub fn clamp_region(x0: i64, y0: i64, side: i64, (fw, fh): (u32, u32)) -> CropGeometry {
    let max_side = fw.min(fh) as i64;
    let s = side.clamp(1, max_side.max(1));
    let nx = x0.clamp(0, (fw as i64 - s).max(0));
    let ny = y0.clamp(0, (fh as i64 - s).max(0));
    CropGeometry {
        x0: nx,
        y0: ny,
        side: s as u32,
        clamped: s != side || nx != x0 || ny != y0,
    }
}

/// Exponential smoothing of region centre and side across frames.
#[derive(Debug, Clone)]
pub struct GeometrySmoother {
    alpha: f64,
    state: Option<(f64, f64, f64)>,
}

impl GeometrySmoother {
    /// `alpha` is the weight of the newest measurement.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::ParamOutOfRange {
                name: "smoothing_alpha",
                value: alpha,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(GeometrySmoother { alpha, state: None })
    }

    pub fn update(&mut self, geo: &CropGeometry, frame_size: (u32, u32)) -> CropGeometry {
        let half = geo.side as f64 / 2.0;
        let raw = (geo.x0 as f64 + half, geo.y0 as f64 + half, geo.side as f64);
        let s = match self.state {
            None => raw,
            Some(p) => (
                self.alpha * raw.0 + (1.0 - self.alpha) * p.0,
                self.alpha * raw.1 + (1.0 - self.alpha) * p.1,
                self.alpha * raw.2 + (1.0 - self.alpha) * p.2,
            ),
        };
        self.state = Some(s);
        let side = round_half_up(s.2).max(1);
        let mut out = clamp_region(
            round_half_up(s.0 - side as f64 / 2.0),
            round_half_up(s.1 - side as f64 / 2.0),
            side,
            frame_size,
        );
        out.clamped |= geo.clamped;
        out
    }
}
