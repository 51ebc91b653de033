use rand::Rng;

use super::config::FacegenConfig;
use crate::error::{Error, Result};
use crate::facecrop::FaceFrame;

/// Affine warp about the image centre: zoom, then rotate, then translate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub dx: f64,
    pub dy: f64,
    /// Degrees.
    pub angle: f64,
    pub zoom: f64,
}

impl AugmentParams {
    pub const IDENTITY: AugmentParams = AugmentParams { dx: 0.0, dy: 0.0, angle: 0.0, zoom: 1.0 };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn validate(&self, size: usize) -> Result<()> {
        let max_shift = 0.1 * size as f64;
        let check = |name, value: f64, min: f64, max: f64| {
            if (min..=max).contains(&value) {
                Ok(())
            } else {
                Err(Error::ParamOutOfRange { name, value, min, max })
            }
        };
        check("dx", self.dx, -max_shift, max_shift)?;
        check("dy", self.dy, -max_shift, max_shift)?;
        check("angle", self.angle, -15.0, 15.0)?;
        check("zoom", self.zoom, 0.85, 1.15)
    }

    /// Uniform draw within the configured augmentation ranges.
    pub fn sample(rng: &mut impl Rng, cfg: &FacegenConfig) -> Self {
        let shift = cfg.max_shift_frac * cfg.face_size as f64;
        let sym = |rng: &mut dyn rand::RngCore, m: f64| if m > 0.0 { rng.gen_range(-m..=m) } else { 0.0 };
        AugmentParams {
            dx: sym(rng, shift),
            dy: sym(rng, shift),
            angle: sym(rng, cfg.max_angle),
            zoom: 1.0 + sym(rng, cfg.max_zoom_delta),
        }
    }
}

/// Warps `frame` by `p`, sampling bilinearly with border replication.
pub fn augment(frame: &FaceFrame, p: &AugmentParams) -> Result<FaceFrame> {
    p.validate(frame.size)?;
    if p.is_identity() {
        return Ok(frame.clone());
    }
    let s = frame.size;
    let c = (s as f64 - 1.0) / 2.0;
    let (sin, cos) = (-p.angle.to_radians()).sin_cos();
    let last = (s - 1) as f64;
    let mut out = vec![0.0f32; frame.pixels.len()];
    for y in 0..s {
        for x in 0..s {
            let (qx, qy) = (x as f64 - c - p.dx, y as f64 - c - p.dy);
            let sx = (c + (cos * qx - sin * qy) / p.zoom).clamp(0.0, last);
            let sy = (c + (sin * qx + cos * qy) / p.zoom).clamp(0.0, last);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(s - 1), (y0 + 1).min(s - 1));
            let (fx, fy) = ((sx - x0 as f64) as f32, (sy - y0 as f64) as f32);
            for ch in 0..3 {
                let top = frame.get(y0, x0, ch) * (1.0 - fx) + frame.get(y0, x1, ch) * fx;
                let bottom = frame.get(y1, x0, ch) * (1.0 - fx) + frame.get(y1, x1, ch) * fx;
                out[(y * s + x) * 3 + ch] = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    FaceFrame::new(s, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_bit_exact() {
        let f = FaceFrame::new(8, (0..192).map(|i| (i as f32 * 0.37).fract()).collect()).unwrap();
        assert_eq!(augment(&f, &AugmentParams::IDENTITY).unwrap(), f);
    }

    #[test]
    fn translation_moves_pixel() {
        let mut f = FaceFrame::filled(64, [0.0; 3]);
        let i = (10 * 64 + 10) * 3;
        f.pixels[i..i + 3].copy_from_slice(&[1.0; 3]);
        let g = augment(&f, &AugmentParams { dx: 5.0, ..AugmentParams::IDENTITY }).unwrap();
        assert_eq!(g.get(10, 15, 0), 1.0);
        assert_eq!(g.pixels.iter().filter(|&&v| v != 0.0).count(), 3);
    }

    #[test]
    fn out_of_range_rejected() {
        let f = FaceFrame::filled(64, [0.5; 3]);
        for p in [
            AugmentParams { zoom: 2.0, ..AugmentParams::IDENTITY },
            AugmentParams { angle: 20.0, ..AugmentParams::IDENTITY },
            AugmentParams { dx: 7.0, ..AugmentParams::IDENTITY },
        ] {
            assert!(matches!(augment(&f, &p), Err(Error::ParamOutOfRange { .. })));
        }
    }
}
