use image::{Rgb, RgbImage};

use super::frame::to_u8;
use super::{CropGeometry, FaceFrame};
use crate::error::{Error, Result};

fn check_region(frame: &RgbImage, geo: &CropGeometry) -> Result<()> {
    if geo.within(frame.width(), frame.height()) {
        Ok(())
    } else {
        Err(Error::GeometryMismatch(format!(
            "region ({}, {}) side {} outside {}x{} frame",
            geo.x0,
            geo.y0,
            geo.side,
            frame.width(),
            frame.height()
        )))
    }
}

/// Source coordinate of destination pixel `i` when mapping `from` pixels onto `to`.
fn source_coord(i: usize, from: usize, to: usize) -> f32 {
    ((i as f32 + 0.5) * from as f32 / to as f32 - 0.5).clamp(0.0, (from - 1) as f32)
}

fn bilinear(get: impl Fn(usize, usize) -> [f32; 3], w: usize, h: usize, x: f32, y: f32) -> [f32; 3] {
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f32, y - y0 as f32);
    let (a, b, c, d) = (get(x0, y0), get(x1, y0), get(x0, y1), get(x1, y1));
    std::array::from_fn(|k| {
        let top = a[k] * (1.0 - fx) + b[k] * fx;
        let bottom = c[k] * (1.0 - fx) + d[k] * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Bilinear resample of the region to `size`×`size`; a pure copy when `side == size`.
pub fn crop(frame: &RgbImage, geo: &CropGeometry, size: usize) -> Result<FaceFrame> {
    check_region(frame, geo)?;
    let side = geo.side as usize;
    let (ox, oy) = (geo.x0 as u32, geo.y0 as u32);
    let px = |x: usize, y: usize| -> [f32; 3] {
        let p = frame.get_pixel(ox + x as u32, oy + y as u32).0;
        [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0]
    };
    let mut pixels = Vec::with_capacity(size * size * 3);
    for i in 0..size {
        for j in 0..size {
            let v = if side == size {
                px(j, i)
            } else {
                bilinear(px, side, side, source_coord(j, side, size), source_coord(i, side, size))
            };
            pixels.extend_from_slice(&v);
        }
    }
    FaceFrame::new(size, pixels)
}

/// Writes `face` back into the region of `frame`.
///
/// Pixels within `blend_margin` of the region border are mixed with the
/// source, with face weight `d / blend_margin` at distance `d` from the
/// border. Pixels outside the region are never touched.
pub fn paste_back(frame: &RgbImage, face: &FaceFrame, geo: &CropGeometry, blend_margin: u32) -> Result<RgbImage> {
    check_region(frame, geo)?;
    if face.size == 0 {
        return Err(Error::GeometryMismatch("empty face".into()));
    }
    let side = geo.side as usize;
    let s = face.size;
    let fp = |x: usize, y: usize| -> [f32; 3] { std::array::from_fn(|k| face.get(y, x, k)) };
    let mut out = frame.clone();
    for v in 0..side {
        for u in 0..side {
            let f = if side == s {
                fp(u, v)
            } else {
                bilinear(fp, s, s, source_coord(u, s, side), source_coord(v, s, side))
            };
            let (x, y) = (geo.x0 as u32 + u as u32, geo.y0 as u32 + v as u32);
            let px = if blend_margin == 0 {
                Rgb(f.map(to_u8))
            } else {
                let d = u.min(v).min(side - 1 - u).min(side - 1 - v) as f32;
                let alpha = (d / blend_margin as f32).min(1.0);
                let src = frame.get_pixel(x, y).0;
                Rgb(std::array::from_fn(|k| {
                    to_u8(alpha * f[k] + (1.0 - alpha) * src[k] as f32 / 255.0)
                }))
            };
            out.put_pixel(x, y, px);
        }
    }
    Ok(out)
}
