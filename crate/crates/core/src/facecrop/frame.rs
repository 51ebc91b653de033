use candle_core::{Device, Tensor};
use image::RgbImage;

use crate::error::{Error, Result};

/// Square RGB face image with values in [0, 1], stored row-major HWC.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFrame {
    pub size: usize,
    pub pixels: Vec<f32>,
}

impl FaceFrame {
    pub fn new(size: usize, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != size * size * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {size}x{size}x3 face",
                pixels.len()
            )));
        }
        Ok(FaceFrame { size, pixels })
    }

    pub fn filled(size: usize, rgb: [f32; 3]) -> Self {
        FaceFrame {
            size,
            pixels: rgb.iter().copied().cycle().take(size * size * 3).collect(),
        }
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.pixels[(y * self.size + x) * 3 + c]
    }

    pub fn from_image(img: &RgbImage) -> Result<Self> {
        if img.width() != img.height() {
            return Err(Error::ShapeMismatch(format!("{}x{} image is not square", img.width(), img.height())));
        }
        Ok(FaceFrame {
            size: img.width() as usize,
            pixels: img.as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        })
    }

    pub fn to_image(&self) -> RgbImage {
        let raw = self.pixels.iter().map(|&v| to_u8(v)).collect();
        RgbImage::from_raw(self.size as u32, self.size as u32, raw).expect("buffer matches dimensions")
    }

    /// `(3, S, S)` f32 tensor.
    pub fn to_tensor(&self) -> Result<Tensor> {
        let s = self.size;
        Ok(Tensor::from_slice(&self.pixels, (s, s, 3), &Device::Cpu)?
            .permute((2, 0, 1))?
            .contiguous()?)
    }

    /// Inverse of [`FaceFrame::to_tensor`].
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let (c, h, w) = t.dims3()?;
        if c != 3 || h != w {
            return Err(Error::ShapeMismatch(format!("face tensor of shape ({c}, {h}, {w})")));
        }
        let pixels = t
            .to_dtype(candle_core::DType::F32)?
            .permute((1, 2, 0))?
            .flatten_all()?
            .to_vec1::<f32>()?;
        FaceFrame::new(h, pixels)
    }

    /// Copy with rows `size/2..size` set to zero.
    pub fn lower_half_masked(&self) -> Self {
        let mut out = self.clone();
        let start = self.size / 2 * self.size * 3;
        out.pixels[start..].iter_mut().for_each(|v| *v = 0.0);
        out
    }

    /// Rows `size/2..size` as a `(size/2) x size` RGB buffer.
    pub fn lower_half(&self) -> Vec<f32> {
        self.pixels[self.size / 2 * self.size * 3..].to_vec()
    }
}

pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip_is_exact() {
        let img = RgbImage::from_fn(8, 8, |x, y| image::Rgb([(x * 30) as u8, (y * 31) as u8, (x * y) as u8]));
        assert_eq!(FaceFrame::from_image(&img).unwrap().to_image(), img);
    }

    #[test]
    fn tensor_round_trip() {
        let f = FaceFrame::new(2, (0..12).map(|v| v as f32 / 12.0).collect()).unwrap();
        let t = f.to_tensor().unwrap();
        assert_eq!(t.dims3().unwrap(), (3, 2, 2));
        assert_eq!(FaceFrame::from_tensor(&t).unwrap(), f);
    }

    #[test]
    fn mask_zeroes_exactly_the_lower_half() {
        let f = FaceFrame::filled(4, [1.0, 1.0, 1.0]).lower_half_masked();
        for y in 0..4 {
            assert_eq!(f.get(y, 1, 0), if y < 2 { 1.0 } else { 0.0 });
        }
    }
}
