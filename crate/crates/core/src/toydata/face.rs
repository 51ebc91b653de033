use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{Waveform, FPS, SAMPLES_PER_FRAME};
use crate::error::{Error, Result};
use crate::facecrop::{LandmarkProvider, LandmarkSet};

/// Reserved colours; no other part of a rendered face uses them.
pub mod palette {
    pub const EYE: [u8; 3] = [10, 10, 200];
    pub const NOSE: [u8; 3] = [190, 90, 100];
    pub const MOUTH: [u8; 3] = [150, 20, 40];
}

pub const FRAME_WIDTH: u32 = 160;
pub const FRAME_HEIGHT: u32 = 160;
/// Mouth opening in pixels for silence.
pub const MOUTH_MIN: u32 = 2;
pub const MOUTH_MAX: u32 = 30;
/// Mouth pixels per unit of RMS amplitude.
pub const MOUTH_GAIN: f32 = 150.0;
const EYE_RADIUS: i64 = 4;

pub const SYNTHETIC_PROVIDER: &str = "synthetic";

/// Identity-dependent appearance of a rendered face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceStyle {
    pub cx: i64,
    pub cy: i64,
    pub rx: i64,
    pub ry: i64,
    pub skin: [u8; 3],
    pub hair: [u8; 3],
    pub background: [u8; 3],
    pub shirt: [u8; 3],
}

impl FaceStyle {
    pub fn from_seed(identity_seed: u64) -> Self {
        let mut r = ChaCha8Rng::seed_from_u64(identity_seed ^ 0x6661_6365);
        const SKINS: [[u8; 3]; 4] = [[224, 172, 140], [198, 140, 110], [240, 200, 170], [180, 122, 92]];
        const HAIRS: [[u8; 3]; 4] = [[40, 30, 20], [70, 50, 30], [20, 20, 20], [88, 60, 40]];
        FaceStyle {
            cx: 80 + r.gen_range(-4..=4),
            cy: 78 + r.gen_range(-3..=3),
            rx: r.gen_range(32..=36),
            ry: r.gen_range(42..=46),
            skin: SKINS[r.gen_range(0..SKINS.len())],
            hair: HAIRS[r.gen_range(0..HAIRS.len())],
            background: [r.gen_range(30..60), r.gen_range(70..140), r.gen_range(100..180)],
            shirt: [r.gen_range(20..90), r.gen_range(20..90), r.gen_range(20..90)],
        }
    }

    /// Centre of each eye.
    pub fn eyes(&self) -> [(i64, i64); 2] {
        let ex = (0.4 * self.rx as f64).round() as i64;
        let ey = self.cy - (0.25 * self.ry as f64).round() as i64;
        [(self.cx - ex, ey), (self.cx + ex, ey)]
    }

    pub fn nose(&self) -> (i64, i64) {
        (self.cx, self.cy + (0.1 * self.ry as f64).round() as i64)
    }

    /// Centre row and half-width of the mouth.
    pub fn mouth_anchor(&self) -> (i64, i64) {
        (self.cy + (0.5 * self.ry as f64).round() as i64, (0.38 * self.rx as f64).round() as i64)
    }

    /// Analytic landmarks for a mouth opening of `mouth_height` pixels.
    ///
    /// Order: eyes (2), nose, mouth corners (2), mouth top, mouth bottom,
    /// chin, jaw extremes (2).
    pub fn landmarks(&self, mouth_height: u32) -> LandmarkSet {
        let [le, re] = self.eyes();
        let nose = self.nose();
        let (mcy, mw) = self.mouth_anchor();
        let top = mcy - mouth_height as i64 / 2;
        let bottom = top + mouth_height as i64 - 1;
        let mid = (top + bottom) as f32 / 2.0;
        let p = |x: i64, y: i64| (x as f32, y as f32);
        LandmarkSet::new(
            vec![
                p(le.0, le.1),
                p(re.0, re.1),
                p(nose.0, nose.1),
                ((self.cx - mw) as f32, mid),
                ((self.cx + mw) as f32, mid),
                p(self.cx, top),
                p(self.cx, bottom),
                p(self.cx, self.cy + self.ry),
                p(self.cx - self.rx, self.cy),
                p(self.cx + self.rx, self.cy),
            ],
            SYNTHETIC_PROVIDER,
        )
    }

    pub fn render(&self, mouth_height: u32) -> RgbImage {
        let mut img = RgbImage::from_pixel(FRAME_WIDTH, FRAME_HEIGHT, Rgb(self.background));
        let (w, h) = (FRAME_WIDTH as i64, FRAME_HEIGHT as i64);
        let fill = |img: &mut RgbImage, inside: &dyn Fn(i64, i64) -> bool, c: [u8; 3]| {
            for y in 0..h {
                for x in 0..w {
                    if inside(x, y) {
                        img.put_pixel(x as u32, y as u32, Rgb(c));
                    }
                }
            }
        };
        let (cx, cy, rx, ry) = (self.cx, self.cy, self.rx, self.ry);
        let in_head = |x: i64, y: i64, grow: i64| {
            let (dx, dy) = ((x - cx) as f64 / (rx + grow) as f64, (y - cy) as f64 / (ry + grow) as f64);
            dx * dx + dy * dy <= 1.0
        };
        fill(&mut img, &|x, y| y >= cy + ry + 6 && (x - cx).abs() <= 50, self.shirt);
        fill(&mut img, &|x, y| in_head(x, y, 0), self.skin);
        let hair_line = cy - (0.45 * ry as f64).round() as i64;
        fill(&mut img, &|x, y| in_head(x, y, 4) && y < hair_line, self.hair);
        for (ex, ey) in self.eyes() {
            fill(
                &mut img,
                &|x, y| (x - ex).pow(2) + (y - ey).pow(2) <= EYE_RADIUS * EYE_RADIUS,
                palette::EYE,
            );
        }
        let (nx, ny) = self.nose();
        fill(&mut img, &|x, y| (x - nx).abs() <= 1 && (y - ny).abs() <= 1, palette::NOSE);
        let (mcy, mw) = self.mouth_anchor();
        let top = mcy - mouth_height as i64 / 2;
        fill(
            &mut img,
            &|x, y| (x - cx).abs() <= mw && y >= top && y < top + mouth_height as i64,
            palette::MOUTH,
        );
        img
    }
}

/// Mouth opening for a frame with the given RMS amplitude.
pub fn mouth_height(rms: f32) -> u32 {
    (MOUTH_MIN + (MOUTH_GAIN * rms).round() as u32).min(MOUTH_MAX)
}

/// Rendered frames with their analytic landmarks and mouth openings.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceClip {
    pub frames: Vec<RgbImage>,
    pub landmarks: Vec<LandmarkSet>,
    pub mouth_heights: Vec<u32>,
    pub fps: u32,
}

/// Draws one frame per 1/25 s of audio; the mouth opening follows the RMS of
/// the frame's audio samples.
pub fn render_face_clip(audio: &Waveform, identity_seed: u64) -> FaceClip {
    let style = FaceStyle::from_seed(identity_seed);
    let heights: Vec<u32> = audio.block_rms(SAMPLES_PER_FRAME).into_iter().map(mouth_height).collect();
    FaceClip {
        frames: heights.iter().map(|&h| style.render(h)).collect(),
        landmarks: heights.iter().map(|&h| style.landmarks(h)).collect(),
        mouth_heights: heights,
        fps: FPS,
    }
}

/// Recovers the analytic landmarks of a toy-rendered face from its pixels.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticProvider;

fn is_skin(p: [u8; 3]) -> bool {
    p[0] >= 140 && p[0] > p[1] && p[1] > p[2]
}

impl LandmarkProvider for SyntheticProvider {
    fn id(&self) -> &str {
        SYNTHETIC_PROVIDER
    }

    fn detect(&self, frame: &RgbImage) -> Result<LandmarkSet> {
        let mut eyes = Vec::new();
        let mut nose = Vec::new();
        let mut mouth = Vec::new();
        for (x, y, p) in frame.enumerate_pixels() {
            let (x, y) = (x as i64, y as i64);
            match p.0 {
                palette::EYE => eyes.push((x, y)),
                palette::NOSE => nose.push((x, y)),
                palette::MOUTH => mouth.push((x, y)),
                _ => {}
            }
        }
        if eyes.is_empty() || nose.is_empty() || mouth.is_empty() {
            return Err(Error::NoFaceFound { frame: None });
        }
        let centroid = |pts: &[(i64, i64)]| {
            let n = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, &(x, y)| (a.0 + x as f64, a.1 + y as f64));
            ((sx / n) as f32, (sy / n) as f32)
        };
        let split = eyes.iter().map(|p| p.0 as f64).sum::<f64>() / eyes.len() as f64;
        let (left, right): (Vec<_>, Vec<_>) = eyes.iter().partition(|p| (p.0 as f64) < split);
        if left.is_empty() || right.is_empty() {
            return Err(Error::NoFaceFound { frame: None });
        }
        let (le, re) = (centroid(&left), centroid(&right));
        let cx = ((le.0 + re.0) / 2.0).round() as u32;
        let (mx0, mx1) = mouth.iter().fold((i64::MAX, i64::MIN), |a, p| (a.0.min(p.0), a.1.max(p.0)));
        let (my0, my1) = mouth.iter().fold((i64::MAX, i64::MIN), |a, p| (a.0.min(p.1), a.1.max(p.1)));
        let mid = (my0 + my1) as f32 / 2.0;
        let chin = (0..frame.height())
            .rev()
            .find(|&y| is_skin(frame.get_pixel(cx, y).0))
            .ok_or(Error::NoFaceFound { frame: None })?;
        let skin: Vec<(u32, u32)> = frame
            .enumerate_pixels()
            .filter(|(_, _, p)| is_skin(p.0))
            .map(|(x, y, _)| (x, y))
            .collect();
        let jl = skin.iter().min_by_key(|p| p.0).ok_or(Error::NoFaceFound { frame: None })?;
        let jr = skin.iter().max_by_key(|p| p.0).ok_or(Error::NoFaceFound { frame: None })?;
        let f = |x: u32, y: u32| (x as f32, y as f32);
        Ok(LandmarkSet::new(
            vec![
                le,
                re,
                centroid(&nose),
                (mx0 as f32, mid),
                (mx1 as f32, mid),
                (cx as f32, my0 as f32),
                (cx as f32, my1 as f32),
                f(cx, chin),
                f(jl.0, jl.1),
                f(jr.0, jr.1),
            ],
            SYNTHETIC_PROVIDER,
        ))
    }
}
