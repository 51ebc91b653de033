use std::collections::BTreeMap;
use std::process::{Command, Stdio};

use image::RgbImage;

use crate::error::{Error, Result};

/// Facial landmark points in source-frame pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub points: Vec<(f32, f32)>,
    pub provider_id: String,
}

impl LandmarkSet {
    pub fn new(points: Vec<(f32, f32)>, provider_id: impl Into<String>) -> Self {
        LandmarkSet {
            points,
            provider_id: provider_id.into(),
        }
    }

    /// `(min_x, min_y, max_x, max_y)`; needs at least five points.
    pub fn bounds(&self) -> Result<(f64, f64, f64, f64)> {
        if self.points.len() < 5 {
            return Err(Error::NoFaceFound { frame: None });
        }
        let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.points {
            let (x, y) = (x as f64, y as f64);
            b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
        }
        Ok(b)
    }

    pub fn translated(&self, dx: f32, dy: f32) -> Self {
        LandmarkSet {
            points: self.points.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
            provider_id: self.provider_id.clone(),
        }
    }
}

/// A face landmark detector.
pub trait LandmarkProvider: Send + Sync {
    fn id(&self) -> &str;
    fn detect(&self, frame: &RgbImage) -> Result<LandmarkSet>;
}

/// Runs an external detector per frame.
///
/// The frame is written as PNG to a temporary file whose path replaces
/// `{input}` in the argument template; the process prints one `x y` pair per
/// line on stdout.
#[derive(Debug, Clone)]
pub struct CommandProvider {
    id: String,
    program: String,
    args: Vec<String>,
}

impl CommandProvider {
    pub fn new(id: impl Into<String>, program: impl Into<String>, args: Vec<String>) -> Self {
        CommandProvider {
            id: id.into(),
            program: program.into(),
            args,
        }
    }
}

/// Parses the `x y`-per-line point protocol; blank lines are ignored.
pub fn parse_points(text: &str) -> Result<Vec<(f32, f32)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let mut it = l.split_whitespace().map(str::parse::<f32>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) if x.is_finite() && y.is_finite() => Ok((x, y)),
                _ => Err(Error::Parse {
                    what: "landmark points",
                    line: i + 1,
                    reason: format!("expected `x y`, got {l:?}"),
                }),
            }
        })
        .collect()
}

impl LandmarkProvider for CommandProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn detect(&self, frame: &RgbImage) -> Result<LandmarkSet> {
        let tmp = tempfile::Builder::new().prefix("polydub-landmarks-").suffix(".png").tempfile()?;
        let path = tmp.path().to_path_buf();
        frame.save_with_format(&path, image::ImageFormat::Png)?;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| a.replace("{input}", &path.to_string_lossy()))
            .collect();
        let out = Command::new(&self.program)
            .args(&args)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| Error::io(&self.program, e))?;
        if !out.status.success() {
            return Err(Error::UnknownProvider(format!(
                "{} exited with {}: {}",
                self.id,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let points = parse_points(&String::from_utf8_lossy(&out.stdout))?;
        let (w, h) = (frame.width() as f32, frame.height() as f32);
        if points.len() < 5 || points.iter().any(|&(x, y)| x < 0.0 || y < 0.0 || x >= w || y >= h) {
            return Err(Error::NoFaceFound { frame: None });
        }
        Ok(LandmarkSet::new(points, self.id.clone()))
    }
}

/// Named landmark providers.
#[derive(Default)]
pub struct ProviderRegistry {
    providers: BTreeMap<String, Box<dyn LandmarkProvider>>,
}

impl ProviderRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the built-in provider for toy-rendered faces.
    pub fn with_builtin() -> Self {
        let mut r = Self::new();
        r.register(crate::toydata::SyntheticProvider);
        r
    }

    pub fn register(&mut self, provider: impl LandmarkProvider + 'static) {
        self.providers.insert(provider.id().to_string(), Box::new(provider));
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.providers.keys().map(String::as_str)
    }

    pub fn detect_landmarks(&self, frame: &RgbImage, provider: &str) -> Result<LandmarkSet> {
        self.providers
            .get(provider)
            .ok_or_else(|| Error::UnknownProvider(provider.to_string()))?
            .detect(frame)
    }
}

impl std::fmt::Debug for ProviderRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.providers.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_protocol() {
        assert_eq!(parse_points("1 2\n\n3.5 4\n").unwrap(), [(1.0, 2.0), (3.5, 4.0)]);
        assert!(parse_points("1 2 3").is_err());
        assert!(parse_points("a b").is_err());
    }

    #[test]
    fn unknown_provider() {
        let r = ProviderRegistry::new();
        let f = RgbImage::new(4, 4);
        assert!(matches!(r.detect_landmarks(&f, "nope"), Err(Error::UnknownProvider(_))));
    }

    #[test]
    fn too_few_points_have_no_bounds() {
        assert!(LandmarkSet::new(vec![(0.0, 0.0)], "x").bounds().is_err());
    }
}
