//! Landmark-driven face cropping and paste-back.

mod frame;
mod geometry;
mod landmarks;
mod resample;

pub use frame::{to_u8, FaceFrame};
pub use geometry::{clamp_region, expand_region, CropGeometry, GeometrySmoother, MarginParams};
pub use landmarks::{parse_points, CommandProvider, LandmarkProvider, LandmarkSet, ProviderRegistry};
pub use resample::{crop, paste_back};
