//! Neural-network building blocks shared by the TTS, sync-expert and face models.

pub mod conv;
mod grad_reverse;
mod layers;
mod params;

pub use grad_reverse::grad_reverse;
pub use layers::{cross_entropy, leaky_relu, ChannelNorm, Conv1d, Conv2d, ConvTranspose1d, ConvTranspose2d, Embedding, Linear};
pub use params::Params;

use candle_core::Tensor;

use crate::error::Result;

/// Reads a scalar tensor as `f64` regardless of its float dtype.
pub fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?)
}

pub fn to_f32_vec(t: &Tensor) -> Result<Vec<f32>> {
    Ok(t.flatten_all()?.to_dtype(candle_core::DType::F32)?.to_vec1::<f32>()?)
}
