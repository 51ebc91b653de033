use candle_core::{CpuStorage, CustomOp1, Layout, Shape, Tensor};

use crate::error::{Error, Result};

/// Identity forward, `-λ·g` backward.
#[derive(Debug, Clone, Copy)]
struct GradReverse {
    lambda: f64,
}

impl CustomOp1 for GradReverse {
    fn name(&self) -> &'static str {
        "grad-reverse"
    }

    fn cpu_fwd(&self, storage: &CpuStorage, layout: &Layout) -> candle_core::Result<(CpuStorage, Shape)> {
        let (start, end) = layout
            .contiguous_offsets()
            .ok_or_else(|| candle_core::Error::Msg("grad-reverse expects a contiguous tensor".into()))?;
        let out = match storage {
            CpuStorage::F32(v) => CpuStorage::F32(v[start..end].to_vec()),
            CpuStorage::F64(v) => CpuStorage::F64(v[start..end].to_vec()),
            _ => return Err(candle_core::Error::Msg("grad-reverse: unsupported dtype".into())),
        };
        Ok((out, layout.shape().clone()))
    }

    fn bwd(&self, _arg: &Tensor, _res: &Tensor, grad_res: &Tensor) -> candle_core::Result<Option<Tensor>> {
        Ok(Some(grad_res.affine(-self.lambda, 0.0)?))
    }
}

/// Gradient reversal layer.
///
/// The forward pass returns `x` unchanged; during backpropagation the incoming
/// gradient is multiplied by `-lambda`. Placed between a feature extractor and
/// a classifier, it trains the classifier to predict the label while pushing
/// the features to hide it.
pub fn grad_reverse(x: &Tensor, lambda: f64) -> Result<Tensor> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "lambda",
            value: lambda,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(x.contiguous()?.apply_op1(GradReverse { lambda })?)
}
