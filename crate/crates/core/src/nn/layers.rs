use candle_core::{Tensor, D};

use super::conv;
use super::params::Params;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Linear {
    weight: Tensor,
    bias: Option<Tensor>,
}

impl Linear {
    pub fn new(p: &Params, in_dim: usize, out_dim: usize) -> Result<Self> {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Ok(Linear {
            weight: p.uniform("weight", (out_dim, in_dim), bound)?,
            bias: Some(p.uniform("bias", out_dim, bound)?),
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let w = self.weight.t()?;
        let y = match x.rank() {
            2 => x.matmul(&w)?,
            _ => x.broadcast_matmul(&w)?,
        };
        Ok(match &self.bias {
            Some(b) => y.broadcast_add(b)?,
            None => y,
        })
    }
}

/// 2-d convolution with bias; kernels run through [`conv::conv2d`].
#[derive(Debug, Clone)]
pub struct Conv2d {
    weight: Tensor,
    bias: Tensor,
    stride: (usize, usize),
    pad: (usize, usize),
}

impl Conv2d {
    pub fn new(p: &Params, c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        Self::rect(p, c_in, c_out, (k, k), (stride, stride), (pad, pad))
    }

    pub fn rect(
        p: &Params,
        c_in: usize,
        c_out: usize,
        k: (usize, usize),
        stride: (usize, usize),
        pad: (usize, usize),
    ) -> Result<Self> {
        let bound = 1.0 / ((c_in * k.0 * k.1) as f64).sqrt();
        Ok(Conv2d {
            weight: p.uniform("weight", (c_out, c_in, k.0, k.1), bound)?,
            bias: p.uniform("bias", c_out, bound)?,
            stride,
            pad,
        })
    }

    /// He-normal weights for a ReLU that follows, zero bias.
    pub fn he(p: &Params, c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        let std = (2.0 / (c_in * k * k) as f64).sqrt();
        Ok(Conv2d {
            weight: p.normal("weight", (c_out, c_in, k, k), std)?,
            bias: p.constant("bias", c_out, 0.0)?,
            stride: (stride, stride),
            pad: (pad, pad),
        })
    }

    /// Zero-initialised weights and bias.
    pub fn zeros_rect(
        p: &Params,
        c_in: usize,
        c_out: usize,
        k: (usize, usize),
        stride: (usize, usize),
        pad: (usize, usize),
    ) -> Result<Self> {
        Ok(Conv2d {
            weight: p.constant("weight", (c_out, c_in, k.0, k.1), 0.0)?,
            bias: p.constant("bias", c_out, 0.0)?,
            stride,
            pad,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = conv::conv2d(x, &self.weight, self.stride, self.pad)?;
        Ok(y.broadcast_add(&self.bias.reshape((1, (), 1, 1))?)?)
    }
}

#[derive(Debug, Clone)]
pub struct ConvTranspose2d {
    weight: Tensor,
    bias: Tensor,
    stride: usize,
    pad: usize,
}

impl ConvTranspose2d {
    pub fn new(p: &Params, c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        let bound = 1.0 / ((c_out * k * k) as f64).sqrt();
        Ok(ConvTranspose2d {
            weight: p.uniform("weight", (c_in, c_out, k, k), bound)?,
            bias: p.uniform("bias", c_out, bound)?,
            stride,
            pad,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = conv::conv_transpose2d(x, &self.weight, (self.stride, self.stride), (self.pad, self.pad), (0, 0))?;
        Ok(y.broadcast_add(&self.bias.reshape((1, (), 1, 1))?)?)
    }
}

/// 1-d convolution over `(N, C, T)` with "same"-style symmetric padding.
#[derive(Debug, Clone)]
pub struct Conv1d {
    inner: Conv2d,
}

impl Conv1d {
    pub fn new(p: &Params, c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        Ok(Conv1d {
            inner: Conv2d::rect(p, c_in, c_out, (1, k), (1, stride), (0, pad))?,
        })
    }

    pub fn zeros(p: &Params, c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        Ok(Conv1d {
            inner: Conv2d::zeros_rect(p, c_in, c_out, (1, k), (1, stride), (0, pad))?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.inner.forward(&x.unsqueeze(2)?)?.squeeze(2)?)
    }
}

#[derive(Debug, Clone)]
pub struct ConvTranspose1d {
    weight: Tensor,
    bias: Tensor,
    stride: usize,
    pad: usize,
}

impl ConvTranspose1d {
    pub fn new(p: &Params, c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        let bound = 1.0 / ((c_out * k) as f64).sqrt();
        Ok(ConvTranspose1d {
            weight: p.uniform("weight", (c_in, c_out, 1, k), bound)?,
            bias: p.uniform("bias", c_out, bound)?,
            stride,
            pad,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = conv::conv_transpose2d(&x.unsqueeze(2)?, &self.weight, (1, self.stride), (0, self.pad), (0, 0))?;
        Ok(y.squeeze(2)?.broadcast_add(&self.bias.reshape((1, (), 1))?)?)
    }
}

/// Layer norm over the channel axis of a `(N, C, T)` tensor.
#[derive(Debug, Clone)]
pub struct ChannelNorm {
    gamma: Tensor,
    beta: Tensor,
}

impl ChannelNorm {
    pub fn new(p: &Params, channels: usize) -> Result<Self> {
        Ok(ChannelNorm {
            gamma: p.constant("gamma", channels, 1.0)?,
            beta: p.constant("beta", channels, 0.0)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(1)?;
        let xc = x.broadcast_sub(&mean)?;
        let var = xc.sqr()?.mean_keepdim(1)?;
        let y = xc.broadcast_div(&(var + 1e-5)?.sqrt()?)?;
        Ok(y
            .broadcast_mul(&self.gamma.reshape((1, (), 1))?)?
            .broadcast_add(&self.beta.reshape((1, (), 1))?)?)
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    table: Tensor,
}

impl Embedding {
    pub fn new(p: &Params, n: usize, dim: usize, std: f64) -> Result<Self> {
        Ok(Embedding {
            table: p.normal("weight", (n, dim), std)?,
        })
    }

    pub fn table(&self) -> &Tensor {
        &self.table
    }

    /// `ids: (N, T)` u32 → `(N, T, dim)`
    pub fn forward(&self, ids: &Tensor) -> Result<Tensor> {
        let (n, t) = ids.dims2()?;
        let flat = self.table.index_select(&ids.flatten_all()?, 0)?;
        Ok(flat.reshape((n, t, ()))?)
    }

    pub fn row(&self, i: usize) -> Result<Tensor> {
        Ok(self.table.get(i)?)
    }
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    Ok(x.maximum(&(x * slope)?)?)
}

/// Softmax cross-entropy averaged over the batch; `targets` are u32 class ids.
pub fn cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    let logp = candle_nn::ops::log_softmax(logits, D::Minus1)?;
    let picked = logp.gather(&targets.unsqueeze(1)?, 1)?;
    Ok(picked.neg()?.mean_all()?)
}
