use candle_core::Tensor;

use crate::error::Result;
use crate::nn::{leaky_relu, Conv2d, Params};

/// Patch discriminator: two strided convolutions and a score head.
struct PatchDisc {
    convs: [Conv2d; 3],
}

impl PatchDisc {
    fn new(p: &Params, c: usize) -> Result<Self> {
        Ok(PatchDisc {
            convs: [
                Conv2d::new(&p.pp("conv0"), 3, c, 4, 2, 1)?,
                Conv2d::new(&p.pp("conv1"), c, 2 * c, 4, 2, 1)?,
                Conv2d::new(&p.pp("head"), 2 * c, 1, 3, 1, 1)?,
            ],
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let x = leaky_relu(&self.convs[0].forward(x)?, 0.2)?;
        let x = leaky_relu(&self.convs[1].forward(&x)?, 0.2)?;
        self.convs[2].forward(&x)
    }
}

/// 2×2 average pooling.
pub fn downsample(x: &Tensor) -> Result<Tensor> {
    let (n, c, h, w) = x.dims4()?;
    Ok(x.reshape((n, c, h / 2, 2, w / 2, 2))?.mean(5)?.mean(3)?)
}

/// Patch discriminators applied to the input and to successively
/// average-pooled copies of it.
pub struct MultiScaleDisc {
    discs: Vec<PatchDisc>,
}

impl MultiScaleDisc {
    pub(crate) fn new(p: &Params, scales: usize, c: usize) -> Result<Self> {
        Ok(MultiScaleDisc {
            discs: (0..scales).map(|i| PatchDisc::new(&p.pp(format!("scale{i}")), c)).collect::<Result<_>>()?,
        })
    }

    /// One `(N, 1, h, w)` score map per scale, finest first.
    pub fn forward(&self, frames: &Tensor) -> Result<Vec<Tensor>> {
        let mut x = frames.clone();
        let mut out = Vec::with_capacity(self.discs.len());
        for (i, d) in self.discs.iter().enumerate() {
            if i > 0 {
                x = downsample(&x)?;
            }
            out.push(d.forward(&x)?);
        }
        Ok(out)
    }
}

/// Hinge loss of the discriminator, summed over scales.
pub fn hinge_disc_loss(real: &[Tensor], fake: &[Tensor]) -> Result<Tensor> {
    let mut total: Option<Tensor> = None;
    for (r, f) in real.iter().zip(fake) {
        let l = ((1.0 - r)?.relu()?.mean_all()? + (f + 1.0)?.relu()?.mean_all()?)?;
        total = Some(match total {
            Some(t) => (t + l)?,
            None => l,
        });
    }
    Ok(total.expect("at least one discriminator scale"))
}

/// Generator hinge loss: negated mean fake score, summed over scales.
pub fn hinge_gen_loss(fake: &[Tensor]) -> Result<Tensor> {
    let mut total: Option<Tensor> = None;
    for f in fake {
        let l = f.mean_all()?.neg()?;
        total = Some(match total {
            Some(t) => (t + l)?,
            None => l,
        });
    }
    Ok(total.expect("at least one discriminator scale"))
}
