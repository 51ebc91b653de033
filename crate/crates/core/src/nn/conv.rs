//! Convolution kernels backed by an im2col + GEMM formulation.
//!
//! Both the forward and the backward passes lower to `matrixmultiply`, which
//! keeps small-batch training on a single CPU core tractable. The ops plug
//! into candle's autograd as custom ops, so gradients flow through them like
//! any built-in operation.

use candle_core::{CpuStorage, CustomOp2, DType, Layout, Shape, Tensor};

use crate::error::{Error, Result};

/// Element types the kernels run on.
pub trait Element: Copy + Default + Send + Sync + 'static + std::ops::AddAssign {
    const ZERO: Self;
    const ONE: Self;
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
    );
}

impl Element for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[f32],
        rsa: isize,
        csa: isize,
        b: &[f32],
        rsb: isize,
        csb: isize,
        beta: f32,
        c: &mut [f32],
    ) {
        assert!(c.len() >= m * n);
        // SAFETY: strides describe views inside `a`, `b` and `c` (checked by callers' shapes).
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                rsa,
                csa,
                b.as_ptr(),
                rsb,
                csb,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            )
        }
    }
}

impl Element for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[f64],
        rsa: isize,
        csa: isize,
        b: &[f64],
        rsb: isize,
        csb: isize,
        beta: f64,
        c: &mut [f64],
    ) {
        assert!(c.len() >= m * n);
        // SAFETY: see the f32 impl.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                rsa,
                csa,
                b.as_ptr(),
                rsb,
                csb,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            )
        }
    }
}

/// Geometry of a forward convolution mapping `(c_in, h, w)` to `(c_out, oh, ow)`.
///
/// A transposed convolution uses the same geometry read backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
    pub kh: usize,
    pub kw: usize,
    pub sh: usize,
    pub sw: usize,
    pub ph: usize,
    pub pw: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvGeom {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c_in: usize,
        h: usize,
        w: usize,
        c_out: usize,
        (kh, kw): (usize, usize),
        (sh, sw): (usize, usize),
        (ph, pw): (usize, usize),
    ) -> Result<Self> {
        if h + 2 * ph < kh || w + 2 * pw < kw || sh == 0 || sw == 0 {
            return Err(Error::ShapeMismatch(format!(
                "kernel {kh}x{kw} does not fit input {h}x{w} with padding {ph}x{pw}"
            )));
        }
        let oh = (h + 2 * ph - kh) / sh + 1;
        let ow = (w + 2 * pw - kw) / sw + 1;
        Ok(ConvGeom {
            c_in,
            h,
            w,
            c_out,
            kh,
            kw,
            sh,
            sw,
            ph,
            pw,
            oh,
            ow,
        })
    }

    fn col_rows(&self) -> usize {
        self.c_in * self.kh * self.kw
    }

    fn col_cols(&self) -> usize {
        self.oh * self.ow
    }

    /// Valid output-column range for kernel column `kj`.
    fn ow_range(&self, kj: usize) -> (usize, usize) {
        // need 0 <= oj*sw + kj - pw < w
        let lo = if kj >= self.pw {
            0
        } else {
            (self.pw - kj).div_ceil(self.sw)
        };
        let hi = if self.w + self.pw > kj {
            ((self.w + self.pw - kj - 1) / self.sw + 1).min(self.ow)
        } else {
            0
        };
        (lo.min(hi), hi)
    }
}

fn im2col<T: Element>(g: &ConvGeom, x: &[T], cols: &mut [T]) {
    let ncol = g.col_cols();
    for c in 0..g.c_in {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let dst = &mut cols[row * ncol..(row + 1) * ncol];
                let (lo, hi) = g.ow_range(kj);
                for oi in 0..g.oh {
                    let seg = &mut dst[oi * g.ow..(oi + 1) * g.ow];
                    let ii = (oi * g.sh + ki) as isize - g.ph as isize;
                    if ii < 0 || ii >= g.h as isize {
                        seg.fill(T::ZERO);
                        continue;
                    }
                    let src = &plane[ii as usize * g.w..(ii as usize + 1) * g.w];
                    seg[..lo].fill(T::ZERO);
                    seg[hi..].fill(T::ZERO);
                    if g.sw == 1 {
                        let start = lo + kj - g.pw;
                        seg[lo..hi].copy_from_slice(&src[start..start + (hi - lo)]);
                    } else {
                        for (oj, v) in seg.iter_mut().enumerate().take(hi).skip(lo) {
                            *v = src[oj * g.sw + kj - g.pw];
                        }
                    }
                }
            }
        }
    }
}

fn col2im<T: Element>(g: &ConvGeom, cols: &[T], x: &mut [T]) {
    let ncol = g.col_cols();
    for c in 0..g.c_in {
        let plane = &mut x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let src = &cols[row * ncol..(row + 1) * ncol];
                let (lo, hi) = g.ow_range(kj);
                for oi in 0..g.oh {
                    let ii = (oi * g.sh + ki) as isize - g.ph as isize;
                    if ii < 0 || ii >= g.h as isize {
                        continue;
                    }
                    let seg = &src[oi * g.ow..(oi + 1) * g.ow];
                    let dst = &mut plane[ii as usize * g.w..(ii as usize + 1) * g.w];
                    for oj in lo..hi {
                        dst[oj * g.sw + kj - g.pw] += seg[oj];
                    }
                }
            }
        }
    }
}

/// `y[n] = W · im2col(x[n])`, W is `(c_out, c_in*kh*kw)`.
pub fn conv_forward<T: Element>(g: &ConvGeom, batch: usize, x: &[T], w: &[T]) -> Vec<T> {
    let (rows, ncol) = (g.col_rows(), g.col_cols());
    let mut cols = vec![T::ZERO; rows * ncol];
    let mut y = vec![T::ZERO; batch * g.c_out * ncol];
    let in_sz = g.c_in * g.h * g.w;
    for n in 0..batch {
        im2col(g, &x[n * in_sz..(n + 1) * in_sz], &mut cols);
        let out = &mut y[n * g.c_out * ncol..(n + 1) * g.c_out * ncol];
        T::gemm(g.c_out, rows, ncol, w, rows as isize, 1, &cols, ncol as isize, 1, T::ZERO, out);
    }
    y
}

/// Adjoint of [`conv_forward`] in its input: `dx[n] = col2im(Wᵀ · dy[n])`.
pub fn conv_input_grad<T: Element>(g: &ConvGeom, batch: usize, dy: &[T], w: &[T]) -> Vec<T> {
    let (rows, ncol) = (g.col_rows(), g.col_cols());
    let mut cols = vec![T::ZERO; rows * ncol];
    let in_sz = g.c_in * g.h * g.w;
    let mut dx = vec![T::ZERO; batch * in_sz];
    for n in 0..batch {
        let dyn_ = &dy[n * g.c_out * ncol..(n + 1) * g.c_out * ncol];
        // Wᵀ is (rows, c_out): row stride 1, column stride rows
        T::gemm(rows, g.c_out, ncol, w, 1, rows as isize, dyn_, ncol as isize, 1, T::ZERO, &mut cols);
        col2im(g, &cols, &mut dx[n * in_sz..(n + 1) * in_sz]);
    }
    dx
}

/// Gradient of [`conv_forward`] in its weight: `dW = Σₙ dy[n] · im2col(x[n])ᵀ`.
pub fn conv_weight_grad<T: Element>(g: &ConvGeom, batch: usize, x: &[T], dy: &[T]) -> Vec<T> {
    let (rows, ncol) = (g.col_rows(), g.col_cols());
    let mut cols = vec![T::ZERO; rows * ncol];
    let mut dw = vec![T::ZERO; g.c_out * rows];
    let in_sz = g.c_in * g.h * g.w;
    for n in 0..batch {
        im2col(g, &x[n * in_sz..(n + 1) * in_sz], &mut cols);
        let dyn_ = &dy[n * g.c_out * ncol..(n + 1) * g.c_out * ncol];
        let beta = if n == 0 { T::ZERO } else { T::ONE };
        T::gemm(g.c_out, ncol, rows, dyn_, ncol as isize, 1, &cols, 1, ncol as isize, beta, &mut dw);
    }
    dw
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// input `(N, C_in, H, W)`, weight `(C_out, C_in, KH, KW)`
    Conv,
    /// input `(N, C_in, H, W)`, weight `(C_in, C_out, KH, KW)`
    Transposed { out_pad: (usize, usize) },
}

#[derive(Debug, Clone, Copy)]
struct ConvOp {
    kind: Kind,
    stride: (usize, usize),
    pad: (usize, usize),
}

impl ConvOp {
    /// Returns the batch size and the forward-conv geometry for an input/weight pair.
    fn geometry(&self, x: &Shape, w: &Shape) -> candle_core::Result<(usize, ConvGeom)> {
        let (n, c, h, wd) = x.dims4()?;
        let (w0, w1, kh, kw) = w.dims4()?;
        let err = |e: Error| candle_core::Error::Msg(e.to_string());
        match self.kind {
            Kind::Conv => {
                if w1 != c {
                    return Err(candle_core::Error::Msg(format!(
                        "conv2d: input has {c} channels, weight expects {w1}"
                    )));
                }
                Ok((n, ConvGeom::new(c, h, wd, w0, (kh, kw), self.stride, self.pad).map_err(err)?))
            }
            Kind::Transposed { out_pad } => {
                if w0 != c {
                    return Err(candle_core::Error::Msg(format!(
                        "conv_transpose2d: input has {c} channels, weight expects {w0}"
                    )));
                }
                let oh = (h - 1) * self.stride.0 + kh + out_pad.0;
                let ow = (wd - 1) * self.stride.1 + kw + out_pad.1;
                if oh < 2 * self.pad.0 + 1 || ow < 2 * self.pad.1 + 1 {
                    return Err(candle_core::Error::Msg("conv_transpose2d: padding too large".into()));
                }
                let (oh, ow) = (oh - 2 * self.pad.0, ow - 2 * self.pad.1);
                // forward conv maps the (large) transposed output back to the input
                let g = ConvGeom::new(w1, oh, ow, c, (kh, kw), self.stride, self.pad).map_err(err)?;
                if g.oh != h || g.ow != wd {
                    return Err(candle_core::Error::Msg("conv_transpose2d: inconsistent geometry".into()));
                }
                Ok((n, g))
            }
        }
    }

    fn run<T: Element>(&self, x: &[T], xs: &Shape, w: &[T], ws: &Shape) -> candle_core::Result<(Vec<T>, Shape)> {
        let (n, g) = self.geometry(xs, ws)?;
        Ok(match self.kind {
            Kind::Conv => (conv_forward(&g, n, x, w), Shape::from((n, g.c_out, g.oh, g.ow))),
            Kind::Transposed { .. } => (conv_input_grad(&g, n, x, w), Shape::from((n, g.c_in, g.h, g.w))),
        })
    }
}

fn contiguous_slice<'a, T>(data: &'a [T], l: &Layout) -> candle_core::Result<&'a [T]> {
    match l.contiguous_offsets() {
        Some((a, b)) => Ok(&data[a..b]),
        None => Err(candle_core::Error::Msg("conv op expects contiguous tensors".into())),
    }
}

impl CustomOp2 for ConvOp {
    fn name(&self) -> &'static str {
        match self.kind {
            Kind::Conv => "im2col-conv2d",
            Kind::Transposed { .. } => "im2col-conv-transpose2d",
        }
    }

    fn cpu_fwd(
        &self,
        s1: &CpuStorage,
        l1: &Layout,
        s2: &CpuStorage,
        l2: &Layout,
    ) -> candle_core::Result<(CpuStorage, Shape)> {
        match (s1, s2) {
            (CpuStorage::F32(x), CpuStorage::F32(w)) => {
                let (y, s) = self.run(contiguous_slice(x, l1)?, l1.shape(), contiguous_slice(w, l2)?, l2.shape())?;
                Ok((CpuStorage::F32(y), s))
            }
            (CpuStorage::F64(x), CpuStorage::F64(w)) => {
                let (y, s) = self.run(contiguous_slice(x, l1)?, l1.shape(), contiguous_slice(w, l2)?, l2.shape())?;
                Ok((CpuStorage::F64(y), s))
            }
            _ => Err(candle_core::Error::Msg("conv op supports f32/f64 with matching dtypes".into())),
        }
    }

    fn bwd(
        &self,
        x: &Tensor,
        w: &Tensor,
        _res: &Tensor,
        dy: &Tensor,
    ) -> candle_core::Result<(Option<Tensor>, Option<Tensor>)> {
        let (n, g) = self.geometry(x.shape(), w.shape())?;
        let dev = x.device();
        macro_rules! grads {
            ($t:ty) => {{
                let xv = x.flatten_all()?.to_vec1::<$t>()?;
                let wv = w.flatten_all()?.to_vec1::<$t>()?;
                let dyv = dy.contiguous()?.flatten_all()?.to_vec1::<$t>()?;
                match self.kind {
                    Kind::Conv => {
                        let dx = conv_input_grad(&g, n, &dyv, &wv);
                        let dw = conv_weight_grad(&g, n, &xv, &dyv);
                        (Tensor::from_vec(dx, x.shape(), dev)?, Tensor::from_vec(dw, w.shape(), dev)?)
                    }
                    Kind::Transposed { .. } => {
                        // the transposed op's input is the forward conv's output
                        let dx = conv_forward(&g, n, &dyv, &wv);
                        let dw = conv_weight_grad(&g, n, &dyv, &xv);
                        (Tensor::from_vec(dx, x.shape(), dev)?, Tensor::from_vec(dw, w.shape(), dev)?)
                    }
                }
            }};
        }
        let (dx, dw) = match x.dtype() {
            DType::F32 => grads!(f32),
            DType::F64 => grads!(f64),
            dt => return Err(candle_core::Error::Msg(format!("conv op: unsupported dtype {dt:?}"))),
        };
        Ok((Some(dx), Some(dw)))
    }
}

/// 2-d convolution, `x: (N, C_in, H, W)`, `w: (C_out, C_in, KH, KW)`, no bias.
pub fn conv2d(x: &Tensor, w: &Tensor, stride: (usize, usize), pad: (usize, usize)) -> Result<Tensor> {
    let op = ConvOp {
        kind: Kind::Conv,
        stride,
        pad,
    };
    Ok(x.contiguous()?.apply_op2(&w.contiguous()?, op)?)
}

/// 2-d transposed convolution, `w: (C_in, C_out, KH, KW)`, output
/// `(H-1)·s − 2p + K + out_pad` along each axis.
pub fn conv_transpose2d(
    x: &Tensor,
    w: &Tensor,
    stride: (usize, usize),
    pad: (usize, usize),
    out_pad: (usize, usize),
) -> Result<Tensor> {
    let op = ConvOp {
        kind: Kind::Transposed { out_pad },
        stride,
        pad,
    };
    Ok(x.contiguous()?.apply_op2(&w.contiguous()?, op)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{Device, Var};

    fn rand_tensor(shape: &[usize], seed: u64) -> Tensor {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n: usize = shape.iter().product();
        let v: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        Tensor::from_vec(v, shape, &Device::Cpu).unwrap()
    }

    fn max_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
        (a - b).unwrap().abs().unwrap().flatten_all().unwrap().max(0).unwrap().to_scalar::<f64>().unwrap()
    }

    #[test]
    fn conv_matches_candle_reference() {
        for &(stride, pad, k) in &[(1, 1, 3), (2, 1, 4), (2, 0, 3), (3, 2, 5), (1, 0, 1)] {
            let x = rand_tensor(&[2, 3, 11, 9], 1);
            let w = rand_tensor(&[4, 3, k, k], 2);
            let ours = conv2d(&x, &w, (stride, stride), (pad, pad)).unwrap();
            let theirs = x.conv2d(&w, pad, stride, 1, 1).unwrap();
            assert_eq!(ours.dims(), theirs.dims());
            assert!(max_abs_diff(&ours, &theirs) < 1e-12, "stride {stride} pad {pad} k {k}");
        }
    }

    #[test]
    fn transposed_matches_candle_reference() {
        for &(stride, pad, k, op) in &[(2, 1, 4, 0), (1, 1, 3, 0), (2, 0, 3, 1), (4, 2, 8, 0)] {
            let x = rand_tensor(&[2, 3, 5, 6], 3);
            let w = rand_tensor(&[3, 2, k, k], 4);
            let ours = conv_transpose2d(&x, &w, (stride, stride), (pad, pad), (op, op)).unwrap();
            let theirs = x.conv_transpose2d(&w, pad, op, stride, 1).unwrap();
            assert_eq!(ours.dims(), theirs.dims());
            assert!(max_abs_diff(&ours, &theirs) < 1e-12);
        }
    }

    /// Gradient of `Σ c ⊙ f(x, w)` checked against central differences.
    fn check_grads(f: impl Fn(&Tensor, &Tensor) -> Tensor, xs: &[usize], ws: &[usize]) {
        let x = Var::from_tensor(&rand_tensor(xs, 5)).unwrap();
        let w = Var::from_tensor(&rand_tensor(ws, 6)).unwrap();
        let y0 = f(x.as_tensor(), w.as_tensor());
        let c = rand_tensor(y0.dims(), 7);
        let loss = |x: &Tensor, w: &Tensor| -> f64 {
            (f(x, w) * &c).unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap()
        };
        let grads = (y0 * &c).unwrap().sum_all().unwrap().backward().unwrap();
        for (var, other_is_x) in [(&x, false), (&w, true)] {
            let g: Vec<f64> = grads.get(var).unwrap().flatten_all().unwrap().to_vec1().unwrap();
            let base: Vec<f64> = var.flatten_all().unwrap().to_vec1().unwrap();
            for i in (0..base.len()).step_by(7) {
                let eps = 1e-6;
                let mut plus = base.clone();
                plus[i] += eps;
                let mut minus = base.clone();
                minus[i] -= eps;
                let tp = Tensor::from_vec(plus, var.shape(), &Device::Cpu).unwrap();
                let tm = Tensor::from_vec(minus, var.shape(), &Device::Cpu).unwrap();
                let (lp, lm) = if other_is_x {
                    (loss(x.as_tensor(), &tp), loss(x.as_tensor(), &tm))
                } else {
                    (loss(&tp, w.as_tensor()), loss(&tm, w.as_tensor()))
                };
                let fd = (lp - lm) / (2.0 * eps);
                assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + fd.abs()), "index {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        check_grads(|x, w| conv2d(x, w, (2, 2), (1, 1)).unwrap(), &[2, 3, 8, 7], &[4, 3, 3, 3]);
        check_grads(|x, w| conv2d(x, w, (1, 1), (0, 2)).unwrap(), &[1, 2, 1, 9], &[3, 2, 1, 5]);
    }

    #[test]
    fn transposed_gradients_match_finite_differences() {
        check_grads(
            |x, w| conv_transpose2d(x, w, (2, 2), (1, 1), (0, 0)).unwrap(),
            &[2, 3, 4, 5],
            &[3, 2, 4, 4],
        );
        check_grads(
            |x, w| conv_transpose2d(x, w, (1, 4), (0, 2), (0, 0)).unwrap(),
            &[1, 2, 1, 6],
            &[2, 3, 1, 8],
        );
    }
}
