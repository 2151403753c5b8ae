//! Complex linear/convolution layers and the split leaky ReLU.
//!
//! Forward passes evaluate complex products through four real products,
//! `(W_r + jW_i)(x_r + jx_i) = (W_r x_r − W_i x_i) + j(W_r x_i + W_i x_r)`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{ComplexMatrix, ComplexTensor, Error, Result, C64};

/// Kernel side length.
pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

/// `y = W·x + b` evaluated with the four-real-product butterfly.
pub fn complex_linear(x: &[C64], w: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::invalid(alloc::format!(
            "linear layer {}x{} cannot map length {} with bias length {}",
            w.rows(),
            w.cols(),
            x.len(),
            b.len()
        )));
    }
    let mut out = Vec::with_capacity(w.rows());
    for (r, bias) in b.iter().enumerate() {
        let (mut re, mut im) = (bias.re, bias.im);
        for (wk, xk) in w.row(r).iter().zip(x) {
            re += wk.re * xk.re - wk.im * xk.im;
            im += wk.re * xk.im + wk.im * xk.re;
        }
        out.push(C64::new(re, im));
    }
    Ok(out)
}

/// One complex 3×3 convolution with zero padding 1 (shape preserving).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexConvLayer {
    in_ch: usize,
    out_ch: usize,
    /// `out_ch × in_ch × 3 × 3`, row-major.
    kernels: Vec<C64>,
    bias: Vec<C64>,
}

impl ComplexConvLayer {
    pub fn zeros(in_ch: usize, out_ch: usize) -> Self {
        assert!(in_ch >= 1 && out_ch >= 1, "channel counts must be positive");
        Self {
            in_ch,
            out_ch,
            kernels: vec![C64::new(0.0, 0.0); in_ch * out_ch * TAPS],
            bias: vec![C64::new(0.0, 0.0); out_ch],
        }
    }

    /// Single-channel layer whose kernel is `value` at the centre tap.
    pub fn delta(value: C64) -> Self {
        let mut l = Self::zeros(1, 1);
        *l.kernel_mut(0, 0, 1, 1) = value;
        l
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    fn index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_ch + i) * KERNEL + ky) * KERNEL + kx
    }

    pub fn kernel(&self, o: usize, i: usize, ky: usize, kx: usize) -> C64 {
        self.kernels[self.index(o, i, ky, kx)]
    }

    pub fn kernel_mut(&mut self, o: usize, i: usize, ky: usize, kx: usize) -> &mut C64 {
        let k = self.index(o, i, ky, kx);
        &mut self.kernels[k]
    }

    pub fn kernels(&self) -> &[C64] {
        &self.kernels
    }

    pub fn kernels_mut(&mut self) -> &mut [C64] {
        &mut self.kernels
    }

    pub fn bias(&self) -> &[C64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [C64] {
        &mut self.bias
    }

    /// Complex parameter count (kernels then biases).
    pub fn num_params(&self) -> usize {
        self.kernels.len() + self.bias.len()
    }

    /// Kernels then biases, in storage order.
    pub fn params(&self) -> impl Iterator<Item = &C64> {
        self.kernels.iter().chain(self.bias.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut C64> {
        self.kernels.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Real 2-D cross-correlation of one plane with one 3×3 kernel, accumulated
/// into `out` with sign `sign`.
fn correlate_acc(out: &mut [f64], x: &[f64], k: &[f64], h: usize, w: usize, sign: f64) {
    for ky in 0..KERNEL {
        for kx in 0..KERNEL {
            let kv = sign * k[ky * KERNEL + kx];
            if kv == 0.0 {
                continue;
            }
            // Output (i, j) reads input (i + ky − 1, j + kx − 1).
            let oi0 = 1usize.saturating_sub(ky);
            let oi1 = (h + 1).saturating_sub(ky).min(h);
            let oj0 = 1usize.saturating_sub(kx);
            let oj1 = (w + 1).saturating_sub(kx).min(w);
            for i in oi0..oi1 {
                let src = (i + ky - 1) * w;
                let dst = i * w;
                for j in oj0..oj1 {
                    out[dst + j] += kv * x[src + j + kx - 1];
                }
            }
        }
    }
}

/// Complex convolution `K * x + b` via four real correlations per tap set.
pub fn complex_conv(x: &ComplexTensor, layer: &ComplexConvLayer) -> Result<ComplexTensor> {
    if x.channels() != layer.in_ch {
        return Err(Error::invalid(alloc::format!(
            "conv expects {} input channels, got {}",
            layer.in_ch,
            x.channels()
        )));
    }
    let (h, w) = (x.height(), x.width());
    let plane = h * w;
    let xr: Vec<Vec<f64>> = (0..layer.in_ch).map(|c| x.channel(c).iter().map(|z| z.re).collect()).collect();
    let xi: Vec<Vec<f64>> = (0..layer.in_ch).map(|c| x.channel(c).iter().map(|z| z.im).collect()).collect();
    let mut out = ComplexTensor::zeros(layer.out_ch, h, w);
    let mut yr = vec![0.0; plane];
    let mut yi = vec![0.0; plane];
    let mut kr = [0.0; TAPS];
    let mut ki = [0.0; TAPS];
    for o in 0..layer.out_ch {
        yr.fill(layer.bias[o].re);
        yi.fill(layer.bias[o].im);
        for c in 0..layer.in_ch {
            let base = layer.index(o, c, 0, 0);
            for t in 0..TAPS {
                kr[t] = layer.kernels[base + t].re;
                ki[t] = layer.kernels[base + t].im;
            }
            correlate_acc(&mut yr, &xr[c], &kr, h, w, 1.0);
            correlate_acc(&mut yr, &xi[c], &ki, h, w, -1.0);
            correlate_acc(&mut yi, &xi[c], &kr, h, w, 1.0);
            correlate_acc(&mut yi, &xr[c], &ki, h, w, 1.0);
        }
        for (dst, (re, im)) in out.channel_mut(o).iter_mut().zip(yr.iter().zip(&yi)) {
            *dst = C64::new(*re, *im);
        }
    }
    Ok(out)
}

/// Gradients of a convolution given `G_y = ∂J/∂Re y + j·∂J/∂Im y`.
///
/// Returns `G_x` and accumulates kernel/bias gradients into `grad`.
pub(crate) fn complex_conv_backward(
    x: &ComplexTensor,
    layer: &ComplexConvLayer,
    g_y: &ComplexTensor,
    grad: &mut ComplexConvLayer,
) -> ComplexTensor {
    let (h, w) = (x.height(), x.width());
    let mut g_x = ComplexTensor::zeros(layer.in_ch, h, w);
    for o in 0..layer.out_ch {
        let gy = g_y.channel(o);
        grad.bias[o] += gy.iter().sum::<C64>();
        for c in 0..layer.in_ch {
            let xc = x.channel(c);
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let oi0 = 1usize.saturating_sub(ky);
                    let oi1 = (h + 1).saturating_sub(ky).min(h);
                    let oj0 = 1usize.saturating_sub(kx);
                    let oj1 = (w + 1).saturating_sub(kx).min(w);
                    let kc = layer.kernel(o, c, ky, kx).conj();
                    let mut gk = C64::new(0.0, 0.0);
                    let gxc = g_x.channel_mut(c);
                    for i in oi0..oi1 {
                        let src = (i + ky - 1) * w;
                        let dst = i * w;
                        for j in oj0..oj1 {
                            let g = gy[dst + j];
                            gk += xc[src + j + kx - 1].conj() * g;
                            gxc[src + j + kx - 1] += kc * g;
                        }
                    }
                    *grad.kernel_mut(o, c, ky, kx) += gk;
                }
            }
        }
    }
    g_x
}

#[inline]
fn leaky(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        slope * v
    }
}

/// Leaky ReLU applied separately to the real and imaginary parts.
pub fn clrelu(x: &ComplexTensor, slope: f64) -> ComplexTensor {
    let mut out = x.clone();
    for z in out.as_mut_slice() {
        *z = C64::new(leaky(z.re, slope), leaky(z.im, slope));
    }
    out
}

/// Backward of [`clrelu`] at pre-activation `x`.
pub(crate) fn clrelu_backward(x: &ComplexTensor, g_y: &ComplexTensor, slope: f64) -> ComplexTensor {
    let mut out = g_y.clone();
    for (g, z) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
        let mr = if z.re > 0.0 { 1.0 } else { slope };
        let mi = if z.im > 0.0 { 1.0 } else { slope };
        *g = C64::new(g.re * mr, g.im * mi);
    }
    out
}
