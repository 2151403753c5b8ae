use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{clrelu, clrelu_backward, complex_conv, complex_conv_backward, ComplexConvLayer, KERNEL};
use crate::rng::{complex_normal, purpose, stream};
use crate::transform::{isac_inverse, isac_inverse_adjoint, isac_transform, isac_transform_adjoint};
use crate::{ComplexMatrix, ComplexTensor, Error, Result, C64};

/// Leaky slope of the split ReLU.
pub const DEFAULT_SLOPE: f64 = 0.01;
/// Hidden channel count of both blocks.
pub const DEFAULT_HIDDEN: usize = 4;

/// Three convolutions `1 → C → C → 1`; the first two are followed by the
/// split leaky ReLU, the last is linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvBlock {
    pub layers: [ComplexConvLayer; 3],
}

impl ConvBlock {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            layers: [
                ComplexConvLayer::zeros(1, hidden),
                ComplexConvLayer::zeros(hidden, hidden),
                ComplexConvLayer::zeros(hidden, 1),
            ],
        }
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].out_channels()
    }
}

/// Two residual blocks: one in the antenna-frequency domain, one in the
/// angle-delay domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancerModel {
    pub block1: ConvBlock,
    pub shortcut1: ComplexConvLayer,
    pub block2: ConvBlock,
    pub shortcut2: ComplexConvLayer,
    /// `(P, N_c)` the model was built for.
    pub dims: (usize, usize),
    pub slope: f64,
}

/// Per-block intermediate values kept for backpropagation.
struct BlockTrace {
    input: ComplexTensor,
    pre: [ComplexTensor; 2],
    act: [ComplexTensor; 2],
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardTrace {
    block1: BlockTrace,
    block2: BlockTrace,
    output: ComplexMatrix,
}

impl ForwardTrace {
    pub fn output(&self) -> &ComplexMatrix {
        &self.output
    }
}

impl EnhancerModel {
    /// All parameters zero.
    pub fn zeros(c1: usize, c2: usize, dims: (usize, usize)) -> Self {
        Self {
            block1: ConvBlock::zeros(c1),
            shortcut1: ComplexConvLayer::zeros(1, 1),
            block2: ConvBlock::zeros(c2),
            shortcut2: ComplexConvLayer::zeros(1, 1),
            dims,
            slope: DEFAULT_SLOPE,
        }
    }

    /// Zero main blocks and unit-delta shortcuts: the identity map.
    pub fn identity(c1: usize, c2: usize, dims: (usize, usize)) -> Self {
        let one = C64::new(1.0, 0.0);
        Self {
            shortcut1: ComplexConvLayer::delta(one),
            shortcut2: ComplexConvLayer::delta(one),
            ..Self::zeros(c1, c2, dims)
        }
    }

    /// Random initialisation: real and imaginary kernel parts are
    /// independent `N(0, 2/(4·fan_in))` with `fan_in = in_ch·9`; biases zero.
    pub fn init(c1: usize, c2: usize, dims: (usize, usize), seed: u64) -> Self {
        let mut model = Self::zeros(c1, c2, dims);
        let mut rng = stream(seed, &[purpose::INIT]);
        for layer in model.layers_mut() {
            let fan_in = (layer.in_channels() * KERNEL * KERNEL) as f64;
            // complex_normal splits the variance evenly over both parts.
            let variance = 2.0 * 2.0 / (4.0 * fan_in);
            for k in layer.kernels_mut() {
                *k = complex_normal(&mut rng, variance);
            }
        }
        model
    }

    pub fn hidden_channels(&self) -> (usize, usize) {
        (self.block1.hidden(), self.block2.hidden())
    }

    /// Layers in checkpoint order: block 1, shortcut 1, block 2, shortcut 2.
    pub fn layers(&self) -> [&ComplexConvLayer; 8] {
        let [a, b, c] = &self.block1.layers;
        let [d, e, f] = &self.block2.layers;
        [a, b, c, &self.shortcut1, d, e, f, &self.shortcut2]
    }

    pub fn layers_mut(&mut self) -> [&mut ComplexConvLayer; 8] {
        let [a, b, c] = &mut self.block1.layers;
        let [d, e, f] = &mut self.block2.layers;
        [a, b, c, &mut self.shortcut1, d, e, f, &mut self.shortcut2]
    }

    /// Complex parameter count.
    pub fn num_params(&self) -> usize {
        self.layers().iter().map(|l| l.num_params()).sum()
    }

    /// Real/imaginary-interleaved parameters in checkpoint order; within a
    /// layer, kernels then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.num_params());
        for layer in self.layers() {
            for z in layer.params() {
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    /// Inverse of [`EnhancerModel::to_flat`].
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != 2 * self.num_params() {
            return Err(Error::invalid(alloc::format!(
                "expected {} reals, got {}",
                2 * self.num_params(),
                flat.len()
            )));
        }
        let mut it = flat.chunks_exact(2);
        for layer in self.layers_mut() {
            for (z, pair) in layer.params_mut().zip(&mut it) {
                *z = C64::new(pair[0], pair[1]);
            }
        }
        Ok(())
    }

    fn check_input(&self, h: &ComplexMatrix) -> Result<()> {
        if h.shape() != self.dims {
            return Err(Error::invalid(alloc::format!(
                "model built for {}x{}, input is {}x{}",
                self.dims.0,
                self.dims.1,
                h.rows(),
                h.cols()
            )));
        }
        Ok(())
    }

    fn block_forward(&self, block: &ConvBlock, shortcut: &ComplexConvLayer, x: ComplexTensor) -> Result<(ComplexTensor, BlockTrace)> {
        let pre0 = complex_conv(&x, &block.layers[0])?;
        let act0 = clrelu(&pre0, self.slope);
        let pre1 = complex_conv(&act0, &block.layers[1])?;
        let act1 = clrelu(&pre1, self.slope);
        let mut out = complex_conv(&act1, &block.layers[2])?;
        out.add_assign(&complex_conv(&x, shortcut)?);
        Ok((
            out,
            BlockTrace {
                input: x,
                pre: [pre0, pre1],
                act: [act0, act1],
            },
        ))
    }

    /// Forward pass keeping intermediates.
    pub fn forward_trace(&self, h: &ComplexMatrix) -> Result<ForwardTrace> {
        self.check_input(h)?;
        let (hf, block1) = self.block_forward(&self.block1, &self.shortcut1, ComplexTensor::from_matrix(h))?;
        let t = ComplexTensor::from_matrix(&isac_transform(&hf.channel_matrix(0)));
        let (x2, block2) = self.block_forward(&self.block2, &self.shortcut2, t)?;
        let output = isac_inverse(&x2.channel_matrix(0));
        Ok(ForwardTrace { block1, block2, output })
    }

    /// `T⁻¹[CNN2(T Ĥ_F) + S2(T Ĥ_F)]` with `Ĥ_F = CNN1(H̄) + S1(H̄)`.
    pub fn forward(&self, h: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(self.forward_trace(h)?.output)
    }

    fn block_backward(
        &self,
        block: &ConvBlock,
        shortcut: &ComplexConvLayer,
        trace: &BlockTrace,
        g_out: &ComplexTensor,
        grad_block: &mut ConvBlock,
        grad_shortcut: &mut ComplexConvLayer,
    ) -> ComplexTensor {
        let mut g_x = complex_conv_backward(&trace.input, shortcut, g_out, grad_shortcut);
        let g_act1 = complex_conv_backward(&trace.act[1], &block.layers[2], g_out, &mut grad_block.layers[2]);
        let g_pre1 = clrelu_backward(&trace.pre[1], &g_act1, self.slope);
        let g_act0 = complex_conv_backward(&trace.act[0], &block.layers[1], &g_pre1, &mut grad_block.layers[1]);
        let g_pre0 = clrelu_backward(&trace.pre[0], &g_act0, self.slope);
        g_x.add_assign(&complex_conv_backward(&trace.input, &block.layers[0], &g_pre0, &mut grad_block.layers[0]));
        g_x
    }

    /// Backpropagates `G_out = ∂J/∂Re(out) + j·∂J/∂Im(out)` through a
    /// recorded forward pass, accumulating into `grad` (same layout as the
    /// model, each parameter holding `∂J/∂Re + j·∂J/∂Im`).
    pub fn backward_from(&self, trace: &ForwardTrace, g_out: &ComplexMatrix, grad: &mut EnhancerModel) {
        let g_x2 = ComplexTensor::from_matrix(&isac_inverse_adjoint(g_out));
        let g_t = self.block_backward(&self.block2, &self.shortcut2, &trace.block2, &g_x2, &mut grad.block2, &mut grad.shortcut2);
        let g_hf = ComplexTensor::from_matrix(&isac_transform_adjoint(&g_t.channel_matrix(0)));
        self.block_backward(&self.block1, &self.shortcut1, &trace.block1, &g_hf, &mut grad.block1, &mut grad.shortcut1);
    }

    /// Loss `‖target − out‖²_F` and its gradient for one sample.
    pub fn backward(&self, h: &ComplexMatrix, target: &ComplexMatrix) -> Result<(f64, EnhancerModel)> {
        let mut grad = self.zeros_like();
        let loss = self.accumulate_gradient(h, target, &mut grad)?;
        Ok((loss, grad))
    }

    /// As [`EnhancerModel::backward`], accumulating into an existing gradient.
    pub fn accumulate_gradient(&self, h: &ComplexMatrix, target: &ComplexMatrix, grad: &mut EnhancerModel) -> Result<f64> {
        if target.shape() != self.dims {
            return Err(Error::invalid("target shape does not match the model"));
        }
        let trace = self.forward_trace(h)?;
        let resid = trace.output.sub(target);
        let loss = resid.frobenius_norm_sqr();
        self.backward_from(&trace, &resid.scale_real(2.0), grad);
        Ok(loss)
    }

    /// A model of the same shape with every parameter zero.
    pub fn zeros_like(&self) -> Self {
        let (c1, c2) = self.hidden_channels();
        Self {
            slope: self.slope,
            ..Self::zeros(c1, c2, self.dims)
        }
    }

    /// Random perturbation helper for tests and diagnostics.
    pub fn perturbed<R: Rng + ?Sized>(&self, rng: &mut R, variance: f64) -> Self {
        let mut m = self.clone();
        for layer in m.layers_mut() {
            for z in layer.params_mut() {
                *z += complex_normal(rng, variance);
            }
        }
        m
    }
}

/// `‖target − out‖²_F`.
pub fn loss(target: &ComplexMatrix, out: &ComplexMatrix) -> f64 {
    target.sub(out).frobenius_norm_sqr()
}

/// Floor applied to NMSE values reported in dB.
pub const NMSE_FLOOR_DB: f64 = -120.0;

/// `10·log10(err/energy)`, clamped to [`NMSE_FLOOR_DB`].
pub fn nmse_db(err: f64, energy: f64) -> f64 {
    if energy <= 0.0 {
        return if err <= 0.0 { NMSE_FLOOR_DB } else { f64::INFINITY };
    }
    let ratio = err / energy;
    if ratio <= 0.0 {
        NMSE_FLOOR_DB
    } else {
        (10.0 * libm::log10(ratio)).max(NMSE_FLOOR_DB)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = stream(seed, &[]);
        ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(&mut rng, 1.0))
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = EnhancerModel::zeros(4, 4, (8, 16));
        let out = m.forward(&random_matrix(8, 16, 1)).unwrap();
        assert!(out.as_slice().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn identity_model_is_identity() {
        let m = EnhancerModel::identity(4, 4, (8, 64));
        let h = random_matrix(8, 64, 2);
        assert!(m.forward(&h).unwrap().relative_diff(&h) < 1e-10);
    }

    #[test]
    fn rejects_wrong_shape() {
        let m = EnhancerModel::zeros(2, 2, (8, 16));
        assert!(m.forward(&random_matrix(8, 32, 0)).is_err());
    }

    #[test]
    fn loss_examples() {
        let a = random_matrix(8, 16, 3);
        assert_eq!(loss(&a, &a), 0.0);
        let ones = ComplexMatrix::from_fn(8, 16, |_, _| C64::new(1.0, 0.0));
        assert!((loss(&a.add(&ones), &a) - 128.0).abs() < 1e-10);
        let b = random_matrix(8, 16, 4);
        let mut want = 0.0;
        for p in 0..8 {
            for n in 0..16 {
                let d = a[(p, n)] - b[(p, n)];
                want += d.re * d.re + d.im * d.im;
            }
        }
        assert!((loss(&a, &b) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn flat_round_trip() {
        let m = EnhancerModel::init(4, 4, (8, 16), 7);
        let mut z = m.zeros_like();
        z.load_flat(&m.to_flat()).unwrap();
        assert_eq!(z, m);
        assert!(z.load_flat(&[0.0; 3]).is_err());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let m = EnhancerModel::init(2, 2, (8, 16), 1);
        let h = random_matrix(8, 16, 5);
        let target = m.forward(&h).unwrap();
        let (l, g) = m.backward(&h, &target).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.to_flat().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_shortcut_gradient_is_input_residual_correlation() {
        // Identity-passthrough model: out = T⁻¹ S2 T S1 H with S = δ. The
        // gradient w.r.t. the centre tap of S1 is Σ conj(H)·2(out − target).
        let m = EnhancerModel::identity(2, 2, (8, 16));
        let h = random_matrix(8, 16, 6);
        let target = random_matrix(8, 16, 7);
        let (_, g) = m.backward(&h, &target).unwrap();
        let resid = h.sub(&target).scale_real(2.0);
        let want: C64 = h.as_slice().iter().zip(resid.as_slice()).map(|(x, r)| x.conj() * r).sum();
        assert!((g.shortcut1.kernel(0, 0, 1, 1) - want).norm() < 1e-9 * want.norm());
        let bias: C64 = resid.as_slice().iter().sum();
        assert!((g.shortcut1.bias()[0] - bias).norm() < 1e-9 * bias.norm().max(1.0));
    }

    fn finite_difference_check(seed: u64) {
        let dims = (8, 16);
        let m = EnhancerModel::init(2, 2, dims, seed);
        // Non-zero biases so every parameter group is exercised.
        let m = m.perturbed(&mut stream(seed, &[9]), 0.01);
        let h = random_matrix(dims.0, dims.1, seed + 1);
        let target = random_matrix(dims.0, dims.1, seed + 2);
        let (_, g) = m.backward(&h, &target).unwrap();
        let analytic = g.to_flat();
        let base = m.to_flat();
        let step = 1e-6;
        let mut probe = m.clone();
        let mut worst: f64 = 0.0;
        for k in 0..base.len() {
            let mut plus = base.clone();
            plus[k] += step;
            probe.load_flat(&plus).unwrap();
            let lp = loss(&target, &probe.forward(&h).unwrap());
            let mut minus = base.clone();
            minus[k] -= step;
            probe.load_flat(&minus).unwrap();
            let lm = loss(&target, &probe.forward(&h).unwrap());
            let fd = (lp - lm) / (2.0 * step);
            let rel = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-3);
            worst = worst.max(rel);
            assert!(rel <= 1e-5, "param {k}: fd {fd} analytic {}", analytic[k]);
        }
        assert!(worst <= 1e-5);
    }

    #[test]
    fn gradients_match_finite_differences() {
        finite_difference_check(11);
    }

    #[test]
    fn local_linearity_away_from_kinks() {
        let m = EnhancerModel::init(2, 2, (8, 16), 3);
        let h = random_matrix(8, 16, 8);
        let d = random_matrix(8, 16, 9);
        let f0 = m.forward(&h).unwrap();
        let f1 = m.forward(&h.add(&d.scale_real(1e-7))).unwrap().sub(&f0);
        let f2 = m.forward(&h.add(&d.scale_real(2e-7))).unwrap().sub(&f0);
        assert!(f2.relative_diff(&f1.scale_real(2.0)) < 1e-5);
    }

    #[test]
    fn nmse_db_floor() {
        assert_eq!(nmse_db(0.0, 1.0), NMSE_FLOOR_DB);
        assert!((nmse_db(0.1, 1.0) + 10.0).abs() < 1e-12);
    }
}
