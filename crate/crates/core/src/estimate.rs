//! LS and LMMSE CSI estimation, eigenvalue-based path counting and power
//! normalisation.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{receive_observation, Codebook};
use crate::numerics::{herm_eig, herm_inverse};
use crate::rng::{purpose, stream};
use crate::{ComplexMatrix, Error, Result, C64};

/// Threshold margin `ε` of the path-count detector.
pub const DEFAULT_EPSILON: f64 = 0.5;

const ROUNDOFF_GAP: f64 = 1e-12;

/// LS estimate of one subcarrier: `ĥ = Y·s / (√P_t·U)`.
///
/// `y` is the `P × U` observation and `codeword` the user's row `s`.
pub fn ls_estimate(y: &ComplexMatrix, codeword: &[C64], p_t: f64) -> Result<Vec<C64>> {
    if !(p_t > 0.0) {
        return Err(Error::invalid("transmit power must be positive"));
    }
    if y.cols() != codeword.len() {
        return Err(Error::invalid(alloc::format!(
            "observation has {} columns, codeword length is {}",
            y.cols(),
            codeword.len()
        )));
    }
    let scale = 1.0 / (libm::sqrt(p_t) * codeword.len() as f64);
    Ok(y.mul_vec(codeword).into_iter().map(|z| z * scale).collect())
}

/// LS estimate of a whole `P × N_c` packet.
///
/// Subcarrier `n` draws its noise from the stream
/// `(seed, PILOT_NOISE, packet_key, n)`.
pub fn ls_estimate_packet(
    h_true: &ComplexMatrix,
    codebook: &Codebook,
    user: usize,
    p_t: f64,
    noise_variance: f64,
    seed: u64,
    packet_key: u64,
) -> Result<ComplexMatrix> {
    if user >= codebook.length() {
        return Err(Error::invalid("user index outside the codebook"));
    }
    let s = codebook.codeword(user);
    let mut out = ComplexMatrix::zeros(h_true.rows(), h_true.cols());
    for n in 0..h_true.cols() {
        let mut rng = stream(seed, &[purpose::PILOT_NOISE, packet_key, n as u64]);
        let y = receive_observation(&h_true.col(n), s, p_t, noise_variance, &mut rng);
        out.set_col(n, &ls_estimate(&y, s, p_t)?);
    }
    Ok(out)
}

/// LMMSE filter `R_hh (R_hh + σ² I)^{-1}`, formed as `U diag(λ/(λ+σ²)) U^H`
/// so a rank-deficient sample `R_hh` with small `σ²` stays well defined.
/// Negative eigenvalues from round-off are clamped to zero. With `σ² = 0`
/// the filter needs `R_hh` invertible.
pub fn lmmse_filter(r_hh: &ComplexMatrix, noise_var: f64) -> Result<ComplexMatrix> {
    if !r_hh.is_square() {
        return Err(Error::invalid("R_hh must be square"));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    if noise_var == 0.0 {
        return Ok(r_hh.matmul(&herm_inverse(r_hh)?));
    }
    let eig = herm_eig(&r_hh.hermitian_part())?;
    let gains: Vec<C64> = eig
        .values
        .iter()
        .map(|&v| {
            let v = v.max(0.0);
            C64::new(if v + noise_var > 0.0 { v / (v + noise_var) } else { 0.0 }, 0.0)
        })
        .collect();
    Ok(eig
        .vectors
        .matmul(&ComplexMatrix::diag(&gains))
        .matmul(&eig.vectors.adjoint()))
}

/// `ĥ = R_hh (R_hh + σ² I)^{-1} ĥ_LS` for one subcarrier column.
pub fn lmmse_estimate(h_ls: &[C64], r_hh: &ComplexMatrix, noise_var: f64) -> Result<Vec<C64>> {
    if h_ls.len() != r_hh.rows() {
        return Err(Error::invalid("h_ls length does not match R_hh"));
    }
    Ok(lmmse_filter(r_hh, noise_var)?.mul_vec(h_ls))
}

/// Applies the LMMSE filter to every subcarrier column of `h_ls`.
pub fn lmmse_estimate_matrix(h_ls: &ComplexMatrix, r_hh: &ComplexMatrix, noise_var: f64) -> Result<ComplexMatrix> {
    if h_ls.rows() != r_hh.rows() {
        return Err(Error::invalid("h_ls rows do not match R_hh"));
    }
    Ok(lmmse_filter(r_hh, noise_var)?.matmul(h_ls))
}

/// Mean of `H·H^H / N_c` over a set of CSI matrices.
pub fn sample_autocorrelation<'a>(samples: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut acc: Option<ComplexMatrix> = None;
    let mut count = 0usize;
    for h in samples {
        let r = h.gram_rows(h.cols() as f64);
        acc = Some(match acc {
            None => r,
            Some(a) => {
                if a.shape() != r.shape() {
                    return Err(Error::invalid("samples have different antenna counts"));
                }
                a.add(&r)
            }
        });
        count += 1;
    }
    acc.map(|a| a.scale_real(1.0 / count as f64))
        .ok_or_else(|| Error::invalid("no samples"))
}

/// Path count `L̂` from descending eigenvalues.
///
/// With gaps `v_Δ[i] = v[i] − v[i+1]` and the tail mean
/// `v̄ = Σ_{i=⌊(P−1)/2⌋}^{P−2} v_Δ[i] / (P − ⌊(P−1)/2⌋)`, `L̂` is the largest
/// 1-based index `i ≤ ⌊(P−1)/2⌋` whose gap exceeds `(1+ε)·v̄`, or 1 if none
/// does. Gaps inside the tail are never signal gaps, and gaps below
/// `1e-12·v[0]` are treated as round-off.
pub fn estimate_num_paths(v_sigma: &[f64], epsilon: f64) -> usize {
    let p = v_sigma.len();
    if p < 2 {
        return 1;
    }
    let gaps: Vec<f64> = v_sigma.windows(2).map(|w| w[0] - w[1]).collect();
    let start = (p - 1) / 2;
    let v_bar = gaps[start..].iter().sum::<f64>() / (p - start) as f64;
    let threshold = ((1.0 + epsilon) * v_bar).max(ROUNDOFF_GAP * v_sigma[0].abs());
    (1..=start.max(1))
        .rev()
        .find(|&i| gaps[i - 1] > threshold)
        .unwrap_or(1)
}

/// Outcome of [`normalize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub num_paths_est: usize,
    pub noise_var_est: f64,
    pub signal_power_est: f64,
    pub eigenvalues: Vec<f64>,
}

impl NormalizationReport {
    /// Builds the report from descending eigenvalues of `H·H^H/N_c`.
    pub fn from_eigenvalues(eigenvalues: Vec<f64>, epsilon: f64) -> Result<Self> {
        let p = eigenvalues.len();
        let l_hat = estimate_num_paths(&eigenvalues, epsilon).min(p.saturating_sub(1)).max(1);
        let tail = &eigenvalues[l_hat..];
        let noise = if tail.is_empty() {
            0.0
        } else {
            (tail.iter().sum::<f64>() / tail.len() as f64).max(0.0)
        };
        let rho: f64 = eigenvalues[..l_hat].iter().map(|v| v - noise).sum();
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Degenerate(alloc::format!("signal power estimate {rho:e} is not positive")));
        }
        Ok(Self {
            num_paths_est: l_hat,
            noise_var_est: noise,
            signal_power_est: rho,
            eigenvalues,
        })
    }
}

/// Eigen-analysis of `R = H·H^H/N_c` and the normalised CSI `H / √ρ_h²`.
pub fn normalize(h: &ComplexMatrix, epsilon: f64) -> Result<(ComplexMatrix, NormalizationReport)> {
    let report = analyze(h, epsilon)?;
    let out = h.scale_real(1.0 / libm::sqrt(report.signal_power_est));
    Ok((out, report))
}

/// The eigen-analysis half of [`normalize`].
pub fn analyze(h: &ComplexMatrix, epsilon: f64) -> Result<NormalizationReport> {
    if h.rows() < 2 || h.cols() == 0 {
        return Err(Error::invalid("need at least 2 antennas and 1 subcarrier"));
    }
    let r = h.gram_rows(h.cols() as f64);
    NormalizationReport::from_eigenvalues(herm_eig(&r)?.values, epsilon)
}
