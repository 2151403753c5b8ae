//! Antenna-frequency ⇄ angle-delay transform.
//!
//! `T(H) = F_P · H · F_{N_c}^H / N_c`: a DFT across antennas and a scaled
//! inverse DFT across subcarriers, so a path with AoA `θ` and delay `τ`
//! peaks at bin `(P·d_a·sin θ/λ, N_c·Δf·τ)`. The inverse
//! `T⁻¹(X) = F_P^H · X · F_{N_c} / P` makes the round trip exact.
//!
//! Under this convention `‖T(H)‖² = (P/N_c)·‖H‖²`, the adjoint of `T` is
//! `(P/N_c)·T⁻¹` and the adjoint of `T⁻¹` is `(N_c/P)·T`.

use crate::numerics::{fft_cols, fft_rows, ifft_cols, ifft_rows};
use crate::{ComplexMatrix, ComplexTensor};

pub fn isac_transform(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.cols() as f64;
    ifft_rows(&fft_cols(h)).scale_real(1.0 / n)
}

pub fn isac_inverse(x: &ComplexMatrix) -> ComplexMatrix {
    let p = x.rows() as f64;
    ifft_cols(&fft_rows(x)).scale_real(1.0 / p)
}

/// Adjoint of [`isac_transform`].
pub fn isac_transform_adjoint(g: &ComplexMatrix) -> ComplexMatrix {
    let ratio = g.rows() as f64 / g.cols() as f64;
    isac_inverse(g).scale_real(ratio)
}

/// Adjoint of [`isac_inverse`].
pub fn isac_inverse_adjoint(g: &ComplexMatrix) -> ComplexMatrix {
    let ratio = g.cols() as f64 / g.rows() as f64;
    isac_transform(g).scale_real(ratio)
}

/// [`isac_transform`] applied to each channel independently.
pub fn isac_transform_tensor(x: &ComplexTensor) -> ComplexTensor {
    x.map_channels(isac_transform)
}

/// [`isac_inverse`] applied to each channel independently.
pub fn isac_inverse_tensor(x: &ComplexTensor) -> ComplexTensor {
    x.map_channels(isac_inverse)
}

pub fn isac_transform_adjoint_tensor(g: &ComplexTensor) -> ComplexTensor {
    g.map_channels(isac_transform_adjoint)
}

pub fn isac_inverse_adjoint_tensor(g: &ComplexTensor) -> ComplexTensor {
    g.map_channels(isac_inverse_adjoint)
}
