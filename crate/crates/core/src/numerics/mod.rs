//! Dense complex linear algebra and spectral primitives.
//!
//! Everything here is sized for array processing (P ≤ 8 antennas, a few
//! hundred subcarriers); nothing is blocked or vectorised.

mod eig;
mod fft;
mod linalg;
mod matrix;
mod tensor;

pub use eig::{herm_eig, HermEig};
pub use fft::{dft, dft_matrix, fft_cols, fft_rows, idft, ifft_cols, ifft_rows};
pub use linalg::{herm_inverse, pinv};
pub use matrix::ComplexMatrix;
pub use tensor::ComplexTensor;

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex64;

/// Inner product `Σ conj(a_i)·b_i`.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
