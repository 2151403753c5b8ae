//! Unnormalised DFT/IDFT.
//!
//! Power-of-two lengths use an iterative radix-2 transform with directly
//! evaluated twiddles; any other length falls back to the O(n²) direct sum.
//! Both directions are unscaled: `idft(dft(x)) == n·x`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{ComplexMatrix, C64};

/// `n × n` DFT matrix, entry `(a, b) = exp(-j·2π·a·b/n)`.
///
/// Panics if `n == 0`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    assert!(n >= 1, "DFT size must be at least 1");
    ComplexMatrix::from_fn(n, n, |a, b| twiddle(((a * b) % n) as f64, n, -1.0))
}

#[inline]
fn twiddle(k: f64, n: usize, sign: f64) -> C64 {
    let phase = sign * 2.0 * PI * k / n as f64;
    C64::new(libm::cos(phase), libm::sin(phase))
}

/// In-place forward DFT: `X[k] = Σ x[n]·exp(-j2πkn/N)`.
pub fn dft(buf: &mut [C64]) {
    transform(buf, -1.0);
}

/// In-place inverse DFT without the `1/N` factor: `x[n] = Σ X[k]·exp(+j2πkn/N)`.
pub fn idft(buf: &mut [C64]) {
    transform(buf, 1.0);
}

fn transform(buf: &mut [C64], sign: f64) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(buf, sign);
    } else {
        direct(buf, sign);
    }
}

fn direct(buf: &mut [C64], sign: f64) {
    let n = buf.len();
    let out: Vec<C64> = (0..n)
        .map(|k| {
            buf.iter()
                .enumerate()
                .map(|(t, x)| x * twiddle(((k * t) % n) as f64, n, sign))
                .sum()
        })
        .collect();
    buf.copy_from_slice(&out);
}

fn radix2(buf: &mut [C64], sign: f64) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let twiddles: Vec<C64> = (0..n / 2).map(|k| twiddle(k as f64, n, sign)).collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

fn along_cols(m: &ComplexMatrix, f: fn(&mut [C64])) -> ComplexMatrix {
    let mut out = m.clone();
    let mut col = Vec::with_capacity(m.rows());
    for c in 0..m.cols() {
        col.clear();
        col.extend((0..m.rows()).map(|r| m[(r, c)]));
        f(&mut col);
        out.set_col(c, &col);
    }
    out
}

fn along_rows(m: &ComplexMatrix, f: fn(&mut [C64])) -> ComplexMatrix {
    let mut out = m.clone();
    for r in 0..m.rows() {
        f(out.row_mut(r));
    }
    out
}

/// DFT of every column: `F_rows · m`.
pub fn fft_cols(m: &ComplexMatrix) -> ComplexMatrix {
    along_cols(m, dft)
}

/// Unscaled IDFT of every column: `F_rows^H · m`.
pub fn ifft_cols(m: &ComplexMatrix) -> ComplexMatrix {
    along_cols(m, idft)
}

/// DFT of every row: `m · F_cols` (the DFT matrix is symmetric).
pub fn fft_rows(m: &ComplexMatrix) -> ComplexMatrix {
    along_rows(m, dft)
}

/// Unscaled IDFT of every row: `(F_cols^H · m^T)^T`.
pub fn ifft_rows(m: &ComplexMatrix) -> ComplexMatrix {
    along_rows(m, idft)
}
