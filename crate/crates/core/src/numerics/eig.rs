use alloc::vec::Vec;

use super::{ComplexMatrix, C64};
use crate::{Error, Result};

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Real eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

const HERMITIAN_TOL: f64 = 1e-9;
const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition of a Hermitian matrix.
///
/// The input is symmetrised as `(m + m^H)/2` first. Sweeps stop once the
/// off-diagonal Frobenius norm falls below `1e-12·‖m‖_F`, after one extra
/// polishing sweep.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::invalid(alloc::format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let scale = m.frobenius_norm();
    if m.max_abs_diff(&m.adjoint()) > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::invalid("matrix is not Hermitian within 1e-9"));
    }
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let mut polished = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= OFF_DIAG_TOL * scale {
            if polished {
                break;
            }
            polished = true;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermEig { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    libm::sqrt(s)
}

/// Annihilates `a[p][q]` with the unitary `V = diag(1, conj(e))·G(c, s)`,
/// where `e` is the phase of `a[p][q]` and `G` the real Jacobi rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let e = apq / r;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    // Columns: A ← A·V, eigenvectors ← W·V.
    let vqp = -e.conj() * s;
    let vqq = e.conj() * c;
    for mat in [&mut *a, &mut *v] {
        for k in 0..mat.rows() {
            let kp = mat[(k, p)];
            let kq = mat[(k, q)];
            mat[(k, p)] = kp * c + kq * vqp;
            mat[(k, q)] = kp * s + kq * vqq;
        }
    }
    // Rows: A ← V^H·A.
    let n = a.cols();
    for k in 0..n {
        let pk = a[(p, k)];
        let qk = a[(q, k)];
        a[(p, k)] = pk * c - qk * (e * s);
        a[(q, k)] = pk * s + qk * (e * c);
    }
    a[(p, p)] = C64::new(app - t * r, 0.0);
    a[(q, q)] = C64::new(aqq + t * r, 0.0);
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
}
