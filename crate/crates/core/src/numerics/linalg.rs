use alloc::vec::Vec;

use super::{herm_eig, ComplexMatrix, C64};
use crate::{Error, Result};

/// Relative eigenvalue floor below which a Hermitian matrix counts as singular.
const SINGULAR_TOL: f64 = 1e-10;

/// Inverse of a Hermitian matrix through its eigen-decomposition.
///
/// Fails with [`Error::Singular`] when `min |λ| ≤ 1e-10 · max |λ|`.
pub fn herm_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(m)?;
    let max = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = eig.values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if max == 0.0 || min <= SINGULAR_TOL * max {
        return Err(Error::Singular(alloc::format!(
            "eigenvalue ratio {:.3e} below {SINGULAR_TOL:e}",
            if max == 0.0 { 0.0 } else { min / max }
        )));
    }
    let inv: Vec<C64> = eig.values.iter().map(|&v| C64::new(1.0 / v, 0.0)).collect();
    Ok(eig
        .vectors
        .matmul(&ComplexMatrix::diag(&inv))
        .matmul(&eig.vectors.adjoint()))
}

/// Moore–Penrose pseudo-inverse of a full-rank matrix.
///
/// Tall (or square) input uses `(m^H m)^{-1} m^H`, wide input
/// `m^H (m m^H)^{-1}`. Rank deficiency is detected on the Gram matrix:
/// its eigenvalue ratio must exceed `1e-10`.
pub fn pinv(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mh = m.adjoint();
    if m.rows() >= m.cols() {
        let gram = mh.matmul(m);
        Ok(herm_inverse(&gram)?.matmul(&mh))
    } else {
        let gram = m.matmul(&mh);
        Ok(mh.matmul(&herm_inverse(&gram)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::steering_vector;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn assert_moore_penrose(a: &ComplexMatrix, x: &ComplexMatrix) {
        let axa = a.matmul(x).matmul(a);
        let xax = x.matmul(a).matmul(x);
        assert!(axa.relative_diff(a) < 1e-8);
        assert!(xax.relative_diff(x) < 1e-8);
        let ax = a.matmul(x);
        let xa = x.matmul(a);
        assert!(ax.max_abs_diff(&ax.adjoint()) < 1e-8);
        assert!(xa.max_abs_diff(&xa.adjoint()) < 1e-8);
    }

    #[test]
    fn identity_is_its_own_pinv() {
        let i = ComplexMatrix::identity(4);
        assert!(pinv(&i).unwrap().max_abs_diff(&i) < 1e-14);
    }

    #[test]
    fn column_vector_pinv() {
        let a = vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0), C64::new(3.0, 0.5)];
        let col = ComplexMatrix::column_vector(&a);
        let n2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let want = col.adjoint().scale_real(1.0 / n2);
        assert!(pinv(&col).unwrap().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn steering_pair_left_inverse() {
        let a0 = steering_vector(30.0, 8, 0.5, 1.0);
        let a1 = steering_vector(59.5, 8, 0.5, 1.0);
        let a = ComplexMatrix::from_columns(&[a0, a1]);
        let x = pinv(&a).unwrap();
        assert!(x.matmul(&a).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-8);
        assert_moore_penrose(&a, &x);
    }

    #[test]
    fn random_tall_and_wide() {
        for seed in 0..20 {
            let tall = random(7, 3, seed);
            let x = pinv(&tall).unwrap();
            assert_moore_penrose(&tall, &x);
            // pinv(pinv(m)) == m
            assert!(pinv(&x).unwrap().relative_diff(&tall) < 1e-8);

            let wide = random(2, 6, 100 + seed);
            assert_moore_penrose(&wide, &pinv(&wide).unwrap());
        }
    }

    #[test]
    fn rank_deficient_is_singular() {
        let a0 = steering_vector(30.0, 8, 0.5, 1.0);
        let a = ComplexMatrix::from_columns(&[a0.clone(), a0]);
        assert!(matches!(pinv(&a), Err(Error::Singular(_))));
        assert!(matches!(herm_inverse(&ComplexMatrix::zeros(3, 3)), Err(Error::Singular(_))));
    }
}
