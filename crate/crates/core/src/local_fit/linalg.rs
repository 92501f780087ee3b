use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares solve through the SVD with singular values at or below
/// `rel_threshold * s_max` treated as zero.
pub fn svd_solve(a: DMatrix<f64>, b: &DVector<f64>, rel_threshold: f64) -> Result<DVector<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    let svd = a.svd(true, true);
    let s_max = svd.singular_values.max();
    if !s_max.is_finite() {
        return Err(Error::Numerical("non-finite singular value".into()));
    }
    if s_max == 0.0 {
        return Ok(DVector::zeros(svd.v_t.as_ref().map_or(0, |v| v.ncols())));
    }
    svd.solve(b, rel_threshold * s_max)
        .map_err(|e| Error::Numerical(format!("SVD solve failed: {e}")))
}

/// Solves the symmetric positive-definite system `a x = b` by Cholesky.
/// Returns `None` when the factorization breaks down.
pub fn cholesky_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = Cholesky::new(a)?;
    let x = chol.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_min_norm() {
        // x + y = 2 twice: min-norm solution is (1, 1).
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let x = svd_solve(a, &DVector::from_vec(vec![2.0, 2.0]), 1e-10).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky_solve(a, &DVector::from_vec(vec![1.0, 1.0])).is_none());
    }
}
