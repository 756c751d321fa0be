//! Dense helpers shared by the diagnostics: pseudoinverse, numerical rank and
//! power iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng;

/// Relative singular-value cutoff used for pseudoinverses and ranks.
pub(crate) const RELATIVE_CUTOFF: f64 = 1e-10;

/// Moore-Penrose pseudoinverse of a symmetric positive semidefinite matrix,
/// discarding eigenvalues below `RELATIVE_CUTOFF` times the largest.
pub(crate) fn psd_pseudoinverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let cutoff = RELATIVE_CUTOFF * largest;
    let mut out = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lambda;
        }
    }
    out
}

/// Numerical rank with a cutoff relative to the largest singular value.
#[cfg(test)]
pub(crate) fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let largest = a.clone().singular_values().max();
    rank_above(a, RELATIVE_CUTOFF * largest)
}

/// Number of singular values strictly above `cutoff` (none for a zero matrix).
pub(crate) fn rank_above(a: &DMatrix<f64>, cutoff: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Largest singular value of a dense matrix.
pub(crate) fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// Largest singular value of a linear map given by its action and adjoint,
/// by power iteration on `AᵀA` from a seeded start vector.
pub(crate) fn largest_singular_value(
    dim: usize,
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    apply_transpose: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<f64> {
    const MAX_ITERS: usize = 1000;
    const REL_TOL: f64 = 1e-6;
    // Fixed seed: identical inputs give identical estimates.
    let mut r = rng::seeded(0x5eed_5eed);
    let mut v = DVector::from_fn(dim, |_, _| 1.0 + 0.5 * rng::standard_normal(&mut r));
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    v /= norm;
    let mut estimate = 0.0;
    for _ in 0..MAX_ITERS {
        let w = apply_transpose(&apply(&v));
        let next = w.norm();
        if next == 0.0 {
            break;
        }
        v = w / next;
        let converged = (next - estimate).abs() <= REL_TOL * next;
        estimate = next;
        if converged {
            break;
        }
    }
    if estimate == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(estimate.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pseudoinverse_of_rank_deficient_matrix() {
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let a = &v * v.transpose();
        let pinv = psd_pseudoinverse(&a);
        assert_relative_eq!(&a * &pinv * &a, a, epsilon = 1e-12);
        assert_relative_eq!(pinv[(0, 0)], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn rank_counts_independent_columns() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 0.0]);
        assert_eq!(rank(&a), 2);
        assert_eq!(rank(&DMatrix::zeros(2, 2)), 0);
    }

    #[test]
    fn power_iteration_on_dense_matrix() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, -1.0]);
        let s = largest_singular_value(2, |v| &a * v, |w| a.transpose() * w).unwrap();
        assert_relative_eq!(s, 3f64.sqrt(), max_relative = 1e-6);
    }
}
