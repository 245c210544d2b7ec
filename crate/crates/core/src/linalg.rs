//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hard limit on the estimated 2-norm condition number of a solved system.
pub const MAX_CONDITION: f64 = 1e12;

pub fn singular_values<T: Real>(a: &DMatrix<T>) -> DVector<T> {
    a.clone().svd(false, false).singular_values
}

/// Ratio of the largest to the smallest singular value (`inf` when singular).
pub fn condition_number<T: Real>(a: &DMatrix<T>) -> T {
    let sv = singular_values(a);
    let max = sv.max();
    let min = sv.min();
    if min <= T::zero() {
        T::max_value().unwrap_or(max)
    } else {
        max / min
    }
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(a: &DMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    singular_values(a).max()
}

/// Smallest eigenvalue of the symmetric part `(A + Aᵀ)/2`.
pub fn min_symmetric_eigenvalue<T: Real>(a: &DMatrix<T>) -> T {
    let sym = (a + a.transpose()) * T::lit(0.5);
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Numerical rank with singular values below `rel_tol * σ_max` treated as zero.
pub fn rank<T: Real>(a: &DMatrix<T>, rel_tol: T) -> usize {
    let sv = singular_values(a);
    let max = sv.max();
    if max <= T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Solves `a x = b` with partial-pivot LU, rejecting singular or
/// badly conditioned systems. `what` names the system in error messages.
pub fn solve<T: Real>(a: &DMatrix<T>, b: &DVector<T>, what: &str) -> Result<DVector<T>> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "{what}: shape mismatch ({}x{} system, rhs length {})",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let cond = condition_number(a);
    if !(cond.to_f64_lossy() <= MAX_CONDITION) {
        return Err(Error::Numerical(format!(
            "{what}: condition number {:e} exceeds {MAX_CONDITION:e}",
            cond.to_f64_lossy()
        )));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical(format!("{what}: singular matrix")))
}

/// Solves `a X = B` for a matrix right-hand side.
pub fn solve_matrix<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    let cond = condition_number(a);
    if !(cond.to_f64_lossy() <= MAX_CONDITION) {
        return Err(Error::Numerical(format!(
            "{what}: condition number {:e} exceeds {MAX_CONDITION:e}",
            cond.to_f64_lossy()
        )));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical(format!("{what}: singular matrix")))
}
