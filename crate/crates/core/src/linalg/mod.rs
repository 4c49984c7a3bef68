//! Dense linear algebra kernels: LU solves, symmetric (Jacobi) eigenvalues,
//! and a general real eigendecomposition. Sized for the dictionary scale of
//! this crate (N up to a few hundred), all deterministic.

mod evd;
mod jacobi;
mod lu;

pub use evd::{eigen, Eigen};
pub use jacobi::symmetric_eigenvalues;
pub use lu::LuFactor;

use ndarray::ArrayView2;

/// Frobenius norm.
pub fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// 2-norm condition number of a symmetric matrix via its spectrum:
/// `max |λ| / min |λ|`; `+∞` when the smallest eigenvalue is zero.
pub fn symmetric_condition(a: ArrayView2<'_, f64>) -> crate::error::Result<f64> {
    let eigs = symmetric_eigenvalues(a)?;
    let max = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eigs.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(max / min)
    }
}
