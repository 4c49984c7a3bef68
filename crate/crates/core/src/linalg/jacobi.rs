//! Cyclic Jacobi eigenvalues for symmetric matrices. Slow but extremely
//! robust; used for condition estimates, rank checks, and as an independent
//! cross-check of the general eigensolver on symmetric inputs.

use ndarray::ArrayView2;

use crate::error::{CoreError, Result};

/// Eigenvalues of a symmetric matrix, ascending. The input is validated to be
/// symmetric to 1e-12 relative.
pub fn symmetric_eigenvalues(a: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(CoreError::InvalidArgument("matrix must be square".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[[i, j]] - a[[j, i]]).abs() > 1e-12 * scale {
                return Err(CoreError::InvalidArgument(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut m = a.to_owned();
    let tol = 1e-15;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j] ] * m[[i, j]];
            }
        }
        if off.sqrt() <= tol * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol * scale {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    m[[k, p]] = c * akp - s * akq;
                    m[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[[p, k]];
                    let aqk = m[[q, k]];
                    m[[p, k]] = c * apk - s * aqk;
                    m[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}
