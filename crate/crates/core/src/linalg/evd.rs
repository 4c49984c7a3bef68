//! General real eigendecomposition: balance, elimination reduction to upper
//! Hessenberg form with accumulated transformations, shifted QR iteration
//! (hqr2) with eigenvector back-substitution, and back-scaling.
//!
//! The algorithm is the classical EISPACK path as presented in Numerical
//! Recipes §11; complex conjugate eigenvalue pairs are stored adjacently with
//! the positive imaginary part first, and their eigenvectors as
//! `col(j) ± i·col(j+1)` of the vector matrix.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Raw eigendecomposition output (unsorted; pair layout as described above).
pub struct Eigen {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub vectors: Array2<f64>,
}

impl Eigen {
    /// Eigenvalue `k` as a complex number.
    pub fn value(&self, k: usize) -> Complex64 {
        Complex64::new(self.re[k], self.im[k])
    }

    /// Eigenvector `k` as a complex vector, resolving the pair layout.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        let n = self.re.len();
        let mut v = Vec::with_capacity(n);
        if self.im[k] > 0.0 {
            for i in 0..n {
                v.push(Complex64::new(self.vectors[[i, k]], self.vectors[[i, k + 1]]));
            }
        } else if self.im[k] < 0.0 {
            for i in 0..n {
                v.push(Complex64::new(self.vectors[[i, k - 1]], -self.vectors[[i, k]]));
            }
        } else {
            for i in 0..n {
                v.push(Complex64::new(self.vectors[[i, k]], 0.0));
            }
        }
        v
    }
}

/// Full eigendecomposition of a square real matrix.
pub fn eigen(a: ArrayView2<'_, f64>) -> Result<Eigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(CoreError::InvalidArgument("matrix must be square".into()));
    }
    if n == 0 {
        return Err(CoreError::InvalidArgument("matrix must be nonempty".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::EigenFailure { detail: "matrix has non-finite entries".into() });
    }
    let mut h = a.to_owned();
    if n == 1 {
        return Ok(Eigen { re: vec![h[[0, 0]]], im: vec![0.0], vectors: Array2::eye(1) });
    }
    let scale = balance(&mut h);
    let perm = hessenberg(&mut h);
    let mut v = Array2::eye(n);
    accumulate_transform(&h, &mut v, &perm);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    hqr2(&mut h, &mut v, &mut re, &mut im)?;
    // undo balancing: eigenvector rows scale back
    for i in 0..n {
        for j in 0..n {
            v[[i, j]] *= scale[i];
        }
    }
    Ok(Eigen { re, im, vectors: v })
}

/// Parlett–Reinsch balancing by radix powers (exact in floating point).
fn balance(a: &mut Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    let mut scale = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[[j, i]].abs();
                    r += a[[i, j]].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                let mut c_acc = c;
                while c_acc < g {
                    f *= radix;
                    c_acc *= sqrdx;
                }
                g = r * radix;
                while c_acc > g {
                    f /= radix;
                    c_acc /= sqrdx;
                }
                if (c_acc + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    scale[i] *= f;
                    for j in 0..n {
                        a[[i, j]] *= g;
                    }
                    for j in 0..n {
                        a[[j, i]] *= f;
                    }
                }
            }
        }
    }
    scale
}

/// Reduction to upper Hessenberg form by stabilized elimination; returns the
/// row-exchange record needed to accumulate the transformation.
fn hessenberg(a: &mut Array2<f64>) -> Vec<usize> {
    let n = a.nrows();
    let mut perm: Vec<usize> = vec![0; n];
    for m in 1..(n - 1) {
        let mut x = 0.0f64;
        let mut i = m;
        for j in m..n {
            if a[[j, m - 1]].abs() > x.abs() {
                x = a[[j, m - 1]];
                i = j;
            }
        }
        perm[m] = i;
        if i != m {
            for j in (m - 1)..n {
                a.swap([i, j], [m, j]);
            }
            for j in 0..n {
                a.swap([j, i], [j, m]);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[[i, m - 1]];
                if y != 0.0 {
                    y /= x;
                    a[[i, m - 1]] = y;
                    for j in m..n {
                        let sub = y * a[[m, j]];
                        a[[i, j]] -= sub;
                    }
                    for j in 0..n {
                        let add = y * a[[j, i]];
                        a[[j, m]] += add;
                    }
                }
            }
        }
    }
    perm
}

/// Accumulates the elimination transform into `v` (identity on input).
fn accumulate_transform(a: &Array2<f64>, v: &mut Array2<f64>, perm: &[usize]) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for mp in (1..(n - 1)).rev() {
        for k in (mp + 1)..n {
            v[[k, mp]] = a[[k, mp - 1]];
        }
        let i = perm[mp];
        if i != mp {
            for j in mp..n {
                v[[mp, j]] = v[[i, j]];
                v[[i, j]] = 0.0;
            }
            v[[i, mp]] = 1.0;
        }
    }
}

/// Shifted QR iteration with eigenvector back-substitution on an upper
/// Hessenberg matrix, accumulating into `v`.
#[allow(clippy::too_many_lines)]
fn hqr2(a: &mut Array2<f64>, v: &mut Array2<f64>, wr: &mut [f64], wi: &mut [f64]) -> Result<()> {
    let n = a.nrows();
    let eps = f64::EPSILON;
    let mut z = 0.0f64;
    let mut s = 0.0f64;
    let mut r = 0.0f64;
    let mut q;
    #[allow(unused_assignments)]
    let mut p = 0.0f64;
    let mut anorm = 0.0;

    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[[i, j]].abs();
        }
    }

    let mut nn = n - 1;
    let mut t = 0.0;
    'outer: loop {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l > 0 {
                s = a[[l - 1, l - 1]].abs() + a[[l, l]].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[[l, l - 1]].abs() <= eps * s {
                    a[[l, l - 1]] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[[nn, nn]];
            if l == nn {
                // one root found
                wr[nn] = x + t;
                a[[nn, nn]] = x + t;
                wi[nn] = 0.0;
                if nn == 0 {
                    break 'outer;
                }
                nn -= 1;
            } else {
                let mut y = a[[nn - 1, nn - 1]];
                let mut w = a[[nn, nn - 1]] * a[[nn - 1, nn]];
                if l == nn - 1 {
                    // two roots found
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    a[[nn, nn]] = x;
                    a[[nn - 1, nn - 1]] = y + t;
                    if q >= 0.0 {
                        // real pair
                        z = p + z.copysign(p);
                        wr[nn - 1] = x + z;
                        wr[nn] = wr[nn - 1];
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                        x = a[[nn, nn - 1]];
                        s = x.abs() + z.abs();
                        p = x / s;
                        q = z / s;
                        r = (p * p + q * q).sqrt();
                        p /= r;
                        q /= r;
                        for j in (nn - 1)..n {
                            z = a[[nn - 1, j]];
                            a[[nn - 1, j]] = q * z + p * a[[nn, j]];
                            a[[nn, j]] = q * a[[nn, j]] - p * z;
                        }
                        for i in 0..=nn {
                            z = a[[i, nn - 1]];
                            a[[i, nn - 1]] = q * z + p * a[[i, nn]];
                            a[[i, nn]] = q * a[[i, nn]] - p * z;
                        }
                        for i in 0..n {
                            z = v[[i, nn - 1]];
                            v[[i, nn - 1]] = q * z + p * v[[i, nn]];
                            v[[i, nn]] = q * v[[i, nn]] - p * z;
                        }
                    } else {
                        // complex pair
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = z;
                        wi[nn] = -z;
                    }
                    if nn <= 1 {
                        break 'outer;
                    }
                    nn -= 2;
                } else {
                    // no roots yet; perform a QR step
                    if its == 40 {
                        return Err(CoreError::EigenFailure {
                            detail: format!("QR iteration did not converge at index {nn}"),
                        });
                    }
                    if its == 10 || its == 20 || its == 30 {
                        // exceptional shift
                        t += x;
                        for i in 0..=nn {
                            a[[i, i]] -= x;
                        }
                        s = a[[nn, nn - 1]].abs() + a[[nn - 1, nn - 2]].abs();
                        y = 0.75 * s;
                        x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a[[m, m]];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[[m + 1, m]] + a[[m, m + 1]];
                        q = a[[m + 1, m + 1]] - z - r - s;
                        r = a[[m + 2, m + 1]];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[[m, m - 1]].abs() * (q.abs() + r.abs());
                        let vv =
                            p.abs() * (a[[m - 1, m - 1]].abs() + z.abs() + a[[m + 1, m + 1]].abs());
                        if u <= eps * vv {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..(nn - 1) {
                        a[[i + 2, i]] = 0.0;
                        if i != m {
                            a[[i + 2, i - 1]] = 0.0;
                        }
                    }
                    for k in m..nn {
                        if k != m {
                            p = a[[k, k - 1]];
                            q = a[[k + 1, k - 1]];
                            r = 0.0;
                            if k + 1 != nn {
                                r = a[[k + 2, k - 1]];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let sgn = (p * p + q * q + r * r).sqrt().copysign(p);
                        if sgn != 0.0 {
                            if k == m {
                                if l != m {
                                    a[[k, k - 1]] = -a[[k, k - 1]];
                                }
                            } else {
                                a[[k, k - 1]] = -sgn * x;
                            }
                            p += sgn;
                            x = p / sgn;
                            y = q / sgn;
                            z = r / sgn;
                            q /= p;
                            r /= p;
                            for j in k..n {
                                p = a[[k, j]] + q * a[[k + 1, j]];
                                if k + 1 != nn {
                                    p += r * a[[k + 2, j]];
                                    a[[k + 2, j]] -= p * z;
                                }
                                a[[k + 1, j]] -= p * y;
                                a[[k, j]] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in 0..=mmin {
                                p = x * a[[i, k]] + y * a[[i, k + 1]];
                                if k + 1 != nn {
                                    p += z * a[[i, k + 2]];
                                    a[[i, k + 2]] -= p * r;
                                }
                                a[[i, k + 1]] -= p * q;
                                a[[i, k]] -= p;
                            }
                            for i in 0..n {
                                p = x * v[[i, k]] + y * v[[i, k + 1]];
                                if k + 1 != nn {
                                    p += z * v[[i, k + 2]];
                                    v[[i, k + 2]] -= p * r;
                                }
                                v[[i, k + 1]] -= p * q;
                                v[[i, k]] -= p;
                            }
                        }
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }

    // back-substitution for the eigenvectors of the quasi-triangular form
    if anorm != 0.0 {
        for nn in (0..n).rev() {
            p = wr[nn];
            q = wi[nn];
            let na = nn.wrapping_sub(1);
            if q == 0.0 {
                // real eigenvalue
                let mut m = nn;
                a[[nn, nn]] = 1.0;
                if nn > 0 {
                    let mut i = nn - 1;
                    loop {
                        let w = a[[i, i]] - p;
                        r = 0.0;
                        for j in m..=nn {
                            r += a[[i, j]] * a[[j, nn]];
                        }
                        if wi[i] < 0.0 {
                            z = w;
                            s = r;
                        } else {
                            m = i;
                            if wi[i] == 0.0 {
                                let mut tt = w;
                                if tt == 0.0 {
                                    tt = eps * anorm;
                                }
                                a[[i, nn]] = -r / tt;
                            } else {
                                let x = a[[i, i + 1]];
                                let y = a[[i + 1, i]];
                                q = (wr[i] - p) * (wr[i] - p) + wi[i] * wi[i];
                                let tt = (x * s - z * r) / q;
                                a[[i, nn]] = tt;
                                if x.abs() > z.abs() {
                                    a[[i + 1, nn]] = (-r - w * tt) / x;
                                } else {
                                    a[[i + 1, nn]] = (-s - y * tt) / z;
                                }
                            }
                            let tt = a[[i, nn]].abs();
                            if eps * tt * tt > 1.0 {
                                for j in i..=nn {
                                    a[[j, nn]] /= tt;
                                }
                            }
                        }
                        if i == 0 {
                            break;
                        }
                        i -= 1;
                    }
                }
            } else if q < 0.0 {
                // complex pair; solve for the column pair (na, nn)
                let mut m = na;
                if a[[nn, na]].abs() > a[[na, nn]].abs() {
                    a[[na, na]] = q / a[[nn, na]];
                    a[[na, nn]] = -(a[[nn, nn]] - p) / a[[nn, na]];
                } else {
                    let temp = Complex64::new(0.0, -a[[na, nn]])
                        / Complex64::new(a[[na, na]] - p, q);
                    a[[na, na]] = temp.re;
                    a[[na, nn]] = temp.im;
                }
                a[[nn, na]] = 0.0;
                a[[nn, nn]] = 1.0;
                if nn >= 2 {
                    for i in (0..(nn - 1)).rev() {
                        let w = a[[i, i]] - p;
                        let mut ra = 0.0;
                        let mut sa = 0.0;
                        for j in m..=nn {
                            ra += a[[i, j]] * a[[j, na]];
                            sa += a[[i, j]] * a[[j, nn]];
                        }
                        if wi[i] < 0.0 {
                            z = w;
                            r = ra;
                            s = sa;
                        } else {
                            m = i;
                            if wi[i] == 0.0 {
                                let temp = Complex64::new(-ra, -sa) / Complex64::new(w, q);
                                a[[i, na]] = temp.re;
                                a[[i, nn]] = temp.im;
                            } else {
                                let x = a[[i, i + 1]];
                                let y = a[[i + 1, i]];
                                let mut vr =
                                    (wr[i] - p) * (wr[i] - p) + wi[i] * wi[i] - q * q;
                                let vi = 2.0 * q * (wr[i] - p);
                                if vr == 0.0 && vi == 0.0 {
                                    vr = eps
                                        * anorm
                                        * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                                }
                                let temp = Complex64::new(
                                    x * r - z * ra + q * sa,
                                    x * s - z * sa - q * ra,
                                ) / Complex64::new(vr, vi);
                                a[[i, na]] = temp.re;
                                a[[i, nn]] = temp.im;
                                if x.abs() > z.abs() + q.abs() {
                                    a[[i + 1, na]] =
                                        (-ra - w * a[[i, na]] + q * a[[i, nn]]) / x;
                                    a[[i + 1, nn]] =
                                        (-sa - w * a[[i, nn]] - q * a[[i, na]]) / x;
                                } else {
                                    let temp = Complex64::new(
                                        -r - y * a[[i, na]],
                                        -s - y * a[[i, nn]],
                                    ) / Complex64::new(z, q);
                                    a[[i + 1, na]] = temp.re;
                                    a[[i + 1, nn]] = temp.im;
                                }
                            }
                        }
                        let tt = a[[i, na]].abs().max(a[[i, nn]].abs());
                        if eps * tt * tt > 1.0 {
                            for j in i..=nn {
                                a[[j, na]] /= tt;
                                a[[j, nn]] /= tt;
                            }
                        }
                    }
                }
            }
        }

        // transform back to the original basis
        for j in (0..n).rev() {
            for i in 0..n {
                let mut zz = 0.0;
                for k in 0..=j {
                    zz += v[[i, k]] * a[[k, j]];
                }
                v[[i, j]] = zz;
            }
        }
    }
    Ok(())
}
