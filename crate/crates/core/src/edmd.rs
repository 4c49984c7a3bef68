//! Data-driven transfer-operator estimation: Gram and structure matrices
//! from snapshot pairs, the projected Koopman and Perron–Frobenius matrices,
//! and their spectra.
//!
//! The Koopman matrix satisfies `K̂ᵀ = Ĉ·(Ĝ + reg·I)⁻¹`, computed by solving
//! `(Ĝ + reg·I)·K̂ = Ĉᵀ`; the Perron–Frobenius matrix solves
//! `(Ĝ + reg·I)·P̂ = Ĉ`. Both solves equilibrate the Gram matrix to unit
//! diagonal first (exact rescaling, identical solution), which is also the
//! scaling in which the reported condition number is meaningful.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::data::PairDataSet;
use crate::dictionary::{Dictionary, DictionaryDescriptor};
use crate::error::{CoreError, Result};
use crate::linalg::{eigen, frobenius, symmetric_condition, LuFactor};

/// Above this condition number (after unit-diagonal scaling) the regularized
/// Gram matrix is treated as numerically singular.
pub const GRAM_CONDITION_LIMIT: f64 = 1e14;

const ASSEMBLY_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Koopman,
    PerronFrobenius,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorKind::Koopman => write!(f, "koopman"),
            OperatorKind::PerronFrobenius => write!(f, "perron_frobenius"),
        }
    }
}

/// `[Ĝ]_{ij} = (1/M)·Σ_m ψ_i(ξ^m)·ψ_j(ξ^m)`, exactly symmetric by
/// construction (upper triangle computed, then mirrored).
pub fn gram_matrix(dict: &Dictionary, xi: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if xi.nrows() == 0 {
        return Err(CoreError::EmptyMeasure);
    }
    let n = dict.size();
    let rows: Vec<usize> = (0..xi.nrows()).collect();
    let partials: Vec<Array2<f64>> = rows
        .par_chunks(ASSEMBLY_CHUNK)
        .map(|chunk| -> Result<Array2<f64>> {
            let mut local = Array2::zeros((n, n));
            let mut psi = vec![0.0; n];
            for &m in chunk {
                dict.eval_into(xi.row(m).as_slice().expect("row-major"), &mut psi)?;
                for i in 0..n {
                    let pi = psi[i];
                    if pi == 0.0 {
                        continue;
                    }
                    for j in i..n {
                        local[[i, j]] += pi * psi[j];
                    }
                }
            }
            Ok(local)
        })
        .collect::<Result<_>>()?;

    let mut g = Array2::zeros((n, n));
    for part in partials {
        g += &part;
    }
    let scale = 1.0 / xi.nrows() as f64;
    for i in 0..n {
        for j in i..n {
            let v = g[[i, j]] * scale;
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    Ok(g)
}

/// `[Ĉ]_{ij} = (1/M)·Σ_m ψ_i(X_T^m)·ψ_j(ξ^m)`: row index evaluates the
/// terminal point, column index the initial point.
pub fn structure_matrix(dict: &Dictionary, data: &PairDataSet) -> Result<Array2<f64>> {
    let n = dict.size();
    let rows: Vec<usize> = (0..data.count()).collect();
    let xi = data.xi();
    let xt = data.x_t();
    let partials: Vec<Array2<f64>> = rows
        .par_chunks(ASSEMBLY_CHUNK)
        .map(|chunk| -> Result<Array2<f64>> {
            let mut local = Array2::zeros((n, n));
            let mut psi_i = vec![0.0; n];
            let mut psi_t = vec![0.0; n];
            for &m in chunk {
                dict.eval_into(xi.row(m).as_slice().expect("row-major"), &mut psi_i)?;
                dict.eval_into(xt.row(m).as_slice().expect("row-major"), &mut psi_t)?;
                for i in 0..n {
                    let pt = psi_t[i];
                    if pt == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        local[[i, j]] += pt * psi_i[j];
                    }
                }
            }
            Ok(local)
        })
        .collect::<Result<_>>()?;

    let mut c = Array2::zeros((n, n));
    for part in partials {
        c += &part;
    }
    c *= 1.0 / data.count() as f64;
    Ok(c)
}

fn check_gram(g: ArrayView2<'_, f64>) -> Result<()> {
    let n = g.nrows();
    if n != g.ncols() {
        return Err(CoreError::InvalidArgument("Gram matrix must be square".into()));
    }
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if (g[[i, j]] - g[[j, i]]).abs() > 1e-12 * scale {
                return Err(CoreError::InvalidArgument("Gram matrix must be symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Solves `(G + reg·I)·X = rhs` through the unit-diagonal-scaled system and
/// reports the scaled condition number.
fn regularized_solve(
    g: ArrayView2<'_, f64>,
    rhs: ArrayView2<'_, f64>,
    reg: f64,
) -> Result<(Array2<f64>, f64)> {
    let n = g.nrows();
    let mut a = g.to_owned();
    for i in 0..n {
        a[[i, i]] += reg;
    }
    let mut d = vec![0.0; n];
    for i in 0..n {
        let aii = a[[i, i]];
        if !(aii > 0.0) {
            return Err(CoreError::GramSingular { cond: f64::INFINITY });
        }
        d[i] = aii.sqrt();
    }
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] /= d[i] * d[j];
        }
    }
    let cond = symmetric_condition(a.view())?;
    if !cond.is_finite() || cond > GRAM_CONDITION_LIMIT {
        return Err(CoreError::GramSingular { cond });
    }
    let mut b = rhs.to_owned();
    for i in 0..n {
        for j in 0..b.ncols() {
            b[[i, j]] /= d[i];
        }
    }
    let lu = LuFactor::new(a.view()).map_err(|_| CoreError::GramSingular { cond })?;
    let mut x = lu.solve_matrix(b.view())?;
    for i in 0..n {
        for j in 0..x.ncols() {
            x[[i, j]] /= d[i];
        }
    }
    Ok((x, cond))
}

/// The projected Koopman matrix `K̂` with `K̂ᵀ = Ĉ·(Ĝ + reg·I)⁻¹`, plus the
/// Gram condition estimate.
pub fn koopman_matrix(
    g: ArrayView2<'_, f64>,
    c: ArrayView2<'_, f64>,
    reg: f64,
) -> Result<(Array2<f64>, f64)> {
    check_gram(g)?;
    regularized_solve(g, c.t(), reg)
}

/// The projected Perron–Frobenius matrix `P̂` with `P̂ᵀ = Ĉᵀ·(Ĝ + reg·I)⁻¹`.
pub fn perron_matrix(
    g: ArrayView2<'_, f64>,
    c: ArrayView2<'_, f64>,
    reg: f64,
) -> Result<(Array2<f64>, f64)> {
    check_gram(g)?;
    regularized_solve(g, c, reg)
}

/// Sorted eigenpairs of an operator matrix.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub operator: OperatorKind,
    /// Sorted by modulus descending, ties by real part descending; complex
    /// conjugate pairs adjacent with positive imaginary part first.
    pub eigenvalues: Vec<Complex64>,
    /// One column per eigenvalue, unit 2-norm, largest-modulus component
    /// rotated to be real positive.
    pub eigenvectors: Array2<Complex64>,
    /// `‖A·v − λ·v‖₂` per pair.
    pub residuals: Vec<f64>,
    /// Frobenius norm of the operator matrix.
    pub matrix_norm: f64,
}

/// Dense eigendecomposition of `a`, keeping the `n_eig` dominant pairs.
pub fn spectrum(a: ArrayView2<'_, f64>, n_eig: usize, operator: OperatorKind) -> Result<SpectralResult> {
    let n = a.nrows();
    if n_eig > n {
        return Err(CoreError::InvalidArgument(format!(
            "requested {n_eig} eigenpairs from a {n}×{n} matrix"
        )));
    }
    let eig = eigen(a)?;
    let norm = frobenius(a);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let mi = eig.value(i).norm();
        let mj = eig.value(j).norm();
        mj.total_cmp(&mi)
            .then(eig.re[j].total_cmp(&eig.re[i]))
            .then(eig.im[j].total_cmp(&eig.im[i]))
    });

    let keep = &order[..n_eig];
    let mut eigenvalues = Vec::with_capacity(n_eig);
    let mut eigenvectors = Array2::from_elem((n, n_eig), Complex64::new(0.0, 0.0));
    let mut residuals = Vec::with_capacity(n_eig);

    for (slot, &k) in keep.iter().enumerate() {
        let lambda = eig.value(k);
        let mut v = eig.vector(k);
        // unit norm, then rotate the largest-modulus component to be real
        // positive so output is reproducible across eigensolver details
        let norm_v: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_v == 0.0 {
            return Err(CoreError::EigenFailure { detail: format!("zero eigenvector for λ = {lambda}") });
        }
        for z in v.iter_mut() {
            *z /= norm_v;
        }
        let mut max_mod = 0.0;
        let mut max_idx = 0;
        for (i, z) in v.iter().enumerate() {
            if z.norm() > max_mod * (1.0 + 1e-12) {
                max_mod = z.norm();
                max_idx = i;
            }
        }
        let phase = v[max_idx] / v[max_idx].norm();
        for z in v.iter_mut() {
            *z /= phase;
        }
        // residual ‖A v − λ v‖
        let mut res = 0.0f64;
        for i in 0..n {
            let mut av = Complex64::new(0.0, 0.0);
            for j in 0..n {
                av += a[[i, j]] * v[j];
            }
            res += (av - lambda * v[i]).norm_sqr();
        }
        let res = res.sqrt();
        if res > 1e-8 * norm.max(1e-300) {
            return Err(CoreError::EigenFailure {
                detail: format!(
                    "eigenpair residual {res:.3e} exceeds 1e-8·‖A‖ (‖A‖_F = {norm:.3e}, λ = {lambda})"
                ),
            });
        }
        for i in 0..n {
            eigenvectors[[i, slot]] = v[i];
        }
        eigenvalues.push(lambda);
        residuals.push(res);
    }

    Ok(SpectralResult { operator, eigenvalues, eigenvectors, residuals, matrix_norm: norm })
}

/// `f(x) = Σ_i v_i·ψ_i(x)` evaluated on every row of `xs`.
pub fn eval_eigenfunction(
    dict: &Dictionary,
    coefficients: &[Complex64],
    xs: ArrayView2<'_, f64>,
) -> Result<Vec<Complex64>> {
    if coefficients.len() != dict.size() {
        return Err(CoreError::DimensionMismatch { expected: dict.size(), got: coefficients.len() });
    }
    let mut psi = vec![0.0; dict.size()];
    let mut out = Vec::with_capacity(xs.nrows());
    for x in xs.rows() {
        dict.eval_into(x.as_slice().expect("row-major"), &mut psi)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, p) in coefficients.iter().zip(psi.iter()) {
            if *p != 0.0 {
                acc += c * *p;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EdmdOptions {
    /// Ridge parameter added to the Gram diagonal (0 = plain solve).
    pub reg: f64,
    /// Number of dominant eigenpairs to extract.
    pub n_eig: usize,
    /// Drop dictionary entries whose Gram diagonal is zero (bins no data
    /// point touches) before solving.
    pub drop_empty: bool,
}

impl Default for EdmdOptions {
    fn default() -> Self {
        Self { reg: 0.0, n_eig: 6, drop_empty: true }
    }
}

/// All matrices of one estimation run.
#[derive(Debug, Clone)]
pub struct OperatorMatrices {
    pub gram: Array2<f64>,
    pub structure: Array2<f64>,
    pub koopman: Array2<f64>,
    pub perron: Array2<f64>,
    pub cond_gram: f64,
    pub sample_count: usize,
    pub reg: f64,
    pub dictionary: DictionaryDescriptor,
}

/// Estimation output: matrices, both spectra, and eigenfunction evaluators.
#[derive(Debug, Clone)]
pub struct EdmdResult {
    pub matrices: OperatorMatrices,
    pub koopman_spectrum: SpectralResult,
    pub perron_spectrum: SpectralResult,
    /// Indices of dictionary entries kept after empty-bin dropping; the
    /// matrices and eigenvectors live on this restricted index set.
    pub kept: Vec<usize>,
    dictionary: Dictionary,
}

impl EdmdResult {
    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    fn spectrum_of(&self, operator: OperatorKind) -> &SpectralResult {
        match operator {
            OperatorKind::Koopman => &self.koopman_spectrum,
            OperatorKind::PerronFrobenius => &self.perron_spectrum,
        }
    }

    /// Values of eigenfunction `l` on the rows of `xs`, mapping restricted
    /// eigenvector coefficients back to the full dictionary.
    pub fn eigenfunction_values(
        &self,
        operator: OperatorKind,
        l: usize,
        xs: ArrayView2<'_, f64>,
    ) -> Result<Vec<Complex64>> {
        let spec = self.spectrum_of(operator);
        if l >= spec.eigenvalues.len() {
            return Err(CoreError::InvalidArgument(format!(
                "eigenfunction index {l} out of range ({} available)",
                spec.eigenvalues.len()
            )));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.dictionary.size()];
        for (row, &full_idx) in self.kept.iter().enumerate() {
            coeffs[full_idx] = spec.eigenvectors[[row, l]];
        }
        eval_eigenfunction(&self.dictionary, &coeffs, xs)
    }
}

/// Runs the full estimation: Ĝ and Ĉ from the pairs, empty-bin dropping,
/// regularized solves for K̂ and P̂, and both spectra.
pub fn edmd(dict: &Dictionary, data: &PairDataSet, opts: &EdmdOptions) -> Result<EdmdResult> {
    if data.dim() != dict.dim() {
        return Err(CoreError::DimensionMismatch { expected: dict.dim(), got: data.dim() });
    }
    let g_full = gram_matrix(dict, data.xi())?;
    let c_full = structure_matrix(dict, data)?;

    let n = dict.size();
    let kept: Vec<usize> = if opts.drop_empty {
        (0..n).filter(|&i| g_full[[i, i]] > 0.0).collect()
    } else {
        (0..n).collect()
    };
    if kept.is_empty() {
        return Err(CoreError::GramSingular { cond: f64::INFINITY });
    }
    if kept.len() < n {
        eprintln!(
            "edmd: dropping {} dictionary entr{} with empty support ({} kept)",
            n - kept.len(),
            if n - kept.len() == 1 { "y" } else { "ies" },
            kept.len()
        );
    }
    let (g, c) = if kept.len() < n {
        let k = kept.len();
        let mut g = Array2::zeros((k, k));
        let mut c = Array2::zeros((k, k));
        for (a, &i) in kept.iter().enumerate() {
            for (b, &j) in kept.iter().enumerate() {
                g[[a, b]] = g_full[[i, j]];
                c[[a, b]] = c_full[[i, j]];
            }
        }
        (g, c)
    } else {
        (g_full, c_full)
    };

    let (koopman, cond) = koopman_matrix(g.view(), c.view(), opts.reg)?;
    let (perron, _) = perron_matrix(g.view(), c.view(), opts.reg)?;
    let n_eig = opts.n_eig.min(kept.len());
    let koopman_spectrum = spectrum(koopman.view(), n_eig, OperatorKind::Koopman)?;
    let perron_spectrum = spectrum(perron.view(), n_eig, OperatorKind::PerronFrobenius)?;

    Ok(EdmdResult {
        matrices: OperatorMatrices {
            gram: g,
            structure: c,
            koopman,
            perron,
            cond_gram: cond,
            sample_count: data.count(),
            reg: opts.reg,
            dictionary: dict.descriptor(),
        },
        koopman_spectrum,
        perron_spectrum,
        kept,
        dictionary: dict.clone(),
    })
}
