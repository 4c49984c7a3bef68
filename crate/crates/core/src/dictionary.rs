//! Basis-function dictionaries with batch evaluation: 1-D indicator bins,
//! multivariate monomials, and spherical Voronoi-cell indicators.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Serializable description of a dictionary, as accepted in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DictionaryDescriptor {
    Indicator1d { a: f64, b: f64, n: usize },
    Monomial { max_order: u32, #[serde(default = "one")] dim: usize },
    VoronoiSphere { n: usize },
}

fn one() -> usize {
    1
}

impl DictionaryDescriptor {
    pub fn build(&self) -> Result<Dictionary> {
        match *self {
            DictionaryDescriptor::Indicator1d { a, b, n } => Dictionary::indicator_1d(a, b, n),
            DictionaryDescriptor::Monomial { max_order, dim } => Dictionary::monomial(dim, max_order),
            DictionaryDescriptor::VoronoiSphere { n } => Dictionary::voronoi_sphere(n),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// Bins `[a + i·w, a + (i+1)·w)` on `[a, b]`, last bin right-closed;
    /// outside the interval every entry is zero.
    Indicator1d { a: f64, b: f64, bins: usize },
    /// All monomials of total degree ≤ max_order, graded order, within a
    /// degree the leading variable first.
    Monomial { powers: Vec<Vec<u32>> },
    /// Indicator of the nearest of `n` Fibonacci-spiral centers on the unit
    /// sphere; ties break to the lowest index.
    VoronoiSphere { centers: Array2<f64> },
}

/// An ordered set of N basis functions on R^d with batch evaluation.
#[derive(Debug, Clone)]
pub struct Dictionary {
    kind: Kind,
    dim: usize,
    size: usize,
    bound: Option<f64>,
    lipschitz: Option<f64>,
}

impl Dictionary {
    pub fn indicator_1d(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) {
            return Err(CoreError::InvalidArgument(format!(
                "interval must satisfy a < b, got [{a}, {b}]"
            )));
        }
        if n < 2 {
            return Err(CoreError::InvalidArgument("need at least two bins".into()));
        }
        Ok(Self {
            kind: Kind::Indicator1d { a, b, bins: n },
            dim: 1,
            size: n,
            bound: Some(1.0),
            // indicators are not Lipschitz
            lipschitz: None,
        })
    }

    pub fn monomial(dim: usize, max_order: u32) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidArgument("dimension must be positive".into()));
        }
        if max_order < 1 {
            return Err(CoreError::InvalidArgument("max_order must be at least 1".into()));
        }
        let mut powers = Vec::new();
        for degree in 0..=max_order {
            let mut tuple = vec![0u32; dim];
            emit_compositions(degree, 0, &mut tuple, &mut powers);
        }
        let size = powers.len();
        Ok(Self {
            kind: Kind::Monomial { powers },
            dim,
            size,
            // unbounded on R^d; no global Lipschitz constant either
            bound: None,
            lipschitz: None,
        })
    }

    pub fn voronoi_sphere(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(CoreError::InvalidArgument("need at least four Voronoi cells".into()));
        }
        let centers = fibonacci_sphere(n);
        Ok(Self {
            kind: Kind::VoronoiSphere { centers },
            dim: 3,
            size: n,
            bound: Some(1.0),
            lipschitz: None,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Uniform bound γ on |ψ_n|, when one exists.
    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    /// Uniform Lipschitz constant θ, when one exists.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Whether every evaluation is a one-hot partition vector.
    pub fn is_partition(&self) -> bool {
        matches!(self.kind, Kind::VoronoiSphere { .. })
    }

    /// Whether evaluations are one-hot inside the covered region.
    pub fn is_indicator(&self) -> bool {
        !matches!(self.kind, Kind::Monomial { .. })
    }

    pub fn descriptor(&self) -> DictionaryDescriptor {
        match &self.kind {
            Kind::Indicator1d { a, b, bins } => {
                DictionaryDescriptor::Indicator1d { a: *a, b: *b, n: *bins }
            }
            Kind::Monomial { powers } => DictionaryDescriptor::Monomial {
                max_order: powers.last().map_or(1, |p| p.iter().sum()),
                dim: self.dim,
            },
            Kind::VoronoiSphere { centers } => {
                DictionaryDescriptor::VoronoiSphere { n: centers.nrows() }
            }
        }
    }

    /// For 1-D indicator dictionaries, the bin centers (plot support).
    pub fn bin_centers(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Indicator1d { a, b, bins } => {
                let w = (b - a) / *bins as f64;
                Some((0..*bins).map(|i| a + (i as f64 + 0.5) * w).collect())
            }
            _ => None,
        }
    }

    /// For spherical dictionaries, the cell centers.
    pub fn cell_centers(&self) -> Option<ArrayView2<'_, f64>> {
        match &self.kind {
            Kind::VoronoiSphere { centers } => Some(centers.view()),
            _ => None,
        }
    }

    /// Evaluates all N basis functions at `x`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.size);
        match &self.kind {
            Kind::Indicator1d { a, b, bins } => {
                out.fill(0.0);
                let v = x[0];
                if v < *a || v > *b || !v.is_finite() {
                    return Ok(());
                }
                let w = (b - a) / *bins as f64;
                let idx = (((v - a) / w) as usize).min(bins - 1);
                out[idx] = 1.0;
            }
            Kind::Monomial { powers } => {
                for (slot, pw) in out.iter_mut().zip(powers.iter()) {
                    let mut value = 1.0;
                    for (xi, &k) in x.iter().zip(pw.iter()) {
                        if k > 0 {
                            value *= xi.powi(k as i32);
                        }
                    }
                    *slot = value;
                }
            }
            Kind::VoronoiSphere { centers } => {
                out.fill(0.0);
                let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(CoreError::ZeroVector);
                }
                let (ux, uy, uz) = (x[0] / norm, x[1] / norm, x[2] / norm);
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for (i, c) in centers.rows().into_iter().enumerate() {
                    let dot = ux * c[0] + uy * c[1] + uz * c[2];
                    if dot > best {
                        best = dot;
                        best_idx = i;
                    }
                }
                out[best_idx] = 1.0;
            }
        }
        Ok(())
    }

    /// Evaluates the dictionary on every row of `xs`, returning M × N.
    pub fn eval_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if xs.ncols() != self.dim {
            return Err(CoreError::DimensionMismatch { expected: self.dim, got: xs.ncols() });
        }
        let mut out = Array2::zeros((xs.nrows(), self.size));
        let mut row_buf = vec![0.0; self.size];
        for (m, x) in xs.rows().into_iter().enumerate() {
            self.eval_into(x.as_slice().expect("row-major"), &mut row_buf)?;
            out.row_mut(m).iter_mut().zip(row_buf.iter()).for_each(|(o, v)| *o = *v);
        }
        Ok(out)
    }
}

/// Graded order: all exponent tuples with the given total degree, leading
/// variable's exponent descending.
fn emit_compositions(remaining: u32, pos: usize, tuple: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == tuple.len() - 1 {
        tuple[pos] = remaining;
        out.push(tuple.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        tuple[pos] = k;
        emit_compositions(remaining - k, pos + 1, tuple, out);
    }
}

/// Near-uniform deterministic points on the unit sphere (Fibonacci spiral).
fn fibonacci_sphere(n: usize) -> Array2<f64> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let mut centers = Array2::zeros((n, 3));
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let theta = golden_angle * i as f64;
        centers[[i, 0]] = r * theta.cos();
        centers[[i, 1]] = r * theta.sin();
        centers[[i, 2]] = z;
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngPlan;

    fn eval(dict: &Dictionary, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; dict.size()];
        dict.eval_into(x, &mut out).unwrap();
        out
    }

    #[test]
    fn indicator_examples() {
        let d = Dictionary::indicator_1d(0.0, 1.0, 2).unwrap();
        assert_eq!(eval(&d, &[0.25]), vec![1.0, 0.0]);
        assert_eq!(eval(&d, &[1.0]), vec![0.0, 1.0]); // right-closed last bin
        assert_eq!(eval(&d, &[1.5]), vec![0.0, 0.0]);
        assert_eq!(eval(&d, &[-0.1]), vec![0.0, 0.0]);

        let d = Dictionary::indicator_1d(0.0, 2.0, 4).unwrap();
        assert_eq!(eval(&d, &[1.0]), vec![0.0, 0.0, 1.0, 0.0]); // floor((x-a)/w) = 2

        assert!(Dictionary::indicator_1d(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn monomial_examples() {
        let d = Dictionary::monomial(1, 2).unwrap();
        assert_eq!(eval(&d, &[2.0]), vec![1.0, 2.0, 4.0]);

        let d = Dictionary::monomial(2, 1).unwrap();
        assert_eq!(d.size(), 3); // binomial(3, 2)
        assert_eq!(eval(&d, &[3.0, 5.0]), vec![1.0, 3.0, 5.0]); // (1, x1, x2)

        let d = Dictionary::monomial(1, 7).unwrap();
        assert_eq!(d.size(), 8);

        // at the origin only the constant survives
        let d = Dictionary::monomial(3, 3).unwrap();
        let v = eval(&d, &[0.0, 0.0, 0.0]);
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn monomial_graded_order() {
        let d = Dictionary::monomial(2, 2).unwrap();
        // 1, x1, x2, x1^2, x1 x2, x2^2
        assert_eq!(d.size(), 6);
        assert_eq!(eval(&d, &[2.0, 3.0]), vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn voronoi_examples() {
        let d = Dictionary::voronoi_sphere(4).unwrap();
        let centers = d.cell_centers().unwrap().to_owned();
        for i in 0..4 {
            let c = centers.row(i);
            let v = eval(&d, &[c[0], c[1], c[2]]);
            assert_eq!(v[i], 1.0);
            assert_eq!(v.iter().sum::<f64>(), 1.0);
        }
        let mut out = vec![0.0; 4];
        assert!(matches!(
            d.eval_into(&[0.0, 0.0, 0.0], &mut out),
            Err(CoreError::ZeroVector)
        ));
    }

    #[test]
    fn voronoi_200_cells_all_covered() {
        let d = Dictionary::voronoi_sphere(200).unwrap();
        let plan = RngPlan::new(99);
        let mut seen = [false; 200];
        let mut out = vec![0.0; 200];
        for m in 0..100_000u64 {
            let mut cur = plan.stream(m).init_draws();
            let x = [cur.normal(), cur.normal(), cur.normal()];
            d.eval_into(&x, &mut out).unwrap();
            let idx = out.iter().position(|&v| v == 1.0).unwrap();
            assert_eq!(out.iter().sum::<f64>(), 1.0);
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&s| s), "every Voronoi cell should be hit");
    }

    #[test]
    fn batch_matches_pointwise() {
        let d = Dictionary::monomial(2, 3).unwrap();
        let plan = RngPlan::new(17);
        let mut cur = plan.stream(0).init_draws();
        let xs = Array2::from_shape_fn((50, 2), |_| cur.uniform_in(-2.0, 2.0));
        let batch = d.eval_batch(xs.view()).unwrap();
        for m in 0..50 {
            let row = eval(&d, xs.row(m).as_slice().unwrap());
            for j in 0..d.size() {
                assert_eq!(batch[[m, j]].to_bits(), row[j].to_bits());
            }
        }
    }

    #[test]
    fn gram_rank_on_generic_samples() {
        // smallest eigenvalue of the unit-diagonal-scaled Gram stays away
        // from zero for each dictionary kind (linear independence)
        let plan = RngPlan::new(4242);
        let dicts = vec![
            Dictionary::indicator_1d(-1.0, 1.0, 8).unwrap(),
            Dictionary::monomial(1, 5).unwrap(),
            Dictionary::voronoi_sphere(12).unwrap(),
        ];
        for dict in dicts {
            let n = dict.size();
            let m = 50 * n;
            let d = dict.dim();
            let mut cur = plan.stream(n as u64).init_draws();
            let xs = Array2::from_shape_fn((m, d), |_| cur.uniform_in(-1.0, 1.0));
            let psi = dict.eval_batch(xs.view()).unwrap();
            let mut gram = psi.t().dot(&psi) / m as f64;
            // unit-diagonal scaling
            let diag: Vec<f64> = (0..n).map(|i| gram[[i, i]].sqrt()).collect();
            for i in 0..n {
                for j in 0..n {
                    gram[[i, j]] /= diag[i] * diag[j];
                }
            }
            let eigs = crate::linalg::symmetric_eigenvalues(gram.view()).unwrap();
            assert!(eigs[0] > 1e-10, "{:?}: smallest scaled eigenvalue {}", dict.descriptor(), eigs[0]);
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let d = DictionaryDescriptor::Indicator1d { a: -1.0, b: 2.0, n: 100 };
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"kind\":\"indicator1d\""));
        let back: DictionaryDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let m: DictionaryDescriptor =
            serde_json::from_str(r#"{"kind":"monomial","max_order":7}"#).unwrap();
        assert_eq!(m, DictionaryDescriptor::Monomial { max_order: 7, dim: 1 });
        let v: DictionaryDescriptor =
            serde_json::from_str(r#"{"kind":"voronoi_sphere","n":200}"#).unwrap();
        assert_eq!(v, DictionaryDescriptor::VoronoiSphere { n: 200 });
    }
}
