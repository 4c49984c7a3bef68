//! Benchmark mean-field models and their analytic oracles: the Cormier
//! scalar model with its Gaussian fixed points, the Kuramoto model on the
//! circle with its closed-form invariant density, the Kuramoto model on the
//! sphere, and the mean-field Ornstein–Uhlenbeck reference.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use ndarray::Array2;

use crate::data::PairDataSet;
use crate::error::{CoreError, Result};
use crate::metrics::simpson;
use crate::model::{MeasureObservable, MeasureStats, Model};
use crate::rng::DrawCursor;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Mean-field Ornstein–Uhlenbeck: `dX = rate·(E[X] − X) dt + sigma dW`.
pub struct OrnsteinUhlenbeck {
    rate: f64,
    sigma: f64,
    init_mean: f64,
    init_std: f64,
    observables: Vec<MeasureObservable>,
}

impl OrnsteinUhlenbeck {
    pub fn new(rate: f64, sigma: f64, init_mean: f64, init_std: f64) -> Self {
        Self {
            rate,
            sigma,
            init_mean,
            init_std,
            observables: vec![Arc::new(|x: &[f64]| x[0])],
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Model for OrnsteinUhlenbeck {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        "ou"
    }

    fn observables(&self) -> &[MeasureObservable] {
        &self.observables
    }

    fn drift(&self, _t: f64, x: &[f64], _c: &[f64], mu: &MeasureStats<'_>, out: &mut [f64]) {
        out[0] = self.rate * (mu.value(0) - x[0]);
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _c: &[f64], _mu: &MeasureStats<'_>, out: &mut [f64]) {
        out[0] = self.sigma;
    }

    fn sample_initial(&self, draws: &mut DrawCursor, out: &mut [f64]) {
        out[0] = self.init_mean + self.init_std * draws.normal();
    }
}

/// Scalar model `dX = (−X + J·E[cos X]) dt + √2 dW`; its invariant laws are
/// Gaussians N(α, 1) with α a fixed point of `(√e/J)·α = cos α`.
pub struct Cormier {
    j: f64,
    init_lo: f64,
    init_hi: f64,
    observables: Vec<MeasureObservable>,
}

impl Cormier {
    /// Default initial law Unif[−7.5, 10].
    pub fn new(j: f64) -> Self {
        Self::with_init(j, -7.5, 10.0)
    }

    pub fn with_init(j: f64, init_lo: f64, init_hi: f64) -> Self {
        Self {
            j,
            init_lo,
            init_hi,
            observables: vec![Arc::new(|x: &[f64]| x[0].cos())],
        }
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }
}

impl Model for Cormier {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        "cormier"
    }

    fn observables(&self) -> &[MeasureObservable] {
        &self.observables
    }

    fn drift(&self, _t: f64, x: &[f64], _c: &[f64], mu: &MeasureStats<'_>, out: &mut [f64]) {
        out[0] = -x[0] + self.j * mu.value(0);
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _c: &[f64], _mu: &MeasureStats<'_>, out: &mut [f64]) {
        out[0] = SQRT_2;
    }

    fn sample_initial(&self, draws: &mut DrawCursor, out: &mut [f64]) {
        out[0] = draws.uniform_in(self.init_lo, self.init_hi);
    }
}

/// A fixed point α of the Cormier self-consistency equation, with its
/// stability classification `α·tan(α) > −1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub alpha: f64,
    pub stable: bool,
}

/// All fixed points of `(√e/J)·α = cos α` in [−10, 10]: sign-change scan at
/// 0.01 resolution, each bracket bisected to |g| < 1e-12, roots ascending.
pub fn cormier_fixed_points(j: f64) -> Result<Vec<FixedPoint>> {
    if j == 0.0 || !j.is_finite() {
        return Err(CoreError::InvalidArgument("coupling J must be finite and nonzero".into()));
    }
    let c = std::f64::consts::E.sqrt() / j;
    let g = |alpha: f64| c * alpha - alpha.cos();
    let mut roots = Vec::new();
    let steps = 2000;
    for k in 0..steps {
        let lo = -10.0 + 0.01 * k as f64;
        let hi = lo + 0.01;
        let (glo, ghi) = (g(lo), g(hi));
        if glo == 0.0 {
            roots.push(lo);
            continue;
        }
        if glo * ghi < 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let gm = g(mid);
                if gm.abs() < 1e-13 {
                    a = mid;
                    b = mid;
                    break;
                }
                if g(a) * gm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    Ok(roots
        .into_iter()
        .map(|alpha| FixedPoint { alpha, stable: alpha * alpha.tan() > -1.0 })
        .collect())
}

/// Koopman eigenvalues of an OU process with decay rate `a` at lag `t`:
/// `λ_j = e^{−(j−1)·a·t}`.
pub fn ou_koopman_eigenvalues(a: f64, t: f64, n: usize) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(CoreError::InvalidArgument(format!("lag must be positive, got {t}")));
    }
    if n == 0 {
        return Err(CoreError::InvalidArgument("need at least one eigenvalue".into()));
    }
    Ok((0..n).map(|j| (-(j as f64) * a * t).exp()).collect())
}

/// Kuramoto model on the circle:
/// `dX = (2 sin(2X) − E_μ[sin(X − y)]) dt + √(2σ) dW`, states wrapped to
/// `[0, 2π)` after every step.
pub struct KuramotoCircle {
    sigma: f64,
    observables: Vec<MeasureObservable>,
}

impl KuramotoCircle {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(CoreError::InvalidArgument(format!("noise level must be positive, got {sigma}")));
        }
        Ok(Self {
            sigma,
            observables: vec![
                Arc::new(|x: &[f64]| x[0].cos()),
                Arc::new(|x: &[f64]| x[0].sin()),
            ],
        })
    }
}

impl Model for KuramotoCircle {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        "kuramoto-circle"
    }

    fn observables(&self) -> &[MeasureObservable] {
        &self.observables
    }

    fn drift(&self, _t: f64, x: &[f64], _c: &[f64], mu: &MeasureStats<'_>, out: &mut [f64]) {
        // E_y[sin(x − y)] = sin x·E[cos y] − cos x·E[sin y]
        let interaction = x[0].sin() * mu.value(0) - x[0].cos() * mu.value(1);
        out[0] = 2.0 * (2.0 * x[0]).sin() - interaction;
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _c: &[f64], _mu: &MeasureStats<'_>, out: &mut [f64]) {
        out[0] = (2.0 * self.sigma).sqrt();
    }

    fn sample_initial(&self, draws: &mut DrawCursor, out: &mut [f64]) {
        out[0] = draws.uniform_in(0.0, TAU);
    }

    fn post_step(&self, x: &mut [f64]) {
        x[0] = x[0].rem_euclid(TAU);
    }

    fn has_post_step(&self) -> bool {
        true
    }
}

/// Noise level above which the circle model's invariant distribution is
/// unique.
pub const KURAMOTO_UNIQUENESS_THRESHOLD: f64 = 0.7709;

/// The circle model's invariant density `ρ(x) = Z⁻¹·e^{−cos(2x)/σ}`.
#[derive(Debug, Clone, Copy)]
pub struct InvariantDensity {
    sigma: f64,
    z: f64,
    /// False when σ is at or below the uniqueness threshold: the formula is
    /// still an invariant density, but uniqueness is not guaranteed.
    pub unique: bool,
}

pub fn kuramoto_invariant_density(sigma: f64) -> Result<InvariantDensity> {
    if !(sigma > 0.0) {
        return Err(CoreError::InvalidArgument(format!("noise level must be positive, got {sigma}")));
    }
    let f = |x: f64| (-(2.0 * x).cos() / sigma).exp();
    let mut panels = 64;
    let mut z = simpson(&f, 0.0, TAU, panels);
    loop {
        panels *= 2;
        let refined = simpson(&f, 0.0, TAU, panels);
        if ((refined - z) / refined).abs() < 1e-12 || panels >= (1 << 22) {
            z = refined;
            break;
        }
        z = refined;
    }
    Ok(InvariantDensity { sigma, z, unique: sigma > KURAMOTO_UNIQUENESS_THRESHOLD })
}

impl InvariantDensity {
    pub fn eval(&self, x: f64) -> f64 {
        (-(2.0 * x).cos() / self.sigma).exp() / self.z
    }
}

/// Duplicates a circle data set shifted by π (mod 2π); the circle dynamics is
/// π-periodic in law, so this augmentation enforces the symmetry in the
/// estimated operators.
pub fn augment_circle_symmetry(data: &PairDataSet) -> Result<PairDataSet> {
    if data.dim() != 1 {
        return Err(CoreError::DimensionMismatch { expected: 1, got: data.dim() });
    }
    let m = data.count();
    let mut xi = Array2::zeros((2 * m, 1));
    let mut xt = Array2::zeros((2 * m, 1));
    for i in 0..m {
        let a = data.xi()[(i, 0)];
        let b = data.x_t()[(i, 0)];
        xi[[i, 0]] = a;
        xt[[i, 0]] = b;
        xi[[m + i, 0]] = (a + PI).rem_euclid(TAU);
        xt[[m + i, 0]] = (b + PI).rem_euclid(TAU);
    }
    PairDataSet::new(xi, xt, data.lag())
}

/// How the per-trajectory drift constant β of the sphere model is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSpec {
    /// ±magnitude with probability ½ each, drawn independently per
    /// trajectory (the limit keeps β random, one draw per realization).
    Random { magnitude: f64 },
    /// A fixed shared value (for conditioned runs and diagnostics).
    Fixed(f64),
}

/// Kuramoto model on the unit sphere in R³:
/// `dX = ((A − γ²I)X + (I − XXᵀ)(α·E[X] + β·𝟏)) dt + γ(I − XXᵀ) dW`,
/// renormalized to the sphere after every step.
pub struct KuramotoSphere {
    a: Array2<f64>,
    alpha: f64,
    gamma: f64,
    beta: BetaSpec,
    observables: Vec<MeasureObservable>,
}

impl KuramotoSphere {
    pub fn new(a: Array2<f64>, alpha: f64, gamma: f64, beta: BetaSpec) -> Result<Self> {
        if a.nrows() != 3 || a.ncols() != 3 {
            return Err(CoreError::InvalidArgument("A must be 3×3".into()));
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                if (a[[i, j]] + a[[j, i]]).abs() > 1e-12 * scale {
                    return Err(CoreError::InvalidArgument("A must be antisymmetric".into()));
                }
            }
        }
        if !(alpha > 0.0) || !(gamma > 0.0) {
            return Err(CoreError::InvalidArgument("alpha and gamma must be positive".into()));
        }
        Ok(Self {
            a,
            alpha,
            gamma,
            beta,
            observables: vec![
                Arc::new(|x: &[f64]| x[0]),
                Arc::new(|x: &[f64]| x[1]),
                Arc::new(|x: &[f64]| x[2]),
            ],
        })
    }

    pub fn beta(&self) -> BetaSpec {
        self.beta
    }
}

impl Model for KuramotoSphere {
    fn dim(&self) -> usize {
        3
    }

    fn name(&self) -> &str {
        "kuramoto-sphere"
    }

    fn observables(&self) -> &[MeasureObservable] {
        &self.observables
    }

    fn coefficient_count(&self) -> usize {
        1
    }

    fn sample_coefficients(&self, draws: &mut DrawCursor, out: &mut Vec<f64>) {
        let beta = match self.beta {
            BetaSpec::Random { magnitude } => {
                if draws.bernoulli() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            BetaSpec::Fixed(v) => v,
        };
        out.push(beta);
    }

    fn drift(&self, _t: f64, x: &[f64], coeffs: &[f64], mu: &MeasureStats<'_>, out: &mut [f64]) {
        let beta = coeffs[0];
        let mean = [mu.value(0), mu.value(1), mu.value(2)];
        // forcing vector α·E[X] + β·𝟏, projected onto the tangent space
        let f = [
            self.alpha * mean[0] + beta,
            self.alpha * mean[1] + beta,
            self.alpha * mean[2] + beta,
        ];
        let xf = x[0] * f[0] + x[1] * f[1] + x[2] * f[2];
        let g2 = self.gamma * self.gamma;
        for i in 0..3 {
            let ax = self.a[[i, 0]] * x[0] + self.a[[i, 1]] * x[1] + self.a[[i, 2]] * x[2];
            out[i] = ax - g2 * x[i] + (f[i] - x[i] * xf);
        }
    }

    fn diffusion(&self, _t: f64, x: &[f64], _c: &[f64], _mu: &MeasureStats<'_>, out: &mut [f64]) {
        for i in 0..3 {
            for j in 0..3 {
                let proj = if i == j { 1.0 - x[i] * x[j] } else { -x[i] * x[j] };
                out[i * 3 + j] = self.gamma * proj;
            }
        }
    }

    fn sample_initial(&self, draws: &mut DrawCursor, out: &mut [f64]) {
        // uniform on the sphere: normalized Gaussian
        loop {
            let (a, b, c) = (draws.normal(), draws.normal(), draws.normal());
            let norm = (a * a + b * b + c * c).sqrt();
            if norm > 1e-12 {
                out[0] = a / norm;
                out[1] = b / norm;
                out[2] = c / norm;
                return;
            }
        }
    }

    fn post_step(&self, x: &mut [f64]) {
        let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if norm > 0.0 {
            x[0] /= norm;
            x[1] /= norm;
            x[2] /= norm;
        }
    }

    fn has_post_step(&self) -> bool {
        true
    }
}

/// A random antisymmetric 3×3 matrix with off-diagonal entries Unif(−1, 1).
pub fn random_antisymmetric(draws: &mut DrawCursor) -> Array2<f64> {
    let (a12, a13, a23) = (
        draws.uniform_in(-1.0, 1.0),
        draws.uniform_in(-1.0, 1.0),
        draws.uniform_in(-1.0, 1.0),
    );
    let mut a = Array2::zeros((3, 3));
    a[[0, 1]] = a12;
    a[[1, 0]] = -a12;
    a[[0, 2]] = a13;
    a[[2, 0]] = -a13;
    a[[1, 2]] = a23;
    a[[2, 1]] = -a23;
    a
}
