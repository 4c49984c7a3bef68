//! The mean-field model interface: drift and diffusion depending on state,
//! time, and the (empirical) law.
//!
//! Coefficients receive the law through [`MeasureStats`], which pairs the raw
//! measure with the expectations of the model's registered observables.
//! Those expectations are reduced once per time step and shared by every
//! particle, which is what makes the synchronous update O(M̃) per step
//! instead of O(M̃²).

use std::sync::Arc;

use crate::measure::EmpiricalMeasure;
use crate::rng::DrawCursor;

/// A scalar statistic of the law, `μ ↦ E_μ[f]`.
pub type MeasureObservable = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An empirical measure plus the per-step expectations of a model's
/// registered observables (aligned with [`Model::observables`]).
pub struct MeasureStats<'a> {
    measure: &'a EmpiricalMeasure,
    values: &'a [f64],
}

impl<'a> MeasureStats<'a> {
    pub fn new(measure: &'a EmpiricalMeasure, values: &'a [f64]) -> Self {
        Self { measure, values }
    }

    /// Evaluates a model's observables on a measure (one O(M̃) pass each).
    pub fn compute(model: &dyn Model, measure: &EmpiricalMeasure) -> Vec<f64> {
        model
            .observables()
            .iter()
            .map(|obs| measure.expect(|x| obs(x)))
            .collect()
    }

    pub fn measure(&self) -> &EmpiricalMeasure {
        self.measure
    }

    /// Expectation of registered observable `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn values(&self) -> &[f64] {
        self.values
    }
}

/// Drift/diffusion specification of a (decoupled) mean-field SDE,
/// `dX = b(t, X, μ_t) dt + σ(t, X, μ_t) dW`, with an optional state-space
/// projection applied after every Euler step.
pub trait Model: Send + Sync {
    fn dim(&self) -> usize;

    /// Stable identifier recorded in provenance and metadata.
    fn name(&self) -> &str;

    /// Measure statistics the coefficients read; evaluated once per step.
    fn observables(&self) -> &[MeasureObservable] {
        &[]
    }

    /// Number of per-trajectory random coefficients (0 for most models).
    fn coefficient_count(&self) -> usize {
        0
    }

    /// Per-trajectory random coefficients, drawn once when a trajectory is
    /// created (empty for most models).
    fn sample_coefficients(&self, _draws: &mut DrawCursor, _out: &mut Vec<f64>) {}

    /// Writes `b(t, x, μ)` into `out` (length `dim`).
    fn drift(&self, t: f64, x: &[f64], coeffs: &[f64], mu: &MeasureStats<'_>, out: &mut [f64]);

    /// Writes the `dim × dim` diffusion matrix `σ(t, x, μ)` into `out`
    /// (row-major, length `dim²`).
    fn diffusion(&self, t: f64, x: &[f64], coeffs: &[f64], mu: &MeasureStats<'_>, out: &mut [f64]);

    /// Draws one initial state into `out`.
    fn sample_initial(&self, draws: &mut DrawCursor, out: &mut [f64]);

    /// Optional projection applied after each step (e.g. renormalization to
    /// the sphere). Must be idempotent. The default is the identity.
    fn post_step(&self, _x: &mut [f64]) {}

    /// Whether [`Model::post_step`] does anything; lets callers skip the call.
    fn has_post_step(&self) -> bool {
        false
    }
}
