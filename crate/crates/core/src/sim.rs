//! Euler–Maruyama kernels: the interacting-particle scheme producing a
//! measure path, and the decoupled scheme producing training pairs against a
//! frozen measure path.
//!
//! Both kernels are synchronous (two-buffer): the measure entering step
//! `k → k+1` is formed from every particle's state at step `k`. The particle
//! loop is data-parallel; particle `m` reads only its own stream, so results
//! are bit-identical for any thread count.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use std::sync::Mutex;

use crate::data::PairDataSet;
use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use crate::measure::{EmpiricalMeasure, MeasurePath, Provenance};
use crate::model::{MeasureStats, Model};
use crate::rng::RngPlan;

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Emit one stderr line per 10% of steps.
    pub progress: bool,
}

/// One Euler–Maruyama step for a coefficient-free model:
/// `post_step(x + b·dt + σ·dW)`.
///
/// `dw` is the Brownian increment; the caller samples it as Normal(0, dt·I).
pub fn euler_step(
    model: &dyn Model,
    x: &[f64],
    t: f64,
    mu: &EmpiricalMeasure,
    dt: f64,
    dw: &[f64],
) -> Result<Vec<f64>> {
    if model.coefficient_count() != 0 {
        return Err(CoreError::InvalidArgument(
            "model draws per-trajectory coefficients; use euler_step_with".into(),
        ));
    }
    euler_step_with(model, x, t, mu, dt, dw, &[])
}

/// [`euler_step`] for models with per-trajectory random coefficients.
pub fn euler_step_with(
    model: &dyn Model,
    x: &[f64],
    t: f64,
    mu: &EmpiricalMeasure,
    dt: f64,
    dw: &[f64],
    coeffs: &[f64],
) -> Result<Vec<f64>> {
    let d = model.dim();
    if x.len() != d || dw.len() != d {
        return Err(CoreError::DimensionMismatch { expected: d, got: x.len().max(dw.len()) });
    }
    if !(dt > 0.0) {
        return Err(CoreError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let values = MeasureStats::compute(model, mu);
    let stats = MeasureStats::new(mu, &values);
    let mut scratch = StepScratch::new(d);
    let mut out = vec![0.0; d];
    if step_into(model, t, x, coeffs, &stats, dt, dw, &mut scratch, &mut out) {
        Ok(out)
    } else {
        Err(CoreError::NonFinite { t, particle: None, state: x.to_vec() })
    }
}

struct StepScratch {
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    dw: Vec<f64>,
}

impl StepScratch {
    fn new(d: usize) -> Self {
        Self { drift: vec![0.0; d], diffusion: vec![0.0; d * d], dw: vec![0.0; d] }
    }
}

/// Returns false when the step produced a non-finite value.
#[inline]
#[allow(clippy::too_many_arguments)]
fn step_into(
    model: &dyn Model,
    t: f64,
    x: &[f64],
    coeffs: &[f64],
    stats: &MeasureStats<'_>,
    dt: f64,
    dw: &[f64],
    scratch: &mut StepScratch,
    out: &mut [f64],
) -> bool {
    let d = x.len();
    model.drift(t, x, coeffs, stats, &mut scratch.drift);
    model.diffusion(t, x, coeffs, stats, &mut scratch.diffusion);
    for i in 0..d {
        let mut v = x[i] + scratch.drift[i] * dt;
        let row = &scratch.diffusion[i * d..(i + 1) * d];
        for (s, w) in row.iter().zip(dw.iter()) {
            v += s * w;
        }
        out[i] = v;
    }
    if model.has_post_step() {
        model.post_step(out);
    }
    out.iter().all(|v| v.is_finite())
}

/// Samples `count` initial states from the model's initial law, one stream
/// per particle index.
pub fn sample_initial_points(model: &dyn Model, count: usize, plan: &RngPlan) -> Array2<f64> {
    let d = model.dim();
    let mut states = vec![0.0; count * d];
    states
        .par_chunks_exact_mut(d)
        .enumerate()
        .for_each(|(m, row)| {
            let mut draws = plan.stream(m as u64).init_draws();
            model.sample_initial(&mut draws, row);
        });
    Array2::from_shape_vec((count, d), states).expect("shape")
}

fn sample_coefficients(model: &dyn Model, count: usize, plan: &RngPlan) -> Vec<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|m| {
            let mut out = Vec::new();
            let mut draws = plan.stream(m as u64).coeff_draws();
            model.sample_coefficients(&mut draws, &mut out);
            out
        })
        .collect()
}

struct FirstFailure {
    slot: Mutex<Option<(usize, Vec<f64>)>>,
}

impl FirstFailure {
    fn new() -> Self {
        Self { slot: Mutex::new(None) }
    }

    fn record(&self, m: usize, state: &[f64]) {
        let mut slot = self.slot.lock().expect("poisoned");
        if slot.as_ref().is_none_or(|(prev, _)| m < *prev) {
            *slot = Some((m, state.to_vec()));
        }
    }

    fn into_error(self, t: f64) -> Option<CoreError> {
        self.slot
            .into_inner()
            .expect("poisoned")
            .map(|(m, state)| CoreError::NonFinite { t, particle: Some(m), state })
    }
}

/// Advances all rows of `states` by one step, writing into `next`.
#[allow(clippy::too_many_arguments)]
fn parallel_step(
    model: &dyn Model,
    t: f64,
    step_index: u64,
    h: f64,
    states: &[f64],
    coeffs: &[Vec<f64>],
    stats: &MeasureStats<'_>,
    plan: &RngPlan,
    next: &mut [f64],
) -> Result<()> {
    let d = model.dim();
    let failure = FirstFailure::new();
    next.par_chunks_exact_mut(d)
        .enumerate()
        .for_each_init(
            || StepScratch::new(d),
            |scratch, (m, out)| {
                let x = &states[m * d..(m + 1) * d];
                plan.stream(m as u64).brownian_increment(step_index, h, &mut scratch.dw);
                let dw = std::mem::take(&mut scratch.dw);
                let ok = step_into(model, t, x, &coeffs[m], stats, h, &dw, scratch, out);
                scratch.dw = dw;
                if !ok {
                    failure.record(m, x);
                }
            },
        );
    match failure.into_error(t) {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn progress_line(label: &str, k: usize, total: usize, enabled: bool) {
    if !enabled || total == 0 {
        return;
    }
    let stride = total.div_ceil(10);
    if k.is_multiple_of(stride) || k == total {
        eprintln!("{label}: step {k}/{total} ({}%)", 100 * k / total);
    }
}

/// Simulates the interacting particle system on `grid`, returning the full
/// measure path. Step `k → k+1` uses the snapshot-`k` empirical measure in
/// every particle's coefficients.
pub fn simulate_ips(
    model: &dyn Model,
    count: usize,
    grid: TimeGrid,
    plan: &RngPlan,
) -> Result<MeasurePath> {
    simulate_ips_with(model, count, grid, plan, &SimOptions::default())
}

pub fn simulate_ips_with(
    model: &dyn Model,
    count: usize,
    grid: TimeGrid,
    plan: &RngPlan,
    opts: &SimOptions,
) -> Result<MeasurePath> {
    if count < 2 {
        return Err(CoreError::InvalidArgument(
            "interacting system needs at least two particles".into(),
        ));
    }
    let d = model.dim();
    let steps = grid.steps();
    let init = sample_initial_points(model, count, plan);
    let coeffs = sample_coefficients(model, count, plan);

    let mut states = init.into_raw_vec_and_offset().0;
    let mut next = vec![0.0; states.len()];
    let mut snapshots: Vec<EmpiricalMeasure> = Vec::with_capacity(steps + 1);
    snapshots.push(measure_from(&states, count, d));

    for k in 0..steps {
        let t = grid.point(k);
        let measure = &snapshots[k];
        let values = MeasureStats::compute(model, measure);
        let stats = MeasureStats::new(measure, &values);
        parallel_step(model, t, k as u64, grid.step_size(), &states, &coeffs, &stats, plan, &mut next)?;
        std::mem::swap(&mut states, &mut next);
        snapshots.push(measure_from(&states, count, d));
        progress_line("ips", k + 1, steps, opts.progress);
    }

    MeasurePath::new(
        grid,
        snapshots,
        Some(Provenance { seed: plan.master_seed(), model: model.name().to_string() }),
    )
}

fn measure_from(states: &[f64], count: usize, d: usize) -> EmpiricalMeasure {
    EmpiricalMeasure::new(Array2::from_shape_vec((count, d), states.to_vec()).expect("shape"))
        .expect("nonempty")
}

/// Simulates decoupled trajectories from the initial points `xi` against the
/// frozen measure path: at step `k` every trajectory reads the snapshot at or
/// before `t_k`; no feedback flows back into the path. Trajectory `m` uses
/// stream `m`, so the pair family is independent across `m`.
pub fn simulate_decoupled(
    model: &dyn Model,
    path: &MeasurePath,
    xi: ArrayView2<'_, f64>,
    grid: TimeGrid,
    plan: &RngPlan,
) -> Result<PairDataSet> {
    simulate_decoupled_with(model, path, xi, grid, plan, &SimOptions::default())
}

pub fn simulate_decoupled_with(
    model: &dyn Model,
    path: &MeasurePath,
    xi: ArrayView2<'_, f64>,
    grid: TimeGrid,
    plan: &RngPlan,
    opts: &SimOptions,
) -> Result<PairDataSet> {
    let d = model.dim();
    if xi.nrows() == 0 {
        return Err(CoreError::EmptyMeasure);
    }
    if xi.ncols() != d || path.snapshot(0).dim() != d {
        return Err(CoreError::DimensionMismatch { expected: d, got: xi.ncols() });
    }
    if grid.t_end() > path.grid().t_end() * (1.0 + 1e-12) {
        return Err(CoreError::MeasurePathTooShort {
            lag: grid.t_end(),
            horizon: path.grid().t_end(),
        });
    }
    let count = xi.nrows();
    let steps = grid.steps();
    let coeffs = sample_coefficients(model, count, plan);

    let mut states: Vec<f64> = xi.iter().copied().collect();
    let mut next = vec![0.0; states.len()];

    // The measure is frozen, so per-step statistics can be reduced up front.
    let mut snapshot_indices = Vec::with_capacity(steps);
    let mut stats_per_step: Vec<Vec<f64>> = Vec::with_capacity(steps);
    for k in 0..steps {
        let idx = path.lookup_index(grid.point(k))?;
        if let Some(prev) = snapshot_indices.last() {
            if *prev == idx {
                let prev_stats = stats_per_step.last().expect("aligned").clone();
                snapshot_indices.push(idx);
                stats_per_step.push(prev_stats);
                continue;
            }
        }
        let values = MeasureStats::compute(model, path.snapshot(idx));
        snapshot_indices.push(idx);
        stats_per_step.push(values);
    }

    for k in 0..steps {
        let t = grid.point(k);
        let measure = path.snapshot(snapshot_indices[k]);
        let stats = MeasureStats::new(measure, &stats_per_step[k]);
        parallel_step(model, t, k as u64, grid.step_size(), &states, &coeffs, &stats, plan, &mut next)?;
        std::mem::swap(&mut states, &mut next);
        progress_line("decoupled", k + 1, steps, opts.progress);
    }

    let terminal = Array2::from_shape_vec((count, d), states).expect("shape");
    PairDataSet::new(xi.to_owned(), terminal, grid.t_end())
}
