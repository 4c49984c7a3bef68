//! Empirical convergence diagnostics: 1-D 2-Wasserstein distance,
//! histogram-vs-density distance, and the strong-error / particle-count /
//! Gram Monte Carlo sweeps with log-log slope fits.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::dictionary::Dictionary;
use crate::edmd::gram_matrix;
use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use crate::linalg::frobenius;
use crate::measure::{EmpiricalMeasure, MeasurePath};
use crate::model::{MeasureStats, Model};
use crate::rng::{DrawCursor, RngPlan};
use crate::sim::simulate_ips;

/// 2-Wasserstein distance between equal-size 1-D sample sets: the L² distance
/// of the sorted samples (the optimal monotone coupling in one dimension).
pub fn w2_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::EmptyMeasure);
    }
    if a.len() != b.len() {
        return Err(CoreError::UnequalSampleSizes(a.len(), b.len()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let sum_sq: f64 = sa.iter().zip(sb.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum_sq / a.len() as f64).sqrt())
}

/// [`w2_1d`] on empirical measures, rejecting d > 1.
pub fn w2_measures(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    if a.dim() != 1 || b.dim() != 1 {
        return Err(CoreError::WassersteinDim(a.dim().max(b.dim())));
    }
    let av: Vec<f64> = a.particles().iter().copied().collect();
    let bv: Vec<f64> = b.particles().iter().copied().collect();
    w2_1d(&av, &bv)
}

/// Result of a histogram-vs-density comparison.
#[derive(Debug, Clone, Copy)]
pub struct HistogramDistance {
    /// `Σ_bins |empirical mass − ∫_bin density|`, a total-variation-style
    /// distance in [0, 2].
    pub distance: f64,
    /// Fraction of samples falling outside the compared range.
    pub outside_mass: f64,
}

/// Compares the sample histogram against a closed-form density on `range`.
/// The density must integrate to 1 on the range within 1%.
pub fn histogram_l1(
    samples: &[f64],
    density: impl Fn(f64) -> f64,
    bins: usize,
    range: (f64, f64),
) -> Result<HistogramDistance> {
    let (lo, hi) = range;
    if samples.is_empty() {
        return Err(CoreError::EmptyMeasure);
    }
    if bins == 0 || !(lo < hi) {
        return Err(CoreError::InvalidArgument("need bins >= 1 and a nonempty range".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut exact = vec![0.0; bins];
    for (b, slot) in exact.iter_mut().enumerate() {
        let a = lo + b as f64 * width;
        *slot = simpson(&density, a, a + width, 64);
    }
    let total: f64 = exact.iter().sum();
    if (total - 1.0).abs() > 0.01 {
        return Err(CoreError::InvalidArgument(format!(
            "density integrates to {total:.6} on the range, expected 1 within 1%"
        )));
    }
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    for &x in samples {
        if x < lo || x > hi || !x.is_finite() {
            outside += 1;
            continue;
        }
        let idx = (((x - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let m = samples.len() as f64;
    let distance = counts
        .iter()
        .zip(exact.iter())
        .map(|(&c, &e)| (c as f64 / m - e).abs())
        .sum();
    Ok(HistogramDistance { distance, outside_mass: outside as f64 / m })
}

/// Composite Simpson quadrature with `panels` subintervals (made even).
pub fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = if panels.is_multiple_of(2) { panels } else { panels + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Least-squares slope of `ln y` against `ln x` with a 95% confidence
/// half-width (Student t on n − 2 degrees of freedom). Returns NaNs when any
/// `y` is nonpositive (degenerate, e.g. exact schemes with zero error).
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 3, "need at least 3 points for a slope fit");
    if ys.iter().any(|&y| y <= 0.0) || xs.iter().any(|&x| x <= 0.0) {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = xs.len() - 2;
    let half = if dof == 0 {
        f64::INFINITY
    } else {
        let se = (ssr / dof as f64 / sxx).sqrt();
        t_quantile_975(dof) * se
    };
    (slope, half)
}

fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [f64; 10] =
        [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= TABLE.len() {
        TABLE[dof - 1]
    } else if dof <= 30 {
        2.1
    } else {
        1.96
    }
}

/// One convergence sweep: error statistics per parameter value plus the
/// fitted log-log slope.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepReport {
    pub parameter: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub std_error: Vec<f64>,
    pub slope: f64,
    pub slope_half_width: f64,
}

impl SweepReport {
    fn from_errors(parameter: Vec<f64>, errors: Vec<Vec<f64>>) -> Result<Self> {
        if parameter.len() < 3 {
            return Err(CoreError::InvalidArgument("sweep needs at least 3 parameter values".into()));
        }
        let mut mean_error = Vec::with_capacity(parameter.len());
        let mut std_error = Vec::with_capacity(parameter.len());
        for errs in &errors {
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n.max(1.0);
            if mean < 0.0 {
                return Err(CoreError::InvalidArgument("negative error in sweep".into()));
            }
            mean_error.push(mean);
            std_error.push(var.sqrt());
        }
        let (slope, slope_half_width) = fit_loglog(&parameter, &mean_error);
        Ok(Self { parameter, mean_error, std_error, slope, slope_half_width })
    }
}

/// Strong-error sweep by coupled refinement: for each seed, one Brownian path
/// is drawn on a fine reference grid (`h_min / ref_divisor`), each coarse
/// step aggregates the fine increments, and the mean-square terminal gap to
/// the reference solution is recorded per step size.
pub fn strong_error_sweep(
    model: &dyn Model,
    path: &MeasurePath,
    t_end: f64,
    h_list: &[f64],
    n_seeds: usize,
    plan: &RngPlan,
    ref_divisor: usize,
) -> Result<SweepReport> {
    if h_list.len() < 3 {
        return Err(CoreError::InvalidArgument("sweep needs at least 3 step sizes".into()));
    }
    if h_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(CoreError::InvalidArgument("step sizes must be strictly descending".into()));
    }
    if ref_divisor < 2 {
        return Err(CoreError::InvalidArgument("reference divisor must be at least 2".into()));
    }
    let h_ref = h_list[h_list.len() - 1] / ref_divisor as f64;
    let steps_ref = steps_for(t_end, h_ref)?;
    let mut multiples = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let ratio = h / h_ref;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(CoreError::InvalidArgument(format!(
                "step {h} is not an integer multiple of the reference step {h_ref}"
            )));
        }
        steps_for(t_end, h)?;
        multiples.push(ratio.round() as usize);
    }
    if t_end > path.grid().t_end() * (1.0 + 1e-12) {
        return Err(CoreError::MeasurePathTooShort { lag: t_end, horizon: path.grid().t_end() });
    }

    let d = model.dim();
    let per_seed: Vec<Vec<f64>> = (0..n_seeds)
        .into_par_iter()
        .map(|seed| -> Result<Vec<f64>> {
            let stream = plan.stream(seed as u64);
            let mut draws = stream.init_draws();
            let mut x0 = vec![0.0; d];
            model.sample_initial(&mut draws, &mut x0);
            let mut coeffs = Vec::new();
            model.sample_coefficients(&mut stream.coeff_draws(), &mut coeffs);

            // one Brownian path on the fine grid, reused by every step size
            let mut increments = vec![0.0; steps_ref * d];
            for k in 0..steps_ref {
                stream.brownian_increment(k as u64, h_ref, &mut increments[k * d..(k + 1) * d]);
            }

            let x_ref = drive(model, path, &x0, &coeffs, t_end, steps_ref, &increments, 1, d)?;
            let mut errs = Vec::with_capacity(h_list.len());
            for (&h, &mult) in h_list.iter().zip(multiples.iter()) {
                let steps = steps_for(t_end, h)?;
                let x_h = drive(model, path, &x0, &coeffs, t_end, steps, &increments, mult, d)?;
                let err: f64 = x_h
                    .iter()
                    .zip(x_ref.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                errs.push(err);
            }
            Ok(errs)
        })
        .collect::<Result<_>>()?;

    let errors: Vec<Vec<f64>> = (0..h_list.len())
        .map(|j| per_seed.iter().map(|s| s[j]).collect())
        .collect();
    SweepReport::from_errors(h_list.to_vec(), errors)
}

fn steps_for(t_end: f64, h: f64) -> Result<usize> {
    let steps = t_end / h;
    if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
        return Err(CoreError::InvalidArgument(format!("step {h} does not divide horizon {t_end}")));
    }
    Ok(steps.round() as usize)
}

/// Euler over `steps` steps of size `t_end/steps`, aggregating `mult`
/// consecutive fine increments per step.
#[allow(clippy::too_many_arguments)]
fn drive(
    model: &dyn Model,
    path: &MeasurePath,
    x0: &[f64],
    coeffs: &[f64],
    t_end: f64,
    steps: usize,
    fine_increments: &[f64],
    mult: usize,
    d: usize,
) -> Result<Vec<f64>> {
    let h = t_end / steps as f64;
    let mut x = x0.to_vec();
    let mut next = vec![0.0; d];
    let mut dw = vec![0.0; d];
    let mut drift = vec![0.0; d];
    let mut diff = vec![0.0; d * d];
    for k in 0..steps {
        let t = k as f64 * h;
        let measure = path.lookup(t)?;
        let values = MeasureStats::compute(model, measure);
        let stats = MeasureStats::new(measure, &values);
        dw.fill(0.0);
        for j in 0..mult {
            let base = (k * mult + j) * d;
            for i in 0..d {
                dw[i] += fine_increments[base + i];
            }
        }
        model.drift(t, &x, coeffs, &stats, &mut drift);
        model.diffusion(t, &x, coeffs, &stats, &mut diff);
        for i in 0..d {
            let mut v = x[i] + drift[i] * h;
            for (s, w) in diff[i * d..(i + 1) * d].iter().zip(dw.iter()) {
                v += s * w;
            }
            next[i] = v;
        }
        if model.has_post_step() {
            model.post_step(&mut next);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { t, particle: None, state: x.clone() });
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(x)
}

/// Particle-count sweep: mean squared 2-Wasserstein distance between the
/// terminal M̃-particle empirical measure and a high-accuracy reference run
/// (`ref_factor × max(M̃)` particles, quantile-subsampled to equal size).
pub fn measure_error_sweep(
    model: &dyn Model,
    m_list: &[usize],
    h_step: f64,
    t_end: f64,
    n_seeds: usize,
    plan: &RngPlan,
    ref_factor: usize,
) -> Result<SweepReport> {
    if model.dim() != 1 {
        return Err(CoreError::WassersteinDim(model.dim()));
    }
    if m_list.len() < 3 {
        return Err(CoreError::InvalidArgument("sweep needs at least 3 particle counts".into()));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::InvalidArgument("particle counts must be strictly ascending".into()));
    }
    if ref_factor < 16 {
        return Err(CoreError::InvalidArgument("reference factor must be at least 16".into()));
    }
    let grid = TimeGrid::from_step(t_end, h_step)?;
    let m_ref = ref_factor * m_list[m_list.len() - 1];

    let cells: Vec<(usize, usize)> = (0..n_seeds)
        .flat_map(|s| (0..m_list.len()).map(move |j| (s, j)))
        .collect();

    // reference runs, one per seed
    let refs: Vec<Vec<f64>> = (0..n_seeds)
        .into_par_iter()
        .map(|s| -> Result<Vec<f64>> {
            let sub = plan.derive(ref_tag(s));
            let path = simulate_ips(model, m_ref, grid, &sub)?;
            let mut vals: Vec<f64> =
                path.snapshot(grid.steps()).particles().iter().copied().collect();
            vals.sort_by(f64::total_cmp);
            Ok(vals)
        })
        .collect::<Result<_>>()?;

    let errs: Vec<f64> = cells
        .par_iter()
        .map(|&(s, j)| -> Result<f64> {
            let sub = plan.derive(cell_tag(s, j));
            let path = simulate_ips(model, m_list[j], grid, &sub)?;
            let mut cloud: Vec<f64> =
                path.snapshot(grid.steps()).particles().iter().copied().collect();
            cloud.sort_by(f64::total_cmp);
            let reference = quantile_subsample(&refs[s], cloud.len());
            let w2 = w2_1d(&cloud, &reference)?;
            Ok(w2 * w2)
        })
        .collect::<Result<_>>()?;

    let errors: Vec<Vec<f64>> = (0..m_list.len())
        .map(|j| (0..n_seeds).map(|s| errs[s * m_list.len() + j]).collect())
        .collect();
    SweepReport::from_errors(m_list.iter().map(|&m| m as f64).collect(), errors)
}

fn ref_tag(seed: usize) -> u64 {
    0x5245_0000_0000_0000 | seed as u64
}

fn cell_tag(seed: usize, j: usize) -> u64 {
    0x434c_0000_0000_0000 | ((seed as u64) << 16) | j as u64
}

/// Rank-stride subsample of a sorted slice down to `n` points (quantile
/// matching).
pub fn quantile_subsample(sorted: &[f64], n: usize) -> Vec<f64> {
    let len = sorted.len();
    (0..n)
        .map(|i| sorted[(((i as f64 + 0.5) * len as f64 / n as f64) as usize).min(len - 1)])
        .collect()
}

/// Gram Monte Carlo sweep: Frobenius error of the sampled Gram matrix against
/// its closed form, per sample count.
pub fn gram_error_sweep(
    dict: &Dictionary,
    exact: ArrayView2<'_, f64>,
    sampler: impl Fn(&mut DrawCursor, &mut [f64]) + Sync,
    m_list: &[usize],
    n_seeds: usize,
    plan: &RngPlan,
) -> Result<SweepReport> {
    if m_list.len() < 3 {
        return Err(CoreError::InvalidArgument("sweep needs at least 3 sample counts".into()));
    }
    let d = dict.dim();
    let cells: Vec<(usize, usize)> = (0..n_seeds)
        .flat_map(|s| (0..m_list.len()).map(move |j| (s, j)))
        .collect();
    let errs: Vec<f64> = cells
        .par_iter()
        .map(|&(s, j)| -> Result<f64> {
            let m = m_list[j];
            let mut cur = plan.derive(cell_tag(s, j)).stream(0).init_draws();
            let mut xs = Array2::zeros((m, d));
            let mut row = vec![0.0; d];
            for i in 0..m {
                sampler(&mut cur, &mut row);
                xs.row_mut(i).iter_mut().zip(row.iter()).for_each(|(o, v)| *o = *v);
            }
            let g = gram_matrix(dict, xs.view())?;
            Ok(frobenius((&g - &exact).view()))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<Vec<f64>> = (0..m_list.len())
        .map(|j| (0..n_seeds).map(|s| errs[s * m_list.len() + j]).collect())
        .collect();
    SweepReport::from_errors(m_list.iter().map(|&m| m as f64).collect(), errors)
}
