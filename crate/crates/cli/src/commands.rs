//! Implementations of the `mvk` subcommands. Each command resolves its
//! configuration, runs the corresponding pipeline stage, writes its artifacts
//! into the output directory, and echoes the resolved config.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mvk_core::dictionary::DictionaryDescriptor;
use mvk_core::edmd::{edmd, EdmdOptions, EdmdResult, OperatorKind, SpectralResult};
use mvk_core::io::{read_measure_path, read_pairs_csv, write_measure_path, write_pairs_csv};
use mvk_core::metrics::{gram_error_sweep, measure_error_sweep, strong_error_sweep, SweepReport};
use mvk_core::models::augment_circle_symmetry;
use mvk_core::{
    sample_initial_points, simulate_decoupled_with, simulate_ips_with, Dictionary,
    EmpiricalMeasure, MeasurePath, PairDataSet, RngPlan, SimOptions, TimeGrid,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

/// Stage tags separating the RNG streams of the measure-estimation run from
/// the decoupled data run (the pairs must be fresh draws, not reuses of the
/// particle-system noise).
const IPS_STAGE: u64 = 1;
const DECOUPLED_STAGE: u64 = 2;

pub const MEASURE_PATH_FILE: &str = "measure_path.mvmp";
pub const PAIRS_FILE: &str = "pairs.csv";

fn grid_of(step: f64, horizon: f64) -> Result<TimeGrid, CliError> {
    TimeGrid::from_step(horizon, step).map_err(CliError::config)
}

/// `mvk ips`: simulate the interacting particle system, write the measure
/// path and run metadata.
pub fn run_ips(cfg: &mut RunConfig, progress: bool) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let model = cfg.model.build(cfg.seed)?;
    let grid = grid_of(cfg.ips.step, cfg.ips.horizon)?;
    let plan = RngPlan::new(cfg.seed).derive(IPS_STAGE);
    cfg.echo(&cfg.output.clone())?;

    let start = Instant::now();
    let path = simulate_ips_with(model.as_ref(), cfg.ips.particles, grid, &plan, &SimOptions { progress })?;
    let runtime = start.elapsed().as_secs_f64();

    let file = cfg.output.join(MEASURE_PATH_FILE);
    write_measure_path(&file, &path)?;

    let last = path.snapshot(grid.steps());
    let meta = json!({
        "seed": cfg.seed,
        "model": cfg.model.name(),
        "particles": cfg.ips.particles,
        "steps": grid.steps(),
        "step_size": grid.step_size(),
        "horizon": grid.t_end(),
        "runtime_seconds": runtime,
        "final_mean": ensemble_mean(last),
        "final_variance": ensemble_variance(last),
    });
    write_json(&cfg.output.join("ips_meta.json"), &meta)?;
    Ok(file)
}

fn ensemble_mean(measure: &EmpiricalMeasure) -> Vec<f64> {
    (0..measure.dim()).map(|j| measure.mean_coord(j)).collect()
}

fn ensemble_variance(measure: &EmpiricalMeasure) -> Vec<f64> {
    (0..measure.dim())
        .map(|j| {
            let mean = measure.mean_coord(j);
            measure.expect(|x| (x[j] - mean) * (x[j] - mean))
        })
        .collect()
}

/// `mvk decoupled`: simulate decoupled trajectories against a stored measure
/// path and write the (initial, terminal) pairs.
pub fn run_decoupled(
    cfg: &mut RunConfig,
    measure_file: &Path,
    progress: bool,
) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let model = cfg.model.build(cfg.seed)?;
    let path = read_measure_path(measure_file)?;
    if path.snapshot(0).dim() != model.dim() {
        return Err(CliError::Config(format!(
            "measure path dimension {} does not match model dimension {}",
            path.snapshot(0).dim(),
            model.dim()
        )));
    }
    let grid = grid_of(cfg.decoupled.step, cfg.decoupled.lag)?;
    let plan = RngPlan::new(cfg.seed).derive(DECOUPLED_STAGE);
    cfg.echo(&cfg.output.clone())?;

    let xi = sample_initial_points(model.as_ref(), cfg.decoupled.trajectories, &plan);
    let pairs =
        simulate_decoupled_with(model.as_ref(), &path, xi.view(), grid, &plan, &SimOptions { progress })?;
    let file = cfg.output.join(PAIRS_FILE);
    write_pairs_csv(&file, &pairs)?;
    Ok(file)
}

/// Which spectra `mvk edmd` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorChoice {
    Koopman,
    Perron,
    Both,
}

impl std::str::FromStr for OperatorChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "koopman" => Ok(Self::Koopman),
            "perron" => Ok(Self::Perron),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown operator {other:?} (koopman|perron|both)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdmdRunOptions {
    pub operator: OperatorChoice,
    pub write_matrices: bool,
    pub grid_points: usize,
    /// Present indicator eigenfunctions as linear interpolation between bin
    /// centers (plot support only; never used in computations).
    pub interpolate: bool,
}

impl Default for EdmdRunOptions {
    fn default() -> Self {
        Self {
            operator: OperatorChoice::Both,
            write_matrices: false,
            grid_points: 401,
            interpolate: false,
        }
    }
}

/// Data source for `mvk edmd`: decoupled pairs (the standard route) or pairs
/// harvested from an interacting-particle path (comparison only; the
/// trajectories are not independent).
pub enum EdmdInput<'a> {
    Pairs(&'a Path),
    IpsPath(&'a Path),
}

/// `mvk edmd`: estimate the projected operators from pair data and write
/// spectra and eigenfunction tables.
pub fn run_edmd(
    cfg: &mut RunConfig,
    input: EdmdInput<'_>,
    opts: &EdmdRunOptions,
) -> Result<EdmdResult, CliError> {
    cfg.validate()?;
    let mut data = match input {
        EdmdInput::Pairs(file) => read_pairs_csv(file, cfg.decoupled.lag)?,
        EdmdInput::IpsPath(file) => {
            eprintln!(
                "edmd: estimating from interacting-particle pairs; trajectories are dependent, \
                 treat the spectrum as a comparison run"
            );
            let path = read_measure_path(file)?;
            PairDataSet::from_measure_path(&path, cfg.decoupled.lag)?
        }
    };
    if cfg.edmd.symmetry_augment {
        data = augment_circle_symmetry(&data).map_err(CliError::config)?;
    }

    let (lo, hi) = data_range(&data);
    let descriptor = cfg.dictionary.resolve(lo, hi)?;
    let dict = descriptor.build()?;
    cfg.echo(&cfg.output.clone())?;

    let result = edmd(
        &dict,
        &data,
        &EdmdOptions { reg: cfg.edmd.reg, n_eig: cfg.edmd.n_eig, drop_empty: true },
    )?;

    let write_koopman = matches!(opts.operator, OperatorChoice::Koopman | OperatorChoice::Both);
    let write_perron = matches!(opts.operator, OperatorChoice::Perron | OperatorChoice::Both);
    if write_koopman {
        write_spectrum(&cfg.output.join("spectrum.json"), &result, &result.koopman_spectrum)?;
        write_eigenfunctions(
            &cfg.output.join("eigenfunctions.csv"),
            &result,
            OperatorKind::Koopman,
            opts,
            (lo, hi),
        )?;
    }
    if write_perron {
        write_spectrum(
            &cfg.output.join("spectrum_perron.json"),
            &result,
            &result.perron_spectrum,
        )?;
        write_eigenfunctions(
            &cfg.output.join("eigenfunctions_perron.csv"),
            &result,
            OperatorKind::PerronFrobenius,
            opts,
            (lo, hi),
        )?;
    }
    if opts.write_matrices {
        write_matrices(&cfg.output.join("matrices.json"), &result)?;
    }
    Ok(result)
}

fn data_range(data: &PairDataSet) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in data.xi().iter().chain(data.x_t().iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    (lo, hi)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn write_spectrum(
    path: &Path,
    result: &EdmdResult,
    spec: &SpectralResult,
) -> Result<(), CliError> {
    let eigenvalues: Vec<serde_json::Value> =
        spec.eigenvalues.iter().map(|l| json!({"re": l.re, "im": l.im})).collect();
    let value = json!({
        "operator": spec.operator,
        "eigenvalues": eigenvalues,
        "residuals": spec.residuals,
        "cond_G": result.matrices.cond_gram,
        "N": result.kept.len(),
        "M": result.matrices.sample_count,
    });
    write_json(path, &value)
}

fn write_matrices(path: &Path, result: &EdmdResult) -> Result<(), CliError> {
    let m = &result.matrices;
    let to_rows = |a: &ndarray::Array2<f64>| -> Vec<Vec<f64>> {
        a.rows().into_iter().map(|r| r.to_vec()).collect()
    };
    let value = json!({
        "kept": result.kept,
        "gram": to_rows(&m.gram),
        "structure": to_rows(&m.structure),
        "koopman": to_rows(&m.koopman),
        "perron": to_rows(&m.perron),
        "cond_G": m.cond_gram,
        "reg": m.reg,
        "M": m.sample_count,
        "dictionary": m.dictionary,
    });
    write_json(path, &value)
}

/// Evaluation grid for eigenfunction tables: a uniform 1-D grid over the
/// dictionary domain, or the kept Voronoi cell centers on the sphere.
fn eigenfunction_grid(
    result: &EdmdResult,
    grid_points: usize,
    data_range: (f64, f64),
) -> ndarray::Array2<f64> {
    let dict = result.dictionary();
    match dict.descriptor() {
        DictionaryDescriptor::Indicator1d { a, b, .. } => {
            linspace_column(a, b, grid_points)
        }
        DictionaryDescriptor::Monomial { .. } => {
            linspace_column(data_range.0, data_range.1, grid_points)
        }
        DictionaryDescriptor::VoronoiSphere { .. } => {
            let centers = dict.cell_centers().expect("voronoi has centers");
            let mut grid = ndarray::Array2::zeros((result.kept.len(), 3));
            for (row, &idx) in result.kept.iter().enumerate() {
                grid.row_mut(row).assign(&centers.row(idx));
            }
            grid
        }
    }
}

fn linspace_column(lo: f64, hi: f64, n: usize) -> ndarray::Array2<f64> {
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    ndarray::Array2::from_shape_fn((n, 1), |(i, _)| lo + i as f64 * step)
}

fn write_eigenfunctions(
    path: &Path,
    result: &EdmdResult,
    operator: OperatorKind,
    opts: &EdmdRunOptions,
    data_range: (f64, f64),
) -> Result<(), CliError> {
    use std::io::Write;

    let grid = eigenfunction_grid(result, opts.grid_points, data_range);
    let dict = result.dictionary();
    let n_eig = match operator {
        OperatorKind::Koopman => result.koopman_spectrum.eigenvalues.len(),
        OperatorKind::PerronFrobenius => result.perron_spectrum.eigenvalues.len(),
    };

    let interpolate = opts.interpolate && dict.bin_centers().is_some();
    let mut columns: Vec<Vec<num_complex::Complex64>> = Vec::with_capacity(n_eig);
    for l in 0..n_eig {
        if interpolate {
            columns.push(interpolated_indicator_values(result, operator, l, grid.column(0)));
        } else {
            columns.push(result.eigenfunction_values(operator, l, grid.view())?);
        }
    }

    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let coord_names: &[&str] = if grid.ncols() == 1 { &["x"] } else { &["x", "y", "z"] };
    let mut header: Vec<String> = coord_names.iter().map(|s| s.to_string()).collect();
    for l in 0..n_eig {
        header.push(format!("f{}_re", l + 1));
        header.push(format!("f{}_im", l + 1));
    }
    writeln!(w, "{}", header.join(",")).map_err(CliError::config)?;
    for (row_idx, row) in grid.rows().into_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        for col in &columns {
            fields.push(format!("{:.16e}", col[row_idx].re));
            fields.push(format!("{:.16e}", col[row_idx].im));
        }
        writeln!(w, "{}", fields.join(",")).map_err(CliError::config)?;
    }
    Ok(())
}

/// Plot support for indicator dictionaries: the eigenfunction is constant on
/// each bin; this renders the piecewise-linear interpolation between bin
/// centers instead of the raw step function.
fn interpolated_indicator_values(
    result: &EdmdResult,
    operator: OperatorKind,
    l: usize,
    xs: ndarray::ArrayView1<'_, f64>,
) -> Vec<num_complex::Complex64> {
    let dict = result.dictionary();
    let centers = dict.bin_centers().expect("indicator dictionary");
    let spec = match operator {
        OperatorKind::Koopman => &result.koopman_spectrum,
        OperatorKind::PerronFrobenius => &result.perron_spectrum,
    };
    let mut values = vec![num_complex::Complex64::new(0.0, 0.0); centers.len()];
    for (row, &full_idx) in result.kept.iter().enumerate() {
        values[full_idx] = spec.eigenvectors[[row, l]];
    }
    xs.iter()
        .map(|&x| {
            if x <= centers[0] {
                return values[0];
            }
            if x >= centers[centers.len() - 1] {
                return values[centers.len() - 1];
            }
            let idx = centers.partition_point(|&c| c <= x) - 1;
            let (c0, c1) = (centers[idx], centers[idx + 1]);
            let t = (x - c0) / (c1 - c0);
            values[idx] * (1.0 - t) + values[idx + 1] * t
        })
        .collect()
}

/// Sweep families behind `mvk sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Gram,
    Strong,
    Particles,
}

impl std::str::FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gram" => Ok(Self::Gram),
            "strong" => Ok(Self::Strong),
            "particles" => Ok(Self::Particles),
            other => Err(format!("unknown sweep kind {other:?} (gram|strong|particles)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRunOptions {
    pub seeds: usize,
    /// Acceptance window for the fitted slope; `None` bound = unbounded.
    pub window: (Option<f64>, Option<f64>),
}

/// Per-kind default acceptance windows for the fitted slope.
pub fn default_window(kind: SweepKind) -> (Option<f64>, Option<f64>) {
    match kind {
        SweepKind::Gram => (Some(-0.65), Some(-0.35)),
        SweepKind::Strong => (Some(0.85), None),
        SweepKind::Particles => (Some(-0.75), Some(-0.3)),
    }
}

/// `mvk sweep`: run a convergence sweep; returns the report and whether the
/// fitted slope landed inside the acceptance window.
pub fn run_sweep(
    cfg: &mut RunConfig,
    kind: SweepKind,
    opts: &SweepRunOptions,
) -> Result<(SweepReport, bool), CliError> {
    cfg.validate()?;
    let plan = RngPlan::new(cfg.seed);
    let report = match kind {
        SweepKind::Gram => {
            // monomials {1, x} under Unif[−1, 1] against the closed-form Gram
            let dict = Dictionary::monomial(1, 1).map_err(CliError::config)?;
            let exact = ndarray::array![[1.0, 0.0], [0.0, 1.0 / 3.0]];
            gram_error_sweep(
                &dict,
                exact.view(),
                |cur, out| out[0] = cur.uniform_in(-1.0, 1.0),
                &[100, 1_000, 10_000, 100_000],
                opts.seeds,
                &plan,
            )?
        }
        SweepKind::Strong => {
            let model = cfg.model.build(cfg.seed)?;
            if model.dim() != 1 {
                return Err(CliError::Config("strong sweep is defined for 1-D models".into()));
            }
            let grid = TimeGrid::new(1.0, 10).map_err(CliError::config)?;
            let frozen = MeasurePath::constant(
                EmpiricalMeasure::from_scalars(&[0.0]).map_err(CliError::config)?,
                grid,
            );
            strong_error_sweep(
                model.as_ref(),
                &frozen,
                1.0,
                &[0.2, 0.1, 0.05, 0.025],
                opts.seeds,
                &plan,
                8,
            )?
        }
        SweepKind::Particles => {
            let model = cfg.model.build(cfg.seed)?;
            measure_error_sweep(
                model.as_ref(),
                &[100, 316, 1_000, 3_162],
                cfg.ips.step,
                1.0,
                opts.seeds,
                &plan,
                16,
            )?
        }
    };

    cfg.echo(&cfg.output.clone())?;
    write_sweep_files(&cfg.output, kind, &report, opts.window)?;
    let pass = window_contains(opts.window, report.slope);
    Ok((report, pass))
}

fn window_contains(window: (Option<f64>, Option<f64>), slope: f64) -> bool {
    if slope.is_nan() {
        return false;
    }
    window.0.is_none_or(|lo| slope >= lo) && window.1.is_none_or(|hi| slope <= hi)
}

fn write_sweep_files(
    out: &Path,
    kind: SweepKind,
    report: &SweepReport,
    window: (Option<f64>, Option<f64>),
) -> Result<(), CliError> {
    use std::io::Write;
    let file = std::fs::File::create(out.join("sweep.csv"))
        .map_err(|e| CliError::Config(format!("cannot write sweep.csv: {e}")))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "parameter,mean_error,std_error").map_err(CliError::config)?;
    for i in 0..report.parameter.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e}",
            report.parameter[i], report.mean_error[i], report.std_error[i]
        )
        .map_err(CliError::config)?;
    }
    drop(w);

    let kind_name = match kind {
        SweepKind::Gram => "gram",
        SweepKind::Strong => "strong",
        SweepKind::Particles => "particles",
    };
    // does the error respect a C·p^{-1/2} envelope fitted at the first point?
    let bound_ok = if kind == SweepKind::Particles {
        let c = report.mean_error[0] * report.parameter[0].sqrt();
        Some(
            report
                .parameter
                .iter()
                .zip(report.mean_error.iter())
                .all(|(p, e)| *e <= 1.05 * c / p.sqrt()),
        )
    } else {
        None
    };
    let value = json!({
        "kind": kind_name,
        "slope": report.slope,
        "slope_half_width": report.slope_half_width,
        "window": {"lo": window.0, "hi": window.1},
        "pass": window_contains(window, report.slope),
        "half_rate_bound_satisfied": bound_ok,
        "parameter": report.parameter,
        "mean_error": report.mean_error,
        "std_error": report.std_error,
    });
    write_json(&out.join("sweep.json"), &value)
}

/// `mvk bench`: the named full recipes (simulate, decouple, estimate),
/// writing every stage artifact plus a short summary.
pub fn run_bench(
    name: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    progress: bool,
) -> Result<EdmdResult, CliError> {
    let mut cfg = RunConfig::bench_recipe(name)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.output = out;
    }
    let measure_file = run_ips(&mut cfg, progress)?;
    let pairs_file = run_decoupled(&mut cfg, &measure_file, progress)?;
    let result = run_edmd(&mut cfg, EdmdInput::Pairs(&pairs_file), &EdmdRunOptions::default())?;

    let moduli: Vec<f64> = result.koopman_spectrum.eigenvalues.iter().map(|l| l.norm()).collect();
    let summary = json!({
        "benchmark": name,
        "seed": cfg.seed,
        "koopman_eigenvalue_moduli": moduli,
        "cond_G": result.matrices.cond_gram,
        "kept_basis_functions": result.kept.len(),
        "samples": result.matrices.sample_count,
    });
    write_json(&cfg.output.join("bench_summary.json"), &summary)?;
    Ok(result)
}

/// Resolves `--threads` / `MVK_THREADS` and pins the global thread pool.
/// Returns the chosen cap, if any.
pub fn configure_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let from_env = std::env::var("MVK_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    let threads = flag.or(from_env);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(threads)
}
