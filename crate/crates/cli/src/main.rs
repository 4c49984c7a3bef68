//! `mvk`: simulate mean-field particle systems, generate decoupled training
//! pairs, estimate projected transfer operators, and run convergence sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mvk_cli::commands::{
    self, configure_threads, EdmdInput, EdmdRunOptions, OperatorChoice, SweepKind,
    SweepRunOptions,
};
use mvk_cli::config::RunConfig;
use mvk_cli::CliError;

#[derive(Parser)]
#[command(
    name = "mvk",
    version,
    about = "Mean-field SDE simulation and transfer-operator estimation",
    propagate_version = true
)]
struct Cli {
    /// Cap the worker thread count (falls back to MVK_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON run configuration; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (default from config, then "out")
    #[arg(long)]
    out: Option<PathBuf>,

    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,

    /// Report progress to stderr
    #[arg(long)]
    progress: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the interacting particle system and store the measure path
    Ips {
        #[command(flatten)]
        common: CommonArgs,

        /// Particle count override
        #[arg(long)]
        particles: Option<usize>,

        /// Time step override
        #[arg(long)]
        step: Option<f64>,

        /// Horizon override
        #[arg(long)]
        horizon: Option<f64>,
    },

    /// Simulate decoupled trajectories against a stored measure path
    Decoupled {
        #[command(flatten)]
        common: CommonArgs,

        /// Measure-path file written by `mvk ips`
        #[arg(long = "path")]
        measure_path: PathBuf,

        /// Trajectory count override
        #[arg(long)]
        trajectories: Option<usize>,

        /// Time step override
        #[arg(long)]
        step: Option<f64>,

        /// Lag override
        #[arg(long)]
        lag: Option<f64>,
    },

    /// Estimate the projected Koopman/Perron-Frobenius operators from pairs
    Edmd {
        #[command(flatten)]
        common: CommonArgs,

        /// Pair data CSV written by `mvk decoupled`
        #[arg(long, conflicts_with = "from_ips")]
        data: Option<PathBuf>,

        /// Estimate from interacting-particle pairs instead (comparison only:
        /// the trajectories are statistically dependent)
        #[arg(long)]
        from_ips: Option<PathBuf>,

        /// Number of eigenpairs override
        #[arg(long)]
        n_eig: Option<usize>,

        /// Ridge parameter override
        #[arg(long)]
        reg: Option<f64>,

        /// Duplicate circle data shifted by pi before estimating
        #[arg(long)]
        symmetry_augment: bool,

        /// Which operator spectra to write
        #[arg(long, default_value = "both")]
        operator: OperatorChoice,

        /// Also write the Gram/structure/operator matrices
        #[arg(long)]
        write_matrices: bool,

        /// Points in the 1-D eigenfunction table
        #[arg(long, default_value_t = 401)]
        grid_points: usize,

        /// Interpolate indicator eigenfunctions between bin centers (plots)
        #[arg(long)]
        interpolate: bool,
    },

    /// Convergence sweeps: gram | strong | particles
    Sweep {
        #[command(flatten)]
        common: CommonArgs,

        /// Sweep family
        kind: SweepKind,

        /// Seeds to average over
        #[arg(long)]
        seeds: Option<usize>,

        /// Acceptance window for the slope, as "lo,hi" (either side empty
        /// for unbounded, e.g. "0.85,")
        #[arg(long)]
        window: Option<String>,
    },

    /// Run a named full experiment recipe
    Bench {
        /// cormier | kuramoto-circle | kuramoto-sphere | ou
        name: String,

        /// Output directory (default "out/<name>")
        #[arg(long)]
        out: Option<PathBuf>,

        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,

        /// Report progress to stderr
        #[arg(long)]
        progress: bool,
    },
}

fn parse_window(text: &str) -> Result<(Option<f64>, Option<f64>), CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!("window must be \"lo,hi\", got {text:?}")));
    }
    let side = |s: &str| -> Result<Option<f64>, CliError> {
        if s.trim().is_empty() {
            Ok(None)
        } else {
            s.trim()
                .parse::<f64>()
                .map(Some)
                .map_err(|e| CliError::Config(format!("bad window bound {s:?}: {e}")))
        }
    };
    Ok((side(parts[0])?, side(parts[1])?))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Ips { common, particles, step, horizon } => {
            let mut cfg = common.resolve()?;
            if let Some(v) = particles {
                cfg.ips.particles = v;
            }
            if let Some(v) = step {
                cfg.ips.step = v;
            }
            if let Some(v) = horizon {
                cfg.ips.horizon = v;
            }
            let file = commands::run_ips(&mut cfg, common.progress)?;
            println!("wrote {}", file.display());
            Ok(())
        }
        Command::Decoupled { common, measure_path, trajectories, step, lag } => {
            let mut cfg = common.resolve()?;
            if let Some(v) = trajectories {
                cfg.decoupled.trajectories = v;
            }
            if let Some(v) = step {
                cfg.decoupled.step = v;
            }
            if let Some(v) = lag {
                cfg.decoupled.lag = v;
            }
            let file = commands::run_decoupled(&mut cfg, &measure_path, common.progress)?;
            println!("wrote {}", file.display());
            Ok(())
        }
        Command::Edmd {
            common,
            data,
            from_ips,
            n_eig,
            reg,
            symmetry_augment,
            operator,
            write_matrices,
            grid_points,
            interpolate,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(v) = n_eig {
                cfg.edmd.n_eig = v;
            }
            if let Some(v) = reg {
                cfg.edmd.reg = v;
            }
            if symmetry_augment {
                cfg.edmd.symmetry_augment = true;
            }
            let input = match (&data, &from_ips) {
                (Some(file), None) => EdmdInput::Pairs(file),
                (None, Some(file)) => EdmdInput::IpsPath(file),
                _ => {
                    return Err(CliError::Config(
                        "provide exactly one of --data or --from-ips".into(),
                    ))
                }
            };
            let opts =
                EdmdRunOptions { operator, write_matrices, grid_points, interpolate };
            let result = commands::run_edmd(&mut cfg, input, &opts)?;
            let lams: Vec<String> = result
                .koopman_spectrum
                .eigenvalues
                .iter()
                .map(|l| format!("{:.4}", l.norm()))
                .collect();
            println!("koopman eigenvalue moduli: [{}]", lams.join(", "));
            Ok(())
        }
        Command::Sweep { common, kind, seeds, window } => {
            let mut cfg = common.resolve()?;
            let window = match window {
                Some(text) => parse_window(&text)?,
                None => commands::default_window(kind),
            };
            let opts = SweepRunOptions { seeds: seeds.unwrap_or(20), window };
            let (report, pass) = commands::run_sweep(&mut cfg, kind, &opts)?;
            println!(
                "slope = {:.4} ± {:.4} ({})",
                report.slope,
                report.slope_half_width,
                if pass { "inside window" } else { "outside window" }
            );
            if pass {
                Ok(())
            } else {
                // sweep miss is its own failure class, distinct from the
                // config/numerics/linalg exit codes
                std::process::exit(1);
            }
        }
        Command::Bench { name, out, seed, progress } => {
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&name));
            let result = commands::run_bench(&name, Some(out.clone()), seed, progress)?;
            let lams: Vec<String> = result
                .koopman_spectrum
                .eigenvalues
                .iter()
                .map(|l| format!("{:.4}", l.norm()))
                .collect();
            println!("{name}: koopman eigenvalue moduli [{}] -> {}", lams.join(", "), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("mvk: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
