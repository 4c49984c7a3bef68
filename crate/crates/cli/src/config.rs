//! Run configuration: JSON files with flag overrides (flags win). Every run
//! echoes the fully resolved configuration next to its outputs so experiments
//! can be reproduced from the artifact directory alone.

use std::path::{Path, PathBuf};

use mvk_core::dictionary::DictionaryDescriptor;
use mvk_core::models::{BetaSpec, Cormier, KuramotoCircle, KuramotoSphere, OrnsteinUhlenbeck};
use mvk_core::{Model, RngPlan};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Tag used to derive the sphere model's random antisymmetric matrix from
/// the master seed.
const A_MATRIX_TAG: u64 = 0x414d_4154;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Cormier {
        #[serde(default = "default_j")]
        j: f64,
        /// Uniform initial law [lo, hi].
        #[serde(default = "default_cormier_init")]
        init: [f64; 2],
    },
    KuramotoCircle {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    KuramotoSphere {
        #[serde(default = "default_half")]
        alpha: f64,
        #[serde(default = "default_half")]
        gamma: f64,
        /// β is ±magnitude per trajectory unless `beta_fixed` is set.
        #[serde(default = "default_beta_magnitude")]
        beta_magnitude: f64,
        #[serde(default)]
        beta_fixed: Option<f64>,
        /// Explicit antisymmetric matrix; generated from the seed when absent.
        #[serde(default)]
        a: Option<[[f64; 3]; 3]>,
    },
    Ou {
        #[serde(default = "default_one")]
        rate: f64,
        #[serde(default = "default_one")]
        sigma: f64,
        #[serde(default)]
        init_mean: f64,
        #[serde(default = "default_one")]
        init_std: f64,
    },
}

fn default_j() -> f64 {
    14.0
}
fn default_cormier_init() -> [f64; 2] {
    [-7.5, 10.0]
}
fn default_sigma() -> f64 {
    1.0
}
fn default_half() -> f64 {
    0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_beta_magnitude() -> f64 {
    20.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Cormier { j: default_j(), init: default_cormier_init() }
    }
}

impl ModelConfig {
    /// Builds the model; the sphere's A matrix is derived from `seed` when
    /// not given explicitly, and echoed back into the config.
    pub fn build(&mut self, seed: u64) -> Result<Box<dyn Model>, CliError> {
        match self {
            ModelConfig::Cormier { j, init } => {
                if !(init[0] < init[1]) {
                    return Err(CliError::Config("cormier init needs lo < hi".into()));
                }
                Ok(Box::new(Cormier::with_init(*j, init[0], init[1])))
            }
            ModelConfig::KuramotoCircle { sigma } => {
                Ok(Box::new(KuramotoCircle::new(*sigma).map_err(CliError::config)?))
            }
            ModelConfig::KuramotoSphere { alpha, gamma, beta_magnitude, beta_fixed, a } => {
                let matrix = match a {
                    Some(rows) => {
                        let mut m = Array2::zeros((3, 3));
                        for (i, row) in rows.iter().enumerate() {
                            for (j, v) in row.iter().enumerate() {
                                m[[i, j]] = *v;
                            }
                        }
                        m
                    }
                    None => {
                        let plan = RngPlan::new(seed).derive(A_MATRIX_TAG);
                        let mut draws = plan.stream(0).init_draws();
                        let m = mvk_core::models::random_antisymmetric(&mut draws);
                        let mut echo = [[0.0; 3]; 3];
                        for i in 0..3 {
                            for j in 0..3 {
                                echo[i][j] = m[[i, j]];
                            }
                        }
                        *a = Some(echo);
                        m
                    }
                };
                let beta = match beta_fixed {
                    Some(v) => BetaSpec::Fixed(*v),
                    None => BetaSpec::Random { magnitude: *beta_magnitude },
                };
                Ok(Box::new(
                    KuramotoSphere::new(matrix, *alpha, *gamma, beta).map_err(CliError::config)?,
                ))
            }
            ModelConfig::Ou { rate, sigma, init_mean, init_std } => {
                Ok(Box::new(OrnsteinUhlenbeck::new(*rate, *sigma, *init_mean, *init_std)))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Cormier { .. } => "cormier",
            ModelConfig::KuramotoCircle { .. } => "kuramoto-circle",
            ModelConfig::KuramotoSphere { .. } => "kuramoto-sphere",
            ModelConfig::Ou { .. } => "ou",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IpsConfig {
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_particles() -> usize {
    50_000
}
fn default_step() -> f64 {
    0.1
}
fn default_horizon() -> f64 {
    5.0
}

impl Default for IpsConfig {
    fn default() -> Self {
        Self { particles: default_particles(), step: default_step(), horizon: default_horizon() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DecoupledConfig {
    #[serde(default = "default_particles")]
    pub trajectories: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_lag")]
    pub lag: f64,
}

fn default_lag() -> f64 {
    0.5
}

impl Default for DecoupledConfig {
    fn default() -> Self {
        Self { trajectories: default_particles(), step: default_step(), lag: default_lag() }
    }
}

/// Dictionary request; indicator bounds default to the data range.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DictionaryConfig {
    Indicator1d {
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        b: Option<f64>,
        #[serde(default = "default_bins")]
        n: usize,
    },
    Monomial {
        max_order: u32,
        #[serde(default = "default_dim_one")]
        dim: usize,
    },
    VoronoiSphere {
        #[serde(default = "default_cells")]
        n: usize,
    },
}

fn default_bins() -> usize {
    100
}
fn default_dim_one() -> usize {
    1
}
fn default_cells() -> usize {
    200
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig::Indicator1d { a: None, b: None, n: default_bins() }
    }
}

impl DictionaryConfig {
    /// Resolves open bounds against the data range and echoes them back.
    pub fn resolve(&mut self, data_min: f64, data_max: f64) -> Result<DictionaryDescriptor, CliError> {
        match self {
            DictionaryConfig::Indicator1d { a, b, n } => {
                let lo = *a.get_or_insert(data_min);
                let hi = *b.get_or_insert(data_max);
                Ok(DictionaryDescriptor::Indicator1d { a: lo, b: hi, n: *n })
            }
            DictionaryConfig::Monomial { max_order, dim } => {
                Ok(DictionaryDescriptor::Monomial { max_order: *max_order, dim: *dim })
            }
            DictionaryConfig::VoronoiSphere { n } => {
                Ok(DictionaryDescriptor::VoronoiSphere { n: *n })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EdmdConfig {
    #[serde(default = "default_n_eig")]
    pub n_eig: usize,
    #[serde(default)]
    pub reg: f64,
    /// Duplicate circle data shifted by π before estimating.
    #[serde(default)]
    pub symmetry_augment: bool,
}

fn default_n_eig() -> usize {
    6
}

impl Default for EdmdConfig {
    fn default() -> Self {
        Self { n_eig: default_n_eig(), reg: 0.0, symmetry_augment: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub ips: IpsConfig,
    #[serde(default)]
    pub decoupled: DecoupledConfig,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
    #[serde(default)]
    pub edmd: EdmdConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_seed() -> u64 {
    20_250_801
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.ips.particles < 2 {
            return Err(CliError::Config("ips.particles must be at least 2".into()));
        }
        if self.decoupled.trajectories == 0 {
            return Err(CliError::Config("decoupled.trajectories must be positive".into()));
        }
        for (label, v) in [
            ("ips.step", self.ips.step),
            ("ips.horizon", self.ips.horizon),
            ("decoupled.step", self.decoupled.step),
            ("decoupled.lag", self.decoupled.lag),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{label} must be positive, got {v}")));
            }
        }
        if self.decoupled.lag > self.ips.horizon * (1.0 + 1e-12) {
            return Err(CliError::Config(format!(
                "decoupled.lag {} exceeds ips.horizon {}",
                self.decoupled.lag, self.ips.horizon
            )));
        }
        if let EdmdConfig { n_eig: 0, .. } = self.edmd {
            return Err(CliError::Config("edmd.n_eig must be positive".into()));
        }
        Ok(())
    }

    /// Writes the fully resolved config next to the outputs.
    pub fn echo(&self, out_dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("config serialization: {e}")))?;
        std::fs::write(out_dir.join("config_resolved.json"), text + "\n")
            .map_err(|e| CliError::Config(format!("cannot write config echo: {e}")))?;
        Ok(())
    }

    /// The named §-experiment recipes behind `mvk bench`.
    pub fn bench_recipe(name: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        match name {
            "cormier" => {
                cfg.model = ModelConfig::Cormier { j: 14.0, init: [-7.5, 10.0] };
                cfg.ips = IpsConfig { particles: 50_000, step: 0.1, horizon: 5.0 };
                cfg.decoupled = DecoupledConfig { trajectories: 50_000, step: 0.1, lag: 0.5 };
                cfg.dictionary = DictionaryConfig::Indicator1d { a: None, b: None, n: 100 };
                cfg.edmd = EdmdConfig { n_eig: 6, reg: 0.0, symmetry_augment: false };
            }
            "kuramoto-circle" => {
                cfg.model = ModelConfig::KuramotoCircle { sigma: 1.0 };
                cfg.ips = IpsConfig { particles: 5_000, step: 0.01, horizon: 1.0 };
                cfg.decoupled = DecoupledConfig { trajectories: 5_000, step: 0.01, lag: 1.0 };
                cfg.dictionary = DictionaryConfig::Monomial { max_order: 7, dim: 1 };
                cfg.edmd = EdmdConfig { n_eig: 6, reg: 0.0, symmetry_augment: true };
            }
            "kuramoto-sphere" => {
                cfg.model = ModelConfig::KuramotoSphere {
                    alpha: 0.5,
                    gamma: 0.5,
                    beta_magnitude: 20.0,
                    beta_fixed: None,
                    a: None,
                };
                cfg.ips = IpsConfig { particles: 5_000, step: 0.01, horizon: 3.0 };
                cfg.decoupled = DecoupledConfig { trajectories: 5_000, step: 0.01, lag: 0.5 };
                cfg.dictionary = DictionaryConfig::VoronoiSphere { n: 200 };
                cfg.edmd = EdmdConfig { n_eig: 6, reg: 0.0, symmetry_augment: false };
            }
            "ou" => {
                cfg.model =
                    ModelConfig::Ou { rate: 1.0, sigma: 1.0, init_mean: 0.0, init_std: 1.0 };
                cfg.ips = IpsConfig { particles: 10_000, step: 0.05, horizon: 2.0 };
                cfg.decoupled = DecoupledConfig { trajectories: 10_000, step: 0.05, lag: 0.5 };
                cfg.dictionary = DictionaryConfig::Indicator1d { a: None, b: None, n: 100 };
                cfg.edmd = EdmdConfig { n_eig: 4, reg: 0.0, symmetry_augment: false };
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown benchmark {other:?}; available: cormier, kuramoto-circle, kuramoto-sphere, ou"
                )))
            }
        }
        Ok(cfg)
    }
}
