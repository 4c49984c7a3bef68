//! Simulation of mean-field (McKean–Vlasov) stochastic differential
//! equations via interacting particle systems and the decoupled
//! Euler–Maruyama scheme, plus data-driven estimation of the projected
//! Koopman and Perron–Frobenius transfer operators from the simulated data.
//!
//! The pipeline has three stages:
//!
//! 1. [`sim::simulate_ips`] integrates the interacting particle system and
//!    records the empirical measure at every grid point (a
//!    [`measure::MeasurePath`]);
//! 2. [`sim::simulate_decoupled`] integrates independent trajectories of the
//!    decoupled equation against that frozen measure path, producing
//!    (initial, terminal) pairs (a [`data::PairDataSet`]);
//! 3. [`edmd::edmd`] projects the transfer operators onto a basis-function
//!    dictionary from the pairs and extracts eigenvalues and eigenfunctions,
//!    which expose invariant distributions and metastable sets.
//!
//! Everything downstream of a master seed is deterministic, independent of
//! thread count.

// Validation sites use `!(x > 0.0)` so NaN inputs fail the check too;
// rewriting them as `x <= 0.0` would accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dictionary;
pub mod edmd;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod metrics;
pub mod model;
pub mod models;
pub mod rng;
pub mod sim;

pub use data::PairDataSet;
pub use dictionary::{Dictionary, DictionaryDescriptor};
pub use edmd::{edmd, EdmdOptions, EdmdResult, OperatorKind, SpectralResult};
pub use error::{CoreError, Result};
pub use grid::TimeGrid;
pub use measure::{measure_expect, measure_lookup, EmpiricalMeasure, MeasurePath, ParticleEnsemble};
pub use model::{MeasureObservable, MeasureStats, Model};
pub use rng::RngPlan;
pub use sim::{
    euler_step, euler_step_with, sample_initial_points, simulate_decoupled,
    simulate_decoupled_with, simulate_ips, simulate_ips_with, SimOptions,
};
