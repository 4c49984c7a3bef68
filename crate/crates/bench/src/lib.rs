//! Shared fixtures for the criterion benchmarks.

use ndarray::Array2;

use mvk_core::models::Cormier;
use mvk_core::{sample_initial_points, simulate_ips, MeasurePath, RngPlan, TimeGrid};

/// A short Cormier measure path plus matching initial points, sized for
/// benchmark iterations.
pub fn cormier_fixture(particles: usize) -> (Cormier, MeasurePath, Array2<f64>, TimeGrid) {
    let model = Cormier::new(14.0);
    let plan = RngPlan::new(4040);
    let grid = TimeGrid::new(0.5, 5).unwrap();
    let path = simulate_ips(&model, particles, grid, &plan).unwrap();
    let xi = sample_initial_points(&model, particles, &plan.derive(1));
    (model, path, xi, grid)
}
