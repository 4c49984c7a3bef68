//! Particle ensembles, empirical measures, and time-indexed measure paths.

use ndarray::{Array2, ArrayView2};

use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;

/// A cloud of particle states, one row per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    states: Array2<f64>,
}

impl ParticleEnsemble {
    pub fn new(states: Array2<f64>) -> Result<Self> {
        if states.nrows() == 0 || states.ncols() == 0 {
            return Err(CoreError::EmptyMeasure);
        }
        Ok(Self { states })
    }

    pub fn count(&self) -> usize {
        self.states.nrows()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn states(&self) -> ArrayView2<'_, f64> {
        self.states.view()
    }

    /// Lossless conversion into the uniform-weight empirical measure.
    pub fn into_measure(self) -> EmpiricalMeasure {
        EmpiricalMeasure { particles: self.states }
    }
}

/// Uniform-weight atomic measure on a particle cloud (weights `1/count`
/// implicit).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    particles: Array2<f64>,
}

impl EmpiricalMeasure {
    pub fn new(particles: Array2<f64>) -> Result<Self> {
        if particles.nrows() == 0 || particles.ncols() == 0 {
            return Err(CoreError::EmptyMeasure);
        }
        Ok(Self { particles })
    }

    /// 1-D convenience constructor.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("shape"))
    }

    pub fn count(&self) -> usize {
        self.particles.nrows()
    }

    pub fn dim(&self) -> usize {
        self.particles.ncols()
    }

    pub fn particles(&self) -> ArrayView2<'_, f64> {
        self.particles.view()
    }

    /// Lossless inverse of [`ParticleEnsemble::into_measure`].
    pub fn into_ensemble(self) -> ParticleEnsemble {
        ParticleEnsemble { states: self.particles }
    }

    /// `(1/M̃)·Σ_m f(x_m)`, summed in particle order.
    pub fn expect(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut sum = 0.0;
        for row in self.particles.rows() {
            sum += f(row.as_slice().expect("row-major storage"));
        }
        sum / self.count() as f64
    }

    /// Mean of coordinate `j`.
    pub fn mean_coord(&self, j: usize) -> f64 {
        self.expect(|x| x[j])
    }
}

/// Free-function form of [`EmpiricalMeasure::expect`].
pub fn measure_expect(mu: &EmpiricalMeasure, f: impl Fn(&[f64]) -> f64) -> f64 {
    mu.expect(f)
}

/// Where a measure path came from, for run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub model: String,
}

/// A time-indexed family of empirical measures on a uniform grid: one
/// snapshot per grid point, all sharing particle count and dimension.
#[derive(Debug, Clone)]
pub struct MeasurePath {
    grid: TimeGrid,
    snapshots: Vec<EmpiricalMeasure>,
    provenance: Option<Provenance>,
}

impl MeasurePath {
    pub fn new(
        grid: TimeGrid,
        snapshots: Vec<EmpiricalMeasure>,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if snapshots.len() != grid.num_points() {
            return Err(CoreError::InvalidArgument(format!(
                "expected {} snapshots for the grid, got {}",
                grid.num_points(),
                snapshots.len()
            )));
        }
        let count = snapshots[0].count();
        let dim = snapshots[0].dim();
        for snap in &snapshots {
            if snap.count() != count || snap.dim() != dim {
                return Err(CoreError::InvalidArgument(
                    "snapshots must share particle count and dimension".into(),
                ));
            }
        }
        Ok(Self { grid, snapshots, provenance })
    }

    /// Path holding the same measure at every grid point (frozen law).
    pub fn constant(measure: EmpiricalMeasure, grid: TimeGrid) -> Self {
        let snapshots = vec![measure; grid.num_points()];
        Self { grid, snapshots, provenance: None }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn snapshots(&self) -> &[EmpiricalMeasure] {
        &self.snapshots
    }

    pub fn snapshot(&self, k: usize) -> &EmpiricalMeasure {
        &self.snapshots[k]
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Snapshot index at or before `t`: `floor(t/h̃ + 1e-9)`, so grid points
    /// computed in floating point resolve to their own index.
    pub fn lookup_index(&self, t: f64) -> Result<usize> {
        let t_end = self.grid.t_end();
        if !t.is_finite() || t < 0.0 || t > t_end * (1.0 + 1e-12) {
            return Err(CoreError::TimeOutOfRange { t, t_end });
        }
        let idx = (t / self.grid.step_size() + 1e-9).floor() as usize;
        Ok(idx.min(self.grid.steps()))
    }

    /// The snapshot at the grid point at or before `t`.
    pub fn lookup(&self, t: f64) -> Result<&EmpiricalMeasure> {
        Ok(&self.snapshots[self.lookup_index(t)?])
    }
}

/// Free-function form of [`MeasurePath::lookup`].
pub fn measure_lookup(path: &MeasurePath, t: f64) -> Result<&EmpiricalMeasure> {
    path.lookup(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_with(h: f64, steps: usize) -> MeasurePath {
        let grid = TimeGrid::new(h * steps as f64, steps).unwrap();
        let snaps = (0..=steps)
            .map(|k| EmpiricalMeasure::from_scalars(&[k as f64]).unwrap())
            .collect();
        MeasurePath::new(grid, snaps, None).unwrap()
    }

    #[test]
    fn expect_examples() {
        let mu = EmpiricalMeasure::from_scalars(&[0.0]).unwrap();
        assert_eq!(mu.expect(|x| x[0].cos()), 1.0);

        let mu = EmpiricalMeasure::from_scalars(&[-1.0, 1.0]).unwrap();
        assert_eq!(mu.expect(|x| x[0]), 0.0);

        // direct-summation oracle: (cos 0 + cos(pi/2) + cos(pi)) / 3
        let pts = [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI];
        let oracle: f64 = pts.iter().map(|x| x.cos()).sum::<f64>() / 3.0;
        let mu = EmpiricalMeasure::from_scalars(&pts).unwrap();
        assert!((mu.expect(|x| x[0].cos()) - oracle).abs() < 1e-15);
        assert!(oracle.abs() < 1e-15);
    }

    #[test]
    fn expect_is_linear() {
        let plan = crate::rng::RngPlan::new(11);
        for m in 0..20 {
            let mut cur = plan.stream(m).init_draws();
            let vals: Vec<f64> = (0..5).map(|_| cur.uniform_in(-2.0, 2.0)).collect();
            let mu = EmpiricalMeasure::from_scalars(&vals).unwrap();
            let (a, b) = (cur.uniform_in(-3.0, 3.0), cur.uniform_in(-3.0, 3.0));
            let f = |x: &[f64]| x[0].cos();
            let g = |x: &[f64]| x[0] * x[0];
            let lhs = mu.expect(|x| a * f(x) + b * g(x));
            let rhs = a * mu.expect(f) + b * mu.expect(g);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_measure_rejected() {
        assert!(matches!(
            EmpiricalMeasure::new(Array2::zeros((0, 1))),
            Err(CoreError::EmptyMeasure)
        ));
    }

    #[test]
    fn ensemble_measure_round_trip_is_bit_exact() {
        let states =
            Array2::from_shape_vec((2, 2), vec![0.1, -0.2, f64::MIN_POSITIVE, 3.0e300]).unwrap();
        let ensemble = ParticleEnsemble::new(states.clone()).unwrap();
        let back = ensemble.into_measure().into_ensemble();
        assert_eq!(back.states(), states.view());
    }

    #[test]
    fn lookup_examples() {
        let path = path_with(0.1, 10);
        assert_eq!(path.lookup_index(0.0).unwrap(), 0);
        assert_eq!(path.lookup_index(0.25).unwrap(), 2);
        // t = 0.3 must resolve to index 3 even though 0.3/0.1 < 3 in floats
        assert_eq!(path.lookup_index(0.3).unwrap(), 3);
        assert!(path.lookup(-0.1).is_err());
        assert!(path.lookup(1.5).is_err());
    }

    #[test]
    fn lookup_hits_every_grid_point() {
        let path = path_with(0.1, 50);
        for k in 0..=50 {
            let t = path.grid().point(k);
            assert_eq!(path.lookup_index(t).unwrap(), k, "k = {k}");
            // also the naive k*h float value
            let t_naive = k as f64 * 0.1;
            assert_eq!(path.lookup_index(t_naive.min(5.0)).unwrap(), k);
        }
    }

    #[test]
    fn path_shape_validation() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let snaps = vec![EmpiricalMeasure::from_scalars(&[0.0]).unwrap(); 2];
        assert!(MeasurePath::new(grid, snaps, None).is_err());
    }
}
