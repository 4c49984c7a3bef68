//! Paired (initial, terminal) snapshot data sets.

use ndarray::{Array2, ArrayView2};

use crate::error::{CoreError, Result};
use crate::measure::MeasurePath;

/// `(ξ^m, X_T^m)` pairs: row m of `xi` is an initial point, row m of `x_t`
/// the corresponding terminal point after lag `T`.
#[derive(Debug, Clone)]
pub struct PairDataSet {
    xi: Array2<f64>,
    x_t: Array2<f64>,
    lag: f64,
}

impl PairDataSet {
    pub fn new(xi: Array2<f64>, x_t: Array2<f64>, lag: f64) -> Result<Self> {
        if xi.shape() != x_t.shape() {
            return Err(CoreError::InvalidArgument(format!(
                "xi and x_t must have identical shapes, got {:?} vs {:?}",
                xi.shape(),
                x_t.shape()
            )));
        }
        if xi.nrows() == 0 || xi.ncols() == 0 {
            return Err(CoreError::EmptyMeasure);
        }
        if !(lag > 0.0) {
            return Err(CoreError::InvalidArgument(format!("lag must be positive, got {lag}")));
        }
        Ok(Self { xi, x_t, lag })
    }

    /// Pairs harvested from an interacting-particle path: snapshot 0 against
    /// the snapshot at `lag`. The trajectories interact, so the pairs are not
    /// independent; estimates built from them are for comparison only.
    pub fn from_measure_path(path: &MeasurePath, lag: f64) -> Result<Self> {
        if lag > path.grid().t_end() * (1.0 + 1e-12) {
            return Err(CoreError::MeasurePathTooShort { lag, horizon: path.grid().t_end() });
        }
        let k = path.lookup_index(lag)?;
        Self::new(
            path.snapshot(0).particles().to_owned(),
            path.snapshot(k).particles().to_owned(),
            lag,
        )
    }

    pub fn count(&self) -> usize {
        self.xi.nrows()
    }

    pub fn dim(&self) -> usize {
        self.xi.ncols()
    }

    pub fn lag(&self) -> f64 {
        self.lag
    }

    pub fn xi(&self) -> ArrayView2<'_, f64> {
        self.xi.view()
    }

    pub fn x_t(&self) -> ArrayView2<'_, f64> {
        self.x_t.view()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_lag_validation() {
        let a = Array2::zeros((3, 1));
        let b = Array2::zeros((2, 1));
        assert!(PairDataSet::new(a.clone(), b, 1.0).is_err());
        assert!(PairDataSet::new(a.clone(), a.clone(), 0.0).is_err());
        assert!(PairDataSet::new(a.clone(), a, 1.0).is_ok());
    }
}
