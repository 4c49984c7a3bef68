//! Uniform time grids.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Uniform grid on `[0, t_end]` with `steps` intervals, i.e. `steps + 1`
/// points `t_k = k·h`, `h = t_end / steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(CoreError::InvalidArgument("grid needs at least one step".into()));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "grid horizon must be positive and finite, got {t_end}"
            )));
        }
        Ok(Self { t_end, steps })
    }

    /// Convenience constructor from a step size; `steps = round(t_end / h)`
    /// must reproduce the horizon to 1e-9 relative.
    pub fn from_step(t_end: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(CoreError::InvalidArgument(format!("step must be positive, got {h}")));
        }
        let steps = (t_end / h).round();
        if steps < 1.0 || ((steps * h - t_end) / t_end).abs() > 1e-9 {
            return Err(CoreError::InvalidArgument(format!(
                "step {h} does not divide horizon {t_end}"
            )));
        }
        Self::new(t_end, steps as usize)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn num_points(&self) -> usize {
        self.steps + 1
    }

    pub fn step_size(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    /// `t_k`, with the last point pinned to `t_end` exactly.
    pub fn point(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.t_end
        } else {
            k as f64 * self.step_size()
        }
    }
}
