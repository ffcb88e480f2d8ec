use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading grid `{0, Δ, …, NΔ}` with `Δ = T/N`, the GBM window length ε at the
/// start of each interval, and the number of recorded sub-steps per interval.
///
/// `epsilon == 0` selects the limit process in which the window vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub horizon: f64,
    pub intervals: usize,
    pub epsilon: f64,
    pub sub_steps: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, intervals: usize, epsilon: f64, sub_steps: usize) -> Result<Self> {
        let g = Self {
            horizon,
            intervals,
            epsilon,
            sub_steps,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid with the window given as a fraction of Δ.
    pub fn with_window_fraction(horizon: f64, intervals: usize, fraction: f64, sub_steps: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::invalid("grid needs at least one interval"));
        }
        Self::new(horizon, intervals, fraction * horizon / intervals as f64, sub_steps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.intervals == 0 {
            return Err(Error::invalid("grid needs at least one interval"));
        }
        if self.sub_steps == 0 {
            return Err(Error::invalid("sub_steps must be at least 1"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < self.delta()) {
            return Err(Error::invalid(format!(
                "epsilon must lie in [0, delta), got {} with delta {}",
                self.epsilon,
                self.delta()
            )));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    pub fn window_fraction(&self) -> f64 {
        self.epsilon / self.delta()
    }

    /// `i·T/N`, computed from the integer index so grid times are exact.
    pub fn grid_time(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.horizon
        } else {
            i as f64 * self.horizon / self.intervals as f64
        }
    }

    /// Index of the interval containing `t`, clamped to the last interval.
    pub fn interval_of(&self, t: f64) -> usize {
        let i = (t / self.delta()).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.intervals - 1)
        }
    }

    /// α(t) = Δ·floor(t/Δ).
    pub fn alpha(&self, t: f64) -> f64 {
        self.grid_time(self.interval_of(t))
    }

    /// Offset of the `k`-th recorded point inside an interval, `k ∈ 1..=sub_steps`.
    pub fn sub_offset(&self, k: usize) -> f64 {
        if k == self.sub_steps {
            self.delta()
        } else {
            k as f64 * self.delta() / self.sub_steps as f64
        }
    }

    /// All recorded times: `sub_steps·N + 1` points, grid times included exactly.
    pub fn record_times(&self) -> Vec<f64> {
        let mut times = Vec::with_capacity(self.intervals * self.sub_steps + 1);
        times.push(0.0);
        for i in 0..self.intervals {
            let start = self.grid_time(i);
            for k in 1..self.sub_steps {
                times.push(start + self.sub_offset(k));
            }
            times.push(self.grid_time(i + 1));
        }
        times
    }

    /// Position of grid time `i·Δ` in [`record_times`](Self::record_times).
    pub fn grid_index(&self, i: usize) -> usize {
        i * self.sub_steps
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            intervals: 12,
            epsilon: 0.0,
            sub_steps: 4,
        }
    }
}
