//! Path simulation of GBM and of the grid-matching processes.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! so a [`PathSet`] is bit-identical for a given configuration regardless of
//! how many worker threads produced it.

mod euler;
mod exact;

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::drift::VolatilitySpec;

pub use euler::{
    euler_default_grid, simulate_euler, simulate_euler_anchored, AnchorMode, EULER_DEFAULT_SUB_STEPS,
    EULER_DEFAULT_WINDOW_FRACTION, POSITIVITY_FLOOR,
};
pub use exact::{risk_neutral_dynamics, simulate_exact_proportional, simulate_gbm, LogBridgeKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Objective,
    RiskNeutral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Gbm,
    ExactProportional { nu: f64 },
    Euler { vol: VolatilitySpec },
}

impl Generator {
    pub fn label(&self) -> String {
        match self {
            Generator::Gbm => "gbm".into(),
            Generator::ExactProportional { nu } => format!("exact_proportional({nu})"),
            Generator::Euler { vol } => format!("euler({})", vol.label()),
        }
    }
}

pub(crate) fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Simulated trajectories sampled on a common time axis.
#[derive(Debug, Clone)]
pub struct PathSet {
    times: Vec<f64>,
    values: Vec<f64>,
    measure: Measure,
    generator: Generator,
    seed: u64,
    excluded_paths: usize,
    clamped_steps: usize,
    total_steps: usize,
}

impl PathSet {
    pub(crate) fn from_rows(
        times: Vec<f64>,
        rows: Vec<Vec<f64>>,
        measure: Measure,
        generator: Generator,
        seed: u64,
    ) -> Self {
        let mut values = Vec::with_capacity(rows.len() * times.len());
        for row in rows {
            debug_assert_eq!(row.len(), times.len());
            values.extend_from_slice(&row);
        }
        Self {
            times,
            values,
            measure,
            generator,
            seed,
            excluded_paths: 0,
            clamped_steps: 0,
            total_steps: 0,
        }
    }

    pub(crate) fn with_step_counts(mut self, excluded: usize, clamped: usize, total: usize) -> Self {
        self.excluded_paths = excluded;
        self.clamped_steps = clamped;
        self.total_steps = total;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_paths(&self) -> usize {
        if self.times.is_empty() {
            0
        } else {
            self.values.len() / self.times.len()
        }
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.times.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.times.len())
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.paths().map(|p| p[k]).collect()
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Paths dropped because a step produced a non-finite value.
    pub fn excluded_paths(&self) -> usize {
        self.excluded_paths
    }

    /// Euler steps that hit the positivity floor, over retained and excluded paths.
    pub fn clamped_steps(&self) -> usize {
        self.clamped_steps
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn clamp_fraction(&self) -> f64 {
        if self.total_steps == 0 {
            0.0
        } else {
            self.clamped_steps as f64 / self.total_steps as f64
        }
    }

    /// Index of the sample time equal to `t` up to `1e-9·max(1, |t|)`.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.times.len() && (self.times[k] - t).abs() <= tol).then_some(k)
    }

    /// Dumps the set as CSV: `# key = value` header lines (config, seed,
    /// generator) followed by `path_id,t,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[(String, String)]) -> io::Result<()> {
        writeln!(w, "# generator = {}", self.generator.label())?;
        writeln!(w, "# measure = {:?}", self.measure)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# excluded_paths = {}", self.excluded_paths)?;
        writeln!(w, "# clamped_steps = {}", self.clamped_steps)?;
        for (k, v) in metadata {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "path_id,t,value")?;
        for (i, path) in self.paths().enumerate() {
            for (t, v) in self.times.iter().zip(path) {
                writeln!(w, "{i},{t:.16e},{v:.16e}")?;
            }
        }
        Ok(())
    }
}

impl PartialEq for PathSet {
    fn eq(&self, other: &Self) -> bool {
        self.times == other.times
            && self.values == other.values
            && self.measure == other.measure
            && self.seed == other.seed
            && self.excluded_paths == other.excluded_paths
            && self.clamped_steps == other.clamped_steps
            && self.generator.label() == other.generator.label()
    }
}
