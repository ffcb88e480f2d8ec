use serde::{Deserialize, Serialize};

use super::ks::{ks_test_lognormal, ks_test_normal, KsResult};
use super::report::ValidationEntry;
use super::KS_LEVEL;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::market::MarketParams;
use crate::math::{correlation, mean_var};
use crate::sim::PathSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub time: f64,
    pub ks: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnCheck {
    pub interval: usize,
    pub ks: KsResult,
    pub mean: f64,
    pub mean_reference: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_reference: f64,
    pub variance_se: f64,
}

impl ReturnCheck {
    pub fn mean_in_band(&self) -> bool {
        (self.mean - self.mean_reference).abs() < 3.0 * self.mean_se
    }

    pub fn variance_in_band(&self) -> bool {
        (self.variance - self.variance_reference).abs() < 3.0 * self.variance_se
    }

    pub fn pass(&self) -> bool {
        self.ks.p_value > KS_LEVEL && self.mean_in_band() && self.variance_in_band()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCheck {
    pub interval: usize,
    pub correlation: f64,
    /// `3/√n`
    pub band: f64,
}

impl CorrelationCheck {
    pub fn pass(&self) -> bool {
        self.correlation.abs() < self.band
    }
}

/// Grid-time law checks on a path set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDiagnostics {
    pub n_paths: usize,
    /// `Y_{iΔ}` against the GBM lognormal law, `i = 1..=N`.
    pub marginals: Vec<MarginalCheck>,
    /// `ln(Y_{(i+1)Δ}/Y_{iΔ})` against `N((μ−σ̄²/2)Δ, σ̄²Δ)`.
    pub returns: Vec<ReturnCheck>,
    /// Correlation of successive grid returns `i` and `i+1`.
    pub successive: Vec<CorrelationCheck>,
    /// Correlation of return `i` with `ln Y_{iΔ}`, `i ≥ 1`.
    pub return_vs_level: Vec<CorrelationCheck>,
}

impl GridDiagnostics {
    pub fn marginals_pass(&self) -> bool {
        self.marginals.iter().all(|m| m.ks.p_value > KS_LEVEL)
    }

    pub fn returns_pass(&self) -> bool {
        self.returns.iter().all(ReturnCheck::pass)
    }

    pub fn correlations_pass(&self) -> bool {
        self.successive
            .iter()
            .chain(&self.return_vs_level)
            .all(CorrelationCheck::pass)
    }

    pub fn all_pass(&self) -> bool {
        self.marginals_pass() && self.returns_pass() && self.correlations_pass()
    }

    pub fn entries(&self) -> Vec<ValidationEntry> {
        let mut out = Vec::new();
        for m in &self.marginals {
            out.push(ValidationEntry::p_value(
                format!("marginal_ks t={:.6}", m.time),
                m.ks.statistic,
                m.ks.p_value,
                KS_LEVEL,
            ));
        }
        for r in &self.returns {
            out.push(ValidationEntry::p_value(
                format!("return_ks interval={}", r.interval),
                r.ks.statistic,
                r.ks.p_value,
                KS_LEVEL,
            ));
            out.push(ValidationEntry::residual(
                format!("return_mean interval={}", r.interval),
                r.mean,
                (r.mean - r.mean_reference) / r.mean_se,
                3.0,
            ));
            out.push(ValidationEntry::residual(
                format!("return_variance interval={}", r.interval),
                r.variance,
                (r.variance - r.variance_reference) / r.variance_se,
                3.0,
            ));
        }
        for (label, checks) in [
            ("successive_corr", &self.successive),
            ("level_corr", &self.return_vs_level),
        ] {
            for c in checks {
                out.push(ValidationEntry::residual(
                    format!("{label} interval={}", c.interval),
                    c.correlation,
                    c.correlation,
                    c.band,
                ));
            }
        }
        out
    }
}

/// Columns of the path set at the grid times `0, Δ, …, NΔ`.
pub fn grid_columns(paths: &PathSet, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    (0..=grid.intervals)
        .map(|i| {
            let t = grid.grid_time(i);
            paths
                .time_index(t)
                .map(|k| paths.column(k))
                .ok_or_else(|| Error::invalid(format!("path set has no sample at grid time {t}")))
        })
        .collect()
}

pub fn grid_return_diagnostics(paths: &PathSet, params: &MarketParams, grid: &GridSpec) -> Result<GridDiagnostics> {
    let cols = grid_columns(paths, grid)?;
    let n = paths.n_paths();
    let nf = n as f64;
    let m = params.log_drift();
    let sb2 = params.sigma_bar * params.sigma_bar;
    let delta = grid.delta();
    let band = 3.0 / nf.sqrt();

    let mut marginals = Vec::with_capacity(grid.intervals);
    for (i, col) in cols.iter().enumerate().skip(1) {
        let t = grid.grid_time(i);
        marginals.push(MarginalCheck {
            time: t,
            ks: ks_test_lognormal(col, params.s0.ln() + m * t, sb2 * t)?,
        });
    }

    let rets: Vec<Vec<f64>> = cols
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b / a).ln()).collect())
        .collect();
    let var_ref = sb2 * delta;
    let mut returns = Vec::with_capacity(rets.len());
    for (i, r) in rets.iter().enumerate() {
        let (mean, variance) = mean_var(r);
        returns.push(ReturnCheck {
            interval: i,
            ks: ks_test_normal(r, m * delta, var_ref)?,
            mean,
            mean_reference: m * delta,
            mean_se: (var_ref / nf).sqrt(),
            variance,
            variance_reference: var_ref,
            variance_se: var_ref * (2.0 / (nf - 1.0)).sqrt(),
        });
    }

    let successive = rets
        .windows(2)
        .enumerate()
        .map(|(i, w)| CorrelationCheck {
            interval: i,
            correlation: correlation(&w[0], &w[1]),
            band,
        })
        .collect();
    let return_vs_level = (1..rets.len())
        .map(|i| {
            let level: Vec<f64> = cols[i].iter().map(|y| y.ln()).collect();
            CorrelationCheck {
                interval: i,
                correlation: correlation(&rets[i], &level),
                band,
            }
        })
        .collect();

    Ok(GridDiagnostics {
        n_paths: n,
        marginals,
        returns,
        successive,
        return_vs_level,
    })
}
