//! Discrete delta hedging of a call with the strategy of model `ν`, and
//! selection of `ν` by a pluggable criterion on the replication error.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::market::{MarketParams, OptionSpec};
use crate::math::{mean_var, norm_cdf, quantile_sorted, sorted_copy};
use crate::pricing::{bs_call, effective_vol};
use crate::sim::{simulate_euler, simulate_exact_proportional, simulate_gbm, Generator, Measure, PathSet};

/// Holdings of the model-`ν` strategy at one rebalance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    /// ξ: stock units.
    pub shares: f64,
    /// η: money-market units, `B_t = e^{rt}`.
    pub cash: f64,
    /// `U^ε(t, ν) = ξ·spot + η·B_t`.
    pub value: f64,
}

/// `ξ = Φ(d₁)` with volatility σ̄^ε(t) and `η = (U^ε(t,ν) − ξ·spot)/e^{rt}`.
pub fn delta_strategy(
    params: &MarketParams,
    grid: &GridSpec,
    nu: f64,
    t: f64,
    spot: f64,
    option: &OptionSpec,
) -> Result<Position> {
    if (option.maturity - grid.horizon).abs() > 1e-12 * grid.horizon {
        return Err(Error::invalid("option maturity must equal the grid horizon"));
    }
    let vol = effective_vol(params, grid, nu, t)?.vol;
    let tau = option.maturity - t;
    let value = bs_call(spot, option.strike, params.r, vol, tau)?;
    let k = option.strike;
    let sd = vol * tau.sqrt();
    let shares = if k == 0.0 {
        1.0
    } else if sd == 0.0 {
        if spot > k * (-params.r * tau).exp() {
            1.0
        } else {
            0.0
        }
    } else {
        let d1 = ((spot / k).ln() + params.r * tau) / sd + 0.5 * sd;
        norm_cdf(d1)
    };
    let bank = (params.r * t).exp();
    Ok(Position {
        shares,
        cash: (value - shares * spot) / bank,
        value,
    })
}

/// Rebalance schedule and holdings for one observed path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgePlan {
    /// `τ_j = j·T/n`, `j = 0..=n`.
    pub rebalance_times: Vec<f64>,
    pub hedger_nu: f64,
    /// ξ at `τ_0..τ_{n−1}`.
    pub shares: Vec<f64>,
    /// η at `τ_0..τ_{n−1}`.
    pub cash: Vec<f64>,
    /// Model value `U^ε(τ_j, ν)` at `τ_0..τ_{n−1}`.
    pub model_values: Vec<f64>,
}

/// `n` rebalance times; they must lie on the grid, i.e. `N` is a multiple of `n`.
pub fn rebalance_times(grid: &GridSpec, n_rebalances: usize) -> Result<Vec<f64>> {
    if n_rebalances == 0 || !grid.intervals.is_multiple_of(n_rebalances) {
        return Err(Error::invalid(format!(
            "{n_rebalances} rebalances do not fall on a grid of {} intervals",
            grid.intervals
        )));
    }
    let k = grid.intervals / n_rebalances;
    Ok((0..=n_rebalances).map(|j| grid.grid_time(j * k)).collect())
}

/// Strategy recomputed at each `τ_j` from the observed price `prices[j]` only.
pub fn hedge_plan(
    prices: &[f64],
    params: &MarketParams,
    grid: &GridSpec,
    nu: f64,
    option: &OptionSpec,
) -> Result<HedgePlan> {
    let n = prices.len().saturating_sub(1);
    let times = rebalance_times(grid, n)?;
    let mut shares = Vec::with_capacity(n);
    let mut cash = Vec::with_capacity(n);
    let mut model_values = Vec::with_capacity(n);
    for j in 0..n {
        let pos = delta_strategy(params, grid, nu, times[j], prices[j], option)?;
        shares.push(pos.shares);
        cash.push(pos.cash);
        model_values.push(pos.value);
    }
    Ok(HedgePlan {
        rebalance_times: times,
        hedger_nu: nu,
        shares,
        cash,
        model_values,
    })
}

/// Replication errors of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationError {
    /// `(S_T−K)⁺ − U^ε(0,ν) − Σ ξ_j(S_{j+1}−S_j) − Σ η_j(B_{j+1}−B_j)` with
    /// the model holdings η_j.
    pub epsilon: f64,
    /// Payoff minus the terminal value of the self-financing portfolio that
    /// starts at `U^ε(0,ν)` and holds ξ_j, the remainder in the bank.
    pub self_financing: f64,
}

/// Error of hedging along `prices` observed at the `n + 1` rebalance times.
pub fn replication_error(
    prices: &[f64],
    params: &MarketParams,
    grid: &GridSpec,
    nu: f64,
    option: &OptionSpec,
) -> Result<ReplicationError> {
    let plan = hedge_plan(prices, params, grid, nu, option)?;
    Ok(errors_from_plan(&plan, prices, params, option))
}

fn errors_from_plan(plan: &HedgePlan, prices: &[f64], params: &MarketParams, option: &OptionSpec) -> ReplicationError {
    let n = plan.shares.len();
    let bank: Vec<f64> = plan.rebalance_times.iter().map(|t| (params.r * t).exp()).collect();
    let payoff = option.payoff(prices[n]);
    let mut gains = 0.0;
    let mut portfolio = plan.model_values[0];
    for j in 0..n {
        gains += plan.shares[j] * (prices[j + 1] - prices[j]) + plan.cash[j] * (bank[j + 1] - bank[j]);
        let in_bank = (portfolio - plan.shares[j] * prices[j]) / bank[j];
        portfolio = plan.shares[j] * prices[j + 1] + in_bank * bank[j + 1];
    }
    ReplicationError {
        epsilon: payoff - plan.model_values[0] - gains,
        self_financing: payoff - portfolio,
    }
}

/// Replication errors of a hedger `ν` over a set of true paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeReport {
    pub hedger_nu: f64,
    pub true_generator: String,
    pub n_rebalances: usize,
    pub errors: Vec<f64>,
    pub self_financing_errors: Vec<f64>,
    pub mean: f64,
    pub stdev: f64,
    pub mse: f64,
    pub mean_abs: f64,
    pub q05: f64,
    pub q95: f64,
}

/// JSON summary `{nu, mean, stdev, mse, q05, q95, n_paths, n_rebalances}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedgeSummary {
    pub nu: f64,
    pub mean: f64,
    pub stdev: f64,
    pub mse: f64,
    pub q05: f64,
    pub q95: f64,
    pub n_paths: usize,
    pub n_rebalances: usize,
}

impl HedgeReport {
    pub fn from_errors(
        hedger_nu: f64,
        true_generator: String,
        n_rebalances: usize,
        errors: Vec<f64>,
        self_financing_errors: Vec<f64>,
    ) -> Self {
        let (mean, var) = mean_var(&errors);
        let n = errors.len() as f64;
        let sorted = sorted_copy(&errors);
        Self {
            hedger_nu,
            true_generator,
            n_rebalances,
            mean,
            stdev: var.sqrt(),
            mse: errors.iter().map(|e| e * e).sum::<f64>() / n,
            mean_abs: errors.iter().map(|e| e.abs()).sum::<f64>() / n,
            q05: quantile_sorted(&sorted, 0.05),
            q95: quantile_sorted(&sorted, 0.95),
            errors,
            self_financing_errors,
        }
    }

    pub fn n_paths(&self) -> usize {
        self.errors.len()
    }

    /// Standard error of the mean error.
    pub fn standard_error(&self) -> f64 {
        self.stdev / (self.n_paths() as f64).sqrt()
    }

    pub fn summary(&self) -> HedgeSummary {
        HedgeSummary {
            nu: self.hedger_nu,
            mean: self.mean,
            stdev: self.stdev,
            mse: self.mse,
            q05: self.q05,
            q95: self.q95,
            n_paths: self.n_paths(),
            n_rebalances: self.n_rebalances,
        }
    }

    /// `path_id,hedger_nu,epsilon` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "path_id,hedger_nu,epsilon")?;
        for (i, e) in self.errors.iter().enumerate() {
            writeln!(w, "{i},{:.16e},{e:.16e}", self.hedger_nu)?;
        }
        Ok(())
    }
}

/// Objective-measure paths of the true process on `grid`.
pub fn simulate_truth(
    params: &MarketParams,
    grid: &GridSpec,
    truth: &Generator,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    match truth {
        Generator::Gbm => simulate_gbm(params, grid, n_paths, seed, Measure::Objective),
        Generator::ExactProportional { nu } => {
            simulate_exact_proportional(params, grid, *nu, n_paths, seed, Measure::Objective)
        }
        Generator::Euler { vol } => simulate_euler(params, grid, vol, n_paths, seed),
    }
}

fn observed_prices(paths: &PathSet, times: &[f64]) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            paths
                .time_index(t)
                .ok_or_else(|| Error::invalid(format!("path set has no sample at rebalance time {t}")))
        })
        .collect()
}

/// Hedges every path of `paths` with model `ν` on `model_grid`.
pub fn hedge_paths(
    paths: &PathSet,
    params: &MarketParams,
    model_grid: &GridSpec,
    nu: f64,
    option: &OptionSpec,
    n_rebalances: usize,
) -> Result<HedgeReport> {
    let times = rebalance_times(model_grid, n_rebalances)?;
    let idx = observed_prices(paths, &times)?;
    let results: Vec<ReplicationError> = (0..paths.n_paths())
        .into_par_iter()
        .map(|i| {
            let path = paths.path(i);
            let prices: Vec<f64> = idx.iter().map(|&k| path[k]).collect();
            replication_error(&prices, params, model_grid, nu, option)
        })
        .collect::<Result<_>>()?;
    Ok(HedgeReport::from_errors(
        nu,
        paths.generator().label(),
        n_rebalances,
        results.iter().map(|r| r.epsilon).collect(),
        results.iter().map(|r| r.self_financing).collect(),
    ))
}

/// A score to minimize over replication errors.
pub trait HedgeCriterion: Send + Sync {
    fn name(&self) -> String;
    fn score(&self, errors: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanSquare;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanAbsolute;

/// The `q`-quantile of `|ε|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantile(pub f64);

impl HedgeCriterion for MeanSquare {
    fn name(&self) -> String {
        "mean_square".into()
    }
    fn score(&self, errors: &[f64]) -> f64 {
        errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64
    }
}

impl HedgeCriterion for MeanAbsolute {
    fn name(&self) -> String {
        "mean_absolute".into()
    }
    fn score(&self, errors: &[f64]) -> f64 {
        errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64
    }
}

impl HedgeCriterion for Quantile {
    fn name(&self) -> String {
        format!("quantile({})", self.0)
    }
    fn score(&self, errors: &[f64]) -> f64 {
        let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
        quantile_sorted(&sorted_copy(&abs), self.0)
    }
}

/// Named criteria accepted by configuration files: `mean_square`,
/// `mean_absolute`, `quantile` (with `q`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriterionSpec {
    MeanSquare,
    MeanAbsolute,
    Quantile { q: f64 },
}

impl CriterionSpec {
    pub fn build(&self) -> Result<Box<dyn HedgeCriterion>> {
        Ok(match *self {
            CriterionSpec::MeanSquare => Box::new(MeanSquare),
            CriterionSpec::MeanAbsolute => Box::new(MeanAbsolute),
            CriterionSpec::Quantile { q } => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::invalid(format!("quantile level must be in [0, 1], got {q}")));
                }
                Box::new(Quantile(q))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub criterion: String,
    pub best_nu: f64,
    /// `(ν, score)` in grid order.
    pub scores: Vec<(f64, f64)>,
    pub summaries: Vec<HedgeSummary>,
}

/// Argmin of the criterion over precomputed error samples; ties go to the
/// first grid point.
pub fn select_from_errors(
    criterion: &dyn HedgeCriterion,
    candidates: &[(f64, Vec<f64>)],
) -> Result<(f64, Vec<(f64, f64)>)> {
    if candidates.is_empty() {
        return Err(Error::invalid("nu grid is empty"));
    }
    let scores: Vec<(f64, f64)> = candidates.iter().map(|(nu, e)| (*nu, criterion.score(e))).collect();
    let best = scores
        .iter()
        .fold(scores[0], |acc, &s| if s.1 < acc.1 { s } else { acc });
    Ok((best.0, scores))
}

/// Hedges the same true paths (common random numbers) with every `ν` of the
/// grid and returns the minimizer of `criterion`.
pub fn select_nu(
    paths: &PathSet,
    params: &MarketParams,
    model_grid: &GridSpec,
    option: &OptionSpec,
    n_rebalances: usize,
    criterion: &dyn HedgeCriterion,
    nu_grid: &[f64],
) -> Result<Selection> {
    if nu_grid.is_empty() {
        return Err(Error::invalid("nu grid is empty"));
    }
    let reports: Vec<HedgeReport> = nu_grid
        .iter()
        .map(|&nu| hedge_paths(paths, params, model_grid, nu, option, n_rebalances))
        .collect::<Result<_>>()?;
    let candidates: Vec<(f64, Vec<f64>)> = reports.iter().map(|r| (r.hedger_nu, r.errors.clone())).collect();
    let (best_nu, scores) = select_from_errors(criterion, &candidates)?;
    Ok(Selection {
        criterion: criterion.name(),
        best_nu,
        scores,
        summaries: reports.iter().map(HedgeReport::summary).collect(),
    })
}
