use std::path::PathBuf;

use gridlaw::drift::VolatilitySpec;
use gridlaw::hedging::CriterionSpec;
use gridlaw::sim::{euler_default_grid, Generator, Measure};
use gridlaw::stats::AppendixConfig;
use gridlaw::{GridSpec, MarketParams, OptionSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment, as read from a TOML file. Every section is optional; the
/// resolved form written next to the outputs has all of them filled in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_market")]
    pub market: MarketParams,
    /// Defaults to `N = 12`, `T = 1`: without a window for the exact scheme,
    /// with the calibrated Euler mesh for the Euler scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_vol")]
    pub vol: VolatilitySpec,
    /// Defaults to an at-the-money call expiring at the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option: Option<OptionSpec>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub price: PriceSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub hedge: HedgeSection,
    #[serde(default)]
    pub fp: FpSection,
    #[serde(default)]
    pub appendix: AppendixSection,
    #[serde(default)]
    pub drift_check: DriftCheckSection,
}

fn default_market() -> MarketParams {
    MarketParams {
        mu: 0.1,
        sigma_bar: 0.2,
        s0: 100.0,
        r: 0.05,
    }
}

fn default_vol() -> VolatilitySpec {
    VolatilitySpec::Proportional { nu: 0.4 }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("the empty config is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// GBM regardless of `vol`.
    Gbm,
    /// Exact sampling; needs a proportional or Black–Scholes volatility.
    Exact,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub measure: Measure,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            seed: 20_240_601,
            scheme: Scheme::Exact,
            measure: Measure::Objective,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSection {
    pub t: f64,
    /// Defaults to s₀.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot: Option<f64>,
    /// Target of `invert-nu` when `--target` is not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

impl Default for PriceSection {
    fn default() -> Self {
        Self {
            t: 0.0,
            spot: None,
            target: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Also run the off-grid covariance test (exact scheme, ε = 0, sub-steps a multiple of 4).
    pub fingerprint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HedgeSection {
    /// Defaults to one rebalance per grid interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rebalances: Option<usize>,
    /// Defaults to σ̄.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hedger_nu: Option<f64>,
    pub nu_grid: Vec<f64>,
    pub criterion: CriterionSpec,
}

impl Default for HedgeSection {
    fn default() -> Self {
        Self {
            n_rebalances: None,
            hedger_nu: None,
            nu_grid: vec![0.1, 0.15, 0.2, 0.3, 0.4],
            criterion: CriterionSpec::MeanSquare,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpSection {
    pub n_t: usize,
    pub n_x: usize,
    pub t_min: f64,
    /// Defaults to the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Defaults to s₀/3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    /// Defaults to 3 s₀.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    pub threshold: f64,
}

impl Default for FpSection {
    fn default() -> Self {
        Self {
            n_t: 200,
            n_x: 200,
            t_min: 0.1,
            t_max: None,
            x_min: None,
            x_max: None,
            threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixSection {
    /// Constant volatility ν of the counterexample.
    pub nu: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub objective_paths: usize,
    pub risk_neutral_samples: usize,
    pub seed: u64,
}

impl Default for AppendixSection {
    fn default() -> Self {
        let c = AppendixConfig::default();
        Self {
            nu: 30.0,
            horizon: c.horizon,
            epsilon: c.epsilon,
            steps: c.steps,
            objective_paths: c.objective_paths,
            risk_neutral_samples: c.risk_neutral_samples,
            seed: c.seed,
        }
    }
}

impl AppendixSection {
    pub fn config(&self) -> AppendixConfig {
        AppendixConfig {
            horizon: self.horizon,
            epsilon: self.epsilon,
            steps: self.steps,
            objective_paths: self.objective_paths,
            risk_neutral_samples: self.risk_neutral_samples,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftCheckSection {
    /// Times are offsets from `alpha`.
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    /// Anchor price; defaults to s₀.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    pub alpha: f64,
    pub tolerance: f64,
}

impl Default for DriftCheckSection {
    fn default() -> Self {
        Self {
            t_min: 0.05,
            t_max: 1.0,
            n_t: 10,
            x_min: 50.0,
            x_max: 200.0,
            n_x: 10,
            y: None,
            alpha: 0.0,
            tolerance: 1e-6,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Fills every defaulted field and checks the model parameters.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        self.market.validate()?;
        self.vol.validate()?;
        let grid = match self.grid {
            Some(g) => g,
            None if self.run.scheme == Scheme::Euler => euler_default_grid(1.0, 12)?,
            None => GridSpec::new(1.0, 12, 0.0, 1)?,
        };
        grid.validate()?;
        self.grid = Some(grid);
        let option = self.option.unwrap_or(OptionSpec {
            strike: self.market.s0,
            maturity: grid.horizon,
        });
        option.validate()?;
        self.option = Some(option);
        self.price.spot.get_or_insert(self.market.s0);
        self.hedge.n_rebalances.get_or_insert(grid.intervals);
        self.hedge.hedger_nu.get_or_insert(self.market.sigma_bar);
        self.fp.t_max.get_or_insert(grid.horizon);
        self.fp.x_min.get_or_insert(self.market.s0 / 3.0);
        self.fp.x_max.get_or_insert(3.0 * self.market.s0);
        self.drift_check.y.get_or_insert(self.market.s0);
        Ok(self)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid.expect("resolved config")
    }

    pub fn option(&self) -> OptionSpec {
        self.option.expect("resolved config")
    }

    /// The proportional coefficient ν that prices and hedges are quoted in.
    pub fn pricing_nu(&self) -> Result<f64, CliError> {
        match self.vol {
            VolatilitySpec::Proportional { nu } => Ok(nu),
            VolatilitySpec::BlackScholes => Ok(self.market.sigma_bar),
            _ => Err(CliError::Usage(format!(
                "prices are defined for proportional volatilities, got {}",
                self.vol.label()
            ))),
        }
    }

    /// The generator the `run` section asks for.
    pub fn generator(&self) -> Result<Generator, CliError> {
        match self.run.scheme {
            Scheme::Gbm => Ok(Generator::Gbm),
            Scheme::Exact => Ok(Generator::ExactProportional {
                nu: self.pricing_nu().map_err(|_| {
                    CliError::Usage(format!(
                        "the exact scheme needs a proportional volatility, got {}; use scheme = \"euler\"",
                        self.vol.label()
                    ))
                })?,
            }),
            Scheme::Euler => Ok(Generator::Euler { vol: self.vol.clone() }),
        }
    }
}
