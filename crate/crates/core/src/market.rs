use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Black–Scholes world: objective drift, volatility, initial price and the
/// money-market rate (`B_t = e^{rt}`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    pub mu: f64,
    pub sigma_bar: f64,
    pub s0: f64,
    pub r: f64,
}

impl MarketParams {
    pub fn new(mu: f64, sigma_bar: f64, s0: f64, r: f64) -> Result<Self> {
        let p = Self { mu, sigma_bar, s0, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::invalid("mu must be finite"));
        }
        if !(self.sigma_bar > 0.0 && self.sigma_bar.is_finite()) {
            return Err(Error::invalid("sigma_bar must be positive"));
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::invalid("s0 must be positive"));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::invalid("r must be non-negative"));
        }
        Ok(())
    }

    /// ζ = μ/σ̄² − 3/2, the first natural parameter of the GBM marginals.
    pub fn zeta(&self) -> f64 {
        self.mu / (self.sigma_bar * self.sigma_bar) - 1.5
    }

    /// Drift of the log price, μ − σ̄²/2.
    pub fn log_drift(&self) -> f64 {
        self.mu - 0.5 * self.sigma_bar * self.sigma_bar
    }

    pub fn discount(&self, t: f64) -> f64 {
        (-self.r * t).exp()
    }
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            mu: 0.1,
            sigma_bar: 0.2,
            s0: 100.0,
            r: 0.05,
        }
    }
}

/// European call `(Y_T − K)⁺`.
///
/// A zero strike is admitted; the call then coincides with the stock and its
/// price interval degenerates to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn call(strike: f64, maturity: f64) -> Result<Self> {
        let o = Self { strike, maturity };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike >= 0.0 && self.strike.is_finite()) {
            return Err(Error::invalid("strike must be non-negative"));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::invalid("maturity must be positive"));
        }
        Ok(())
    }

    pub fn payoff(&self, terminal: f64) -> f64 {
        (terminal - self.strike).max(0.0)
    }
}
