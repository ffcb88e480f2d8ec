use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::VolatilitySpec;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::market::MarketParams;
use crate::math::norm_cdf;
use crate::sim::{path_rng, simulate_euler};

/// Mesh and sample sizes for [`appendix_demo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppendixConfig {
    pub horizon: f64,
    /// Start of the Euler segment; `S` is followed exactly on `[0, ε]`.
    pub epsilon: f64,
    /// Recorded (and Euler) steps over `[0, T]`.
    pub steps: usize,
    pub objective_paths: usize,
    pub risk_neutral_samples: usize,
    pub seed: u64,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            epsilon: 0.01,
            steps: 400,
            objective_paths: 10_000,
            risk_neutral_samples: 1_000_000,
            seed: 20_240_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSide {
    pub paths: usize,
    pub excluded_paths: usize,
    pub euler_steps: usize,
    pub clamped_steps: usize,
    /// Clamped steps over Euler steps.
    pub clamp_fraction: f64,
    /// Smallest value reached by any retained path.
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskNeutralSide {
    pub samples: usize,
    pub terminal_mean: f64,
    pub terminal_sd: f64,
    pub empirical_prob_nonpositive: f64,
    pub closed_form_prob_nonpositive: f64,
    /// Binomial SE at the closed-form probability.
    pub standard_error: f64,
}

impl RiskNeutralSide {
    pub fn z(&self) -> f64 {
        (self.empirical_prob_nonpositive - self.closed_form_prob_nonpositive) / self.standard_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub nu: f64,
    pub objective: ObjectiveSide,
    pub risk_neutral: RiskNeutralSide,
    pub summary: String,
}

/// Law of `Y_T` for `dY = rY dt + ν dW̃`, `Y_0 = s₀`: mean and standard deviation.
pub fn linear_sde_terminal(params: &MarketParams, nu: f64, horizon: f64) -> (f64, f64) {
    let r = params.r;
    let mean = params.s0 * (r * horizon).exp();
    let var_factor = if r.abs() < 1e-12 {
        horizon
    } else {
        ((2.0 * r * horizon).exp() - 1.0) / (2.0 * r)
    };
    (mean, nu * var_factor.sqrt())
}

/// `P(Y_T ≤ 0)` under the linear risk-neutral SDE.
pub fn linear_sde_prob_nonpositive(params: &MarketParams, nu: f64, horizon: f64) -> f64 {
    let (m, sd) = linear_sde_terminal(params, nu, horizon);
    norm_cdf(-m / sd)
}

/// Constant volatility `ν` under both measures.
///
/// Objective side: the drift that would make `Y` lognormal, anchored once at
/// `(s₀, 0)`, simulated by Euler after `ε` with clamps counted. Risk-neutral
/// side: `Y_T` of the linear SDE sampled from its exact Gaussian law.
pub fn appendix_demo(params: &MarketParams, nu: f64, config: &AppendixConfig) -> Result<AppendixReport> {
    params.validate()?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    if config.risk_neutral_samples == 0 {
        return Err(Error::invalid("need at least one risk-neutral sample"));
    }
    let grid = GridSpec::new(config.horizon, 1, config.epsilon, config.steps)?;
    let vol = VolatilitySpec::Constant { nu };
    let ps = simulate_euler(params, &grid, &vol, config.objective_paths, config.seed)?;
    let min_value = ps.paths().flat_map(|p| p.iter().copied()).fold(f64::INFINITY, f64::min);
    let objective = ObjectiveSide {
        paths: ps.n_paths() + ps.excluded_paths(),
        excluded_paths: ps.excluded_paths(),
        euler_steps: ps.total_steps(),
        clamped_steps: ps.clamped_steps(),
        clamp_fraction: ps.clamp_fraction(),
        min_value,
    };

    let (mean, sd) = linear_sde_terminal(params, nu, config.horizon);
    let n = config.risk_neutral_samples;
    let rn_seed = config.seed ^ 0x0005_eed0_fa11;
    const CHUNK: usize = 4096;
    let (count, sum, sum_sq) = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = path_rng(rn_seed, c);
            let mut acc = (0usize, 0.0, 0.0);
            for _ in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let z: f64 = StandardNormal.sample(&mut rng);
                let y = mean + sd * z;
                if y <= 0.0 {
                    acc.0 += 1;
                }
                acc.1 += y;
                acc.2 += y * y;
            }
            acc
        })
        .reduce(|| (0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let nf = n as f64;
    let closed = linear_sde_prob_nonpositive(params, nu, config.horizon);
    let emp_mean = sum / nf;
    let risk_neutral = RiskNeutralSide {
        samples: n,
        terminal_mean: emp_mean,
        terminal_sd: (sum_sq / nf - emp_mean * emp_mean).max(0.0).sqrt(),
        empirical_prob_nonpositive: count as f64 / nf,
        closed_form_prob_nonpositive: closed,
        standard_error: (closed * (1.0 - closed) / nf).sqrt().max(f64::MIN_POSITIVE),
    };
    let summary = format!(
        "objective measure: support (0, inf), clamp fraction {:.3e} over {} Euler steps; \
         risk-neutral linear SDE: support is the whole real line, P(Y_T <= 0) = {:.4e} \
         (empirical {:.4e}); no equivalent measure maps one law to the other, so constant \
         volatility {} cannot be a member of the admissible class",
        objective.clamp_fraction, objective.euler_steps, closed, risk_neutral.empirical_prob_nonpositive, nu
    );
    Ok(AppendixReport {
        nu,
        objective,
        risk_neutral,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_probability() {
        let p = MarketParams::new(0.1, 0.2, 100.0, 0.05).unwrap();
        let (m, sd) = linear_sde_terminal(&p, 30.0, 1.0);
        assert!((m - 100.0 * 0.05f64.exp()).abs() < 1e-12);
        let v = 900.0 * ((0.1f64).exp() - 1.0) / 0.1;
        assert!((sd - v.sqrt()).abs() < 1e-12);
        let prob = linear_sde_prob_nonpositive(&p, 30.0, 1.0);
        assert!((prob - norm_cdf(-m / v.sqrt())).abs() < 1e-18);
        assert!(prob > 0.0);
        assert!(linear_sde_prob_nonpositive(&p, 1e-3, 1.0) == 0.0);
        let p0 = MarketParams::new(0.1, 0.2, 100.0, 0.0).unwrap();
        assert!((linear_sde_terminal(&p0, 2.0, 4.0).1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn small_demo_runs() {
        let p = MarketParams::new(0.1, 0.2, 100.0, 0.05).unwrap();
        let cfg = AppendixConfig {
            objective_paths: 200,
            risk_neutral_samples: 10_000,
            ..AppendixConfig::default()
        };
        let rep = appendix_demo(&p, 30.0, &cfg).unwrap();
        assert_eq!(rep.objective.paths, 200);
        assert_eq!(rep.risk_neutral.samples, 10_000);
        assert!(rep.summary.contains("whole real line"));
        assert!(appendix_demo(&p, 0.0, &cfg).is_err());
    }
}
