use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{euler, path_rng, Generator, Measure, PathSet};
use crate::drift::VolatilitySpec;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::market::MarketParams;

fn check_inputs(params: &MarketParams, grid: &GridSpec, n_paths: usize) -> Result<()> {
    params.validate()?;
    grid.validate()?;
    if n_paths == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    Ok(())
}

/// GBM sampled exactly on the recorded times. Under the risk-neutral measure
/// μ is replaced by r.
pub fn simulate_gbm(
    params: &MarketParams,
    grid: &GridSpec,
    n_paths: usize,
    seed: u64,
    measure: Measure,
) -> Result<PathSet> {
    check_inputs(params, grid, n_paths)?;
    let times = grid.record_times();
    let rate = match measure {
        Measure::Objective => params.mu,
        Measure::RiskNeutral => params.r,
    };
    let sb = params.sigma_bar;
    let m = rate - 0.5 * sb * sb;
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut row = Vec::with_capacity(times.len());
            row.push(params.s0);
            let mut log_level = 0.0;
            for w in times.windows(2) {
                let dt = w[1] - w[0];
                let z: f64 = StandardNormal.sample(&mut rng);
                log_level += m * dt + sb * dt.sqrt() * z;
                row.push(params.s0 * log_level.exp());
            }
            row
        })
        .collect();
    Ok(PathSet::from_rows(times, rows, measure, Generator::Gbm, seed))
}

/// Kernel of the proportional-volatility process: `β = 1 − ν²/σ̄²` and the
/// variance of `∫ u^{−β/2} dW_u` over `[s, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBridgeKernel {
    pub beta: f64,
}

impl LogBridgeKernel {
    pub fn new(nu: f64, sigma_bar: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("nu must be positive, got {nu}")));
        }
        Ok(Self {
            beta: 1.0 - (nu * nu) / (sigma_bar * sigma_bar),
        })
    }

    /// `∫_s^t u^{−β} du = (t^{1−β} − s^{1−β})/(1−β)`, finite at `s = 0` since β < 1.
    pub fn var_increment(&self, s: f64, t: f64) -> f64 {
        let k = 1.0 - self.beta;
        (t.powf(k) - s.powf(k)) / k
    }
}

/// Exact simulation of the proportional-volatility process `Y^ν` on the
/// recorded times.
///
/// Inside interval `j`, with `τ = t − jΔ` and `m = μ − σ̄²/2`, the log price is
/// `Z_{jΔ} + mτ + σ̄W_τ` on the GBM window `τ < ε`, and afterwards
/// `Z_{jΔ} + mτ + (τ/ε)^{β/2} σ̄ W_ε + ν τ^{β/2} ∫_ε^τ u^{−β/2} dW_u`.
/// With `ε = 0` the window term drops and the integral starts at 0. The
/// stochastic integral is sampled through its exact Gaussian increments.
pub fn simulate_exact_proportional(
    params: &MarketParams,
    grid: &GridSpec,
    nu: f64,
    n_paths: usize,
    seed: u64,
    measure: Measure,
) -> Result<PathSet> {
    check_inputs(params, grid, n_paths)?;
    if measure == Measure::RiskNeutral {
        return Err(Error::Unsupported(
            "under the risk-neutral measure Y^nu is lognormal; use risk_neutral_dynamics".into(),
        ));
    }
    let kernel = LogBridgeKernel::new(nu, params.sigma_bar)?;
    let times = grid.record_times();
    let sb = params.sigma_bar;
    let m = params.log_drift();
    let eps = grid.epsilon;
    let half_beta = 0.5 * kernel.beta;

    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
            let mut row = Vec::with_capacity(times.len());
            row.push(params.s0);
            let mut z_grid = 0.0;
            for _ in 0..grid.intervals {
                let mut prev = 0.0;
                let mut w = 0.0;
                let mut w_eps = 0.0;
                let mut integral = 0.0;
                let mut z = z_grid;
                for k in 1..=grid.sub_steps {
                    let tau = grid.sub_offset(k);
                    if eps > 0.0 && prev < eps && eps < tau {
                        w += (eps - prev).sqrt() * normal();
                        w_eps = w;
                        prev = eps;
                    }
                    if tau <= eps {
                        w += (tau - prev).sqrt() * normal();
                        w_eps = w;
                        z = z_grid + m * tau + sb * w;
                    } else {
                        integral += kernel.var_increment(prev, tau).sqrt() * normal();
                        let window = if eps > 0.0 {
                            (tau / eps).powf(half_beta) * sb * w_eps
                        } else {
                            0.0
                        };
                        z = z_grid + m * tau + window + nu * tau.powf(half_beta) * integral;
                    }
                    prev = tau;
                    row.push(params.s0 * z.exp());
                }
                z_grid = z;
            }
            row
        })
        .collect();
    Ok(PathSet::from_rows(
        times,
        rows,
        Measure::Objective,
        Generator::ExactProportional { nu },
        seed,
    ))
}

/// Paths under the martingale measure: `dY = rY dt + σ̄Y dW̃` on the windows
/// and `dY = rY dt + σ_t(Y) dW̃` elsewhere.
///
/// Proportional (and Black–Scholes) volatilities are sampled exactly as a
/// lognormal with piecewise constant volatility; other kinds use Euler after
/// each window.
pub fn risk_neutral_dynamics(
    params: &MarketParams,
    grid: &GridSpec,
    vol: &VolatilitySpec,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    check_inputs(params, grid, n_paths)?;
    vol.validate()?;
    let nu = match vol {
        VolatilitySpec::Proportional { nu } => *nu,
        VolatilitySpec::BlackScholes => params.sigma_bar,
        _ => return euler::risk_neutral_euler(params, grid, vol, n_paths, seed),
    };
    let times = grid.record_times();
    let sb2 = params.sigma_bar * params.sigma_bar;
    let nu2 = nu * nu;
    let eps = grid.epsilon;
    let r = params.r;
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut row = Vec::with_capacity(times.len());
            row.push(params.s0);
            let mut log_level = 0.0;
            for _ in 0..grid.intervals {
                let mut prev = 0.0;
                for k in 1..=grid.sub_steps {
                    let tau = grid.sub_offset(k);
                    let dt = tau - prev;
                    let window = (tau.min(eps) - prev).max(0.0);
                    let var = sb2 * window + nu2 * (dt - window);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    log_level += r * dt - 0.5 * var + var.sqrt() * z;
                    row.push(params.s0 * log_level.exp());
                    prev = tau;
                }
            }
            row
        })
        .collect();
    Ok(PathSet::from_rows(
        times,
        rows,
        Measure::RiskNeutral,
        Generator::ExactProportional { nu },
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::mean_var;

    fn market() -> MarketParams {
        MarketParams::new(0.1, 0.2, 100.0, 0.05).unwrap()
    }

    fn log_returns(ps: &PathSet, k0: usize, k1: usize) -> Vec<f64> {
        ps.paths().map(|p| (p[k1] / p[k0]).ln()).collect()
    }

    #[test]
    fn gbm_deterministic_limit() {
        let p = MarketParams::new(0.1, 1e-12, 100.0, 0.0).unwrap();
        let g = GridSpec::new(1.0, 12, 0.0, 3).unwrap();
        let ps = simulate_gbm(&p, &g, 1, 1, Measure::Objective).unwrap();
        let last = *ps.path(0).last().unwrap();
        assert!((last / (100.0 * 0.1f64.exp()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gbm_terminal_log_moments() {
        let p = market();
        let g = GridSpec::new(1.0, 12, 0.0, 1).unwrap();
        let n = 100_000;
        let ps = simulate_gbm(&p, &g, n, 11, Measure::Objective).unwrap();
        let x = log_returns(&ps, 0, ps.n_times() - 1);
        let (m, v) = mean_var(&x);
        assert!((m - 0.08).abs() < 3.0 * 0.2 / (n as f64).sqrt(), "{m}");
        let se_var = 0.04 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((v - 0.04).abs() < 3.0 * se_var, "{v}");
    }

    #[test]
    fn positivity_and_start() {
        let p = market();
        let g = GridSpec::new(1.0, 4, 0.02, 5).unwrap();
        for ps in [
            simulate_gbm(&p, &g, 50, 3, Measure::Objective).unwrap(),
            simulate_exact_proportional(&p, &g, 0.07, 50, 3, Measure::Objective).unwrap(),
            simulate_exact_proportional(&p, &g, 0.9, 50, 3, Measure::Objective).unwrap(),
        ] {
            assert_eq!(ps.times()[0], 0.0);
            assert_eq!(ps.n_times(), 21);
            for path in ps.paths() {
                assert_eq!(path[0], 100.0);
                assert!(path.iter().all(|&v| v > 0.0 && v.is_finite()));
            }
        }
    }

    #[test]
    fn exact_proportional_with_sigma_bar_is_gbm_pathwise() {
        let p = market();
        let g = GridSpec::new(1.0, 12, 0.0, 8).unwrap();
        let a = simulate_gbm(&p, &g, 200, 99, Measure::Objective).unwrap();
        let b = simulate_exact_proportional(&p, &g, p.sigma_bar, 200, 99, Measure::Objective).unwrap();
        let mut worst: f64 = 0.0;
        for (pa, pb) in a.paths().zip(b.paths()) {
            for (x, y) in pa.iter().zip(pb) {
                worst = worst.max((x.ln() - y.ln()).abs());
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    /// Itô isometry: the conditional variance of the log increment is σ̄²τ for
    /// every τ in the interval, the conditional covariance σ̄² s^{1−β/2} t^{β/2}.
    #[test]
    fn conditional_moments_inside_an_interval() {
        let p = market();
        let g = GridSpec::new(1.0, 12, 0.0, 4).unwrap();
        let delta = g.delta();
        let n = 100_000;
        for nu in [0.1, 0.4] {
            let ps = simulate_exact_proportional(&p, &g, nu, n, 5, Measure::Objective).unwrap();
            let beta = 1.0 - nu * nu / 0.04;
            // interval j = 3 starts at index 12
            let base = g.grid_index(3);
            let incs: Vec<Vec<f64>> = (1..=3).map(|k| log_returns(&ps, base, base + k)).collect();
            for (k, x) in incs.iter().enumerate() {
                let tau = delta * (k + 1) as f64 / 4.0;
                let (_, v) = mean_var(x);
                let want = 0.04 * tau;
                let se = want * (2.0 / n as f64).sqrt();
                assert!((v - want).abs() < 3.0 * se, "nu={nu} tau={tau}: {v} vs {want}");
            }
            let (s, t) = (delta / 4.0, delta / 2.0);
            let (mx, _) = mean_var(&incs[0]);
            let (my, _) = mean_var(&incs[1]);
            let prods: Vec<f64> = incs[0].iter().zip(&incs[1]).map(|(x, y)| (x - mx) * (y - my)).collect();
            let (cov, vp) = mean_var(&prods);
            let se = (vp / n as f64).sqrt();
            let want = 0.04 * s.powf(1.0 - beta / 2.0) * t.powf(beta / 2.0);
            assert!((cov - want).abs() < 3.0 * se, "nu={nu}: {cov} vs {want} (se {se})");
            assert!((cov - 0.04 * s).abs() > 5.0 * se);
        }
    }

    #[test]
    fn exact_proportional_window_keeps_grid_variance() {
        let p = market();
        let g = GridSpec::new(1.0, 4, 0.05, 3).unwrap();
        let n = 50_000;
        let ps = simulate_exact_proportional(&p, &g, 0.5, n, 8, Measure::Objective).unwrap();
        let x = log_returns(&ps, g.grid_index(1), g.grid_index(2));
        let (m, v) = mean_var(&x);
        let want = 0.04 * 0.25;
        assert!((v - want).abs() < 3.0 * want * (2.0 / n as f64).sqrt(), "{v}");
        assert!((m - p.log_drift() * 0.25).abs() < 3.0 * (want / n as f64).sqrt());
    }

    #[test]
    fn exact_proportional_rejects_risk_neutral() {
        let g = GridSpec::default();
        assert!(matches!(
            simulate_exact_proportional(&market(), &g, 0.3, 10, 1, Measure::RiskNeutral),
            Err(Error::Unsupported(_))
        ));
        assert!(simulate_exact_proportional(&market(), &g, 0.0, 10, 1, Measure::Objective).is_err());
    }

    #[test]
    fn kernel_variance_increment() {
        let k = LogBridgeKernel::new(0.1, 0.2).unwrap();
        assert!((k.beta - 0.75).abs() < 1e-15);
        assert!(k.var_increment(0.0, 0.5).is_finite());
        assert!(k.var_increment(0.1, 0.5) > 0.0);
        // brute-force midpoint sum of u^{-β}
        let (s, t) = (0.1, 0.5);
        let n = 200_000;
        let h = (t - s) / n as f64;
        let sum: f64 = (0..n).map(|i| (s + (i as f64 + 0.5) * h).powf(-k.beta) * h).sum();
        assert!((sum / k.var_increment(s, t) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn risk_neutral_proportional_law() {
        let p = market();
        let g = GridSpec::new(1.0, 12, 0.0, 1).unwrap();
        let n = 100_000;
        let nu = 0.3;
        let ps = risk_neutral_dynamics(&p, &g, &VolatilitySpec::Proportional { nu }, n, 21).unwrap();
        let x = log_returns(&ps, 0, ps.n_times() - 1);
        let (m, v) = mean_var(&x);
        assert!((m - (0.05 - 0.045)).abs() < 3.0 * nu / (n as f64).sqrt(), "{m}");
        assert!((v - 0.09).abs() < 3.0 * 0.09 * (2.0 / n as f64).sqrt(), "{v}");
        let disc: Vec<f64> = ps.paths().map(|p| (-0.05f64).exp() * p[p.len() - 1]).collect();
        let (dm, dv) = mean_var(&disc);
        assert!((dm - 100.0).abs() < 3.0 * (dv / n as f64).sqrt());
    }

    #[test]
    fn risk_neutral_black_scholes_is_risk_neutral_gbm() {
        let p = market();
        let g = GridSpec::new(1.0, 6, 0.01, 2).unwrap();
        let a = risk_neutral_dynamics(&p, &g, &VolatilitySpec::Proportional { nu: 0.2 }, 100, 4).unwrap();
        let b = simulate_gbm(&p, &g, 100, 4, Measure::RiskNeutral).unwrap();
        for (pa, pb) in a.paths().zip(b.paths()) {
            for (x, y) in pa.iter().zip(pb) {
                assert!((x / y - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_paths() {
        let p = market();
        let g = GridSpec::new(1.0, 12, 0.0, 4).unwrap();
        let a = simulate_exact_proportional(&p, &g, 0.4, 300, 77, Measure::Objective).unwrap();
        let b = simulate_exact_proportional(&p, &g, 0.4, 300, 77, Measure::Objective).unwrap();
        assert_eq!(a, b);
        let c = simulate_exact_proportional(&p, &g, 0.4, 300, 78, Measure::Objective).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn csv_dump_layout() {
        let p = market();
        let g = GridSpec::new(1.0, 2, 0.0, 1).unwrap();
        let ps = simulate_gbm(&p, &g, 2, 1, Measure::Objective).unwrap();
        let mut buf = Vec::new();
        ps.write_csv(&mut buf, &[("mu".into(), "0.1".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "path_id,t,value");
        assert_eq!(rows.len(), 1 + 2 * 3);
        assert!(text.contains("# seed = 1"));
        assert!(rows[1].starts_with("0,0.0000000000000000e0,1.0000000000000000e2"));
    }
}
