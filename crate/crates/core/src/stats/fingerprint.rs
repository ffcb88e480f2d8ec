use serde::{Deserialize, Serialize};

use super::report::ValidationEntry;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::market::MarketParams;
use crate::math::mean_var;
use crate::sim::{Generator, PathSet};

/// Conditional variance of the log increment at offset `τ` inside an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub offset: f64,
    pub estimate: f64,
    pub standard_error: f64,
    /// `σ̄²τ`
    pub reference: f64,
}

impl VarianceCheck {
    pub fn z(&self) -> f64 {
        (self.estimate - self.reference) / self.standard_error
    }
}

/// Off-grid covariance of the log path against the β-formula and GBM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintReport {
    pub nu: f64,
    pub beta: f64,
    pub s_offset: f64,
    pub t_offset: f64,
    /// Number of `(interval, path)` pairs pooled.
    pub samples: usize,
    pub covariance: f64,
    pub standard_error: f64,
    /// `σ̄² s′^{1−β/2} t′^{β/2}`
    pub beta_reference: f64,
    /// `σ̄² s′`
    pub gbm_reference: f64,
    pub variance_checks: Vec<VarianceCheck>,
}

impl FingerprintReport {
    pub fn z_beta(&self) -> f64 {
        (self.covariance - self.beta_reference) / self.standard_error
    }

    pub fn z_gbm(&self) -> f64 {
        (self.covariance - self.gbm_reference) / self.standard_error
    }

    /// Within 3 SE of the β-formula.
    pub fn matches_beta(&self) -> bool {
        self.z_beta().abs() < 3.0
    }

    /// More than 5 SE away from the GBM value.
    pub fn distinguishable_from_gbm(&self) -> bool {
        self.z_gbm().abs() > 5.0
    }

    pub fn variances_match(&self) -> bool {
        self.variance_checks.iter().all(|v| v.z().abs() < 3.0)
    }

    pub fn entries(&self) -> Vec<ValidationEntry> {
        let mut out = vec![
            ValidationEntry::residual("fingerprint_beta_z", self.covariance, self.z_beta(), 3.0),
            ValidationEntry {
                name: "fingerprint_gbm_z".into(),
                statistic: self.covariance,
                p_value: None,
                residual: Some(self.z_gbm()),
                threshold: 5.0,
                pass: self.distinguishable_from_gbm(),
            },
        ];
        for v in &self.variance_checks {
            out.push(ValidationEntry::residual(
                format!("conditional_variance tau={:.6}", v.offset),
                v.estimate,
                v.z(),
                3.0,
            ));
        }
        out
    }
}

/// Estimates `Cov(ln Y_s, ln Y_t | Y_{jΔ})` at `(s′, t′) = (Δ/4, Δ/2)` and the
/// conditional variances at `Δ/4, Δ/2, 3Δ/4`.
///
/// The interval-start log level is subtracted path by path, and the
/// increments of all intervals are pooled since they are i.i.d. under the
/// exact scheme. Requires `ε = 0` and `sub_steps` divisible by 4.
pub fn off_grid_fingerprint(
    paths: &PathSet,
    params: &MarketParams,
    grid: &GridSpec,
    nu: f64,
) -> Result<FingerprintReport> {
    if grid.epsilon != 0.0 {
        return Err(Error::invalid("the off-grid fingerprint is defined for epsilon = 0"));
    }
    if !grid.sub_steps.is_multiple_of(4) {
        return Err(Error::invalid(format!(
            "sub_steps must be a multiple of 4 to sample Δ/4, Δ/2, 3Δ/4 (got {})",
            grid.sub_steps
        )));
    }
    if let Generator::ExactProportional { nu: gen_nu } = paths.generator() {
        if (gen_nu - nu).abs() > 1e-12 * nu.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "paths were generated with nu = {gen_nu}, not {nu}"
            )));
        }
    }
    let delta = grid.delta();
    let q = grid.sub_steps / 4;
    let mut incs: [Vec<f64>; 3] = Default::default();
    for j in 0..grid.intervals {
        let base = paths
            .time_index(grid.grid_time(j))
            .ok_or_else(|| Error::invalid("path set does not contain the grid times"))?;
        if paths.times().len() <= base + 3 * q
            || (paths.times()[base + q] - grid.grid_time(j) - delta / 4.0).abs() > 1e-9
        {
            return Err(Error::invalid("path set was not recorded on the grid's sub-steps"));
        }
        for path in paths.paths() {
            let z0 = path[base].ln();
            for (k, v) in incs.iter_mut().enumerate() {
                v.push(path[base + (k + 1) * q].ln() - z0);
            }
        }
    }
    let n = incs[0].len();
    let nf = n as f64;
    let sb2 = params.sigma_bar * params.sigma_bar;
    let beta = 1.0 - nu * nu / sb2;

    let (mx, _) = mean_var(&incs[0]);
    let (my, _) = mean_var(&incs[1]);
    let prods: Vec<f64> = incs[0].iter().zip(&incs[1]).map(|(x, y)| (x - mx) * (y - my)).collect();
    let (cov_mean, prod_var) = mean_var(&prods);
    let covariance = cov_mean * nf / (nf - 1.0);

    let variance_checks = incs
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let offset = delta * (k + 1) as f64 / 4.0;
            let (_, v) = mean_var(x);
            let reference = sb2 * offset;
            VarianceCheck {
                offset,
                estimate: v,
                standard_error: reference * (2.0 / (nf - 1.0)).sqrt(),
                reference,
            }
        })
        .collect();

    let (s, t) = (delta / 4.0, delta / 2.0);
    Ok(FingerprintReport {
        nu,
        beta,
        s_offset: s,
        t_offset: t,
        samples: n,
        covariance,
        standard_error: (prod_var / nf).sqrt(),
        beta_reference: sb2 * s.powf(1.0 - beta / 2.0) * t.powf(beta / 2.0),
        gbm_reference: sb2 * s,
        variance_checks,
    })
}
