use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{norm_cdf, sorted_copy};

const SERIES_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `P(K > λ)` for the Kolmogorov distribution.
///
/// Large λ uses `2 Σ (−1)^{k−1} e^{−2k²λ²}`; small λ the dual theta series
/// `1 − √(2π)/λ Σ e^{−(2k−1)²π²/(8λ²)}`, both truncated at 100 terms.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.0 {
        let mut s = 0.0;
        for k in 1..=SERIES_TERMS {
            let m = (2 * k - 1) as f64;
            s += (-m * m * std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda)).exp();
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        for k in 1..=SERIES_TERMS {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// One-sample KS test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::invalid("KS test needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("KS test sample contains NaN"));
    }
    let sorted = sorted_copy(samples);
    let n = sorted.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(nf.sqrt() * d),
        n,
    })
}

/// KS test of `samples` against `Normal(mean, var)`.
pub fn ks_test_normal(samples: &[f64], mean: f64, var: f64) -> Result<KsResult> {
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::invalid(format!(
            "reference variance must be positive, got {var}"
        )));
    }
    let sd = var.sqrt();
    ks_test(samples, |x| norm_cdf((x - mean) / sd))
}

pub const MIN_LOGNORMAL_SAMPLES: usize = 100;

/// KS test of `ln(samples)` against `Normal(log_mean, log_var)`.
pub fn ks_test_lognormal(samples: &[f64], log_mean: f64, log_var: f64) -> Result<KsResult> {
    if samples.len() < MIN_LOGNORMAL_SAMPLES {
        return Err(Error::invalid(format!(
            "lognormal KS test needs at least {MIN_LOGNORMAL_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::invalid(format!(
            "lognormal KS test needs positive samples, got {bad}"
        )));
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    ks_test_normal(&logs, log_mean, log_var)
}

/// Two-sample KS test with the asymptotic p-value at `λ = √(nm/(n+m))·D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("two-sample KS test needs non-empty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::invalid("KS test sample contains NaN"));
    }
    let (sa, sb) = (sorted_copy(a), sorted_copy(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let lambda = (na * nb / (na + nb)).sqrt() * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
        n: sa.len() + sb.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn kolmogorov_reference_points() {
        // tabulated critical values of the Kolmogorov distribution
        assert!((kolmogorov_survival(1.3580986393225507) - 0.05).abs() < 1e-9);
        assert!((kolmogorov_survival(1.6276236115189504) - 0.01).abs() < 1e-9);
        assert!((kolmogorov_survival(0.8275735551899059) - 0.5).abs() < 1e-9);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.2) > 1.0 - 1e-12);
        assert!(kolmogorov_survival(10.0) < 1e-80);
    }

    #[test]
    fn both_series_agree_at_the_switch() {
        let lam: f64 = 1.0;
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            s += (-1f64).powi(k - 1) * (-2.0 * kf * kf * lam * lam).exp();
        }
        let below = kolmogorov_survival(1.0 - 1e-12);
        assert!((2.0 * s - below).abs() < 1e-10);
    }

    #[test]
    fn constant_sample_at_median() {
        let r = ks_test_lognormal(&[100.0; 200], 100f64.ln(), 0.04).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lognormal_input_checks() {
        assert!(ks_test_lognormal(&[1.0; 99], 0.0, 1.0).is_err());
        let mut v = vec![1.0; 150];
        v[3] = -1.0;
        assert!(matches!(ks_test_lognormal(&v, 0.0, 1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn null_calibration_and_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let law = Normal::<f64>::new(0.08, 0.2).unwrap();
        let mut rejected = 0;
        for _ in 0..100 {
            let s: Vec<f64> = (0..10_000).map(|_| 100.0 * law.sample(&mut rng).exp()).collect();
            if ks_test_lognormal(&s, 100f64.ln() + 0.08, 0.04).unwrap().p_value <= 0.01 {
                rejected += 1;
            }
        }
        assert!(rejected <= 1, "{rejected} rejections");
        let wide = Normal::<f64>::new(0.08, 0.2 * 2f64.sqrt()).unwrap();
        let s: Vec<f64> = (0..10_000).map(|_| 100.0 * wide.sample(&mut rng).exp()).collect();
        assert!(ks_test_lognormal(&s, 100f64.ln() + 0.08, 0.04).unwrap().p_value < 1e-6);
    }

    #[test]
    fn two_sample_detects_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..5000).map(|_| n.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..5000).map(|_| n.sample(&mut rng)).collect();
        let c: Vec<f64> = (0..5000).map(|_| n.sample(&mut rng) + 0.2).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
    }

    #[test]
    fn two_sample_with_ties() {
        let r = ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r.statistic - 1.0 / 3.0).abs() < 1e-15);
    }
}
