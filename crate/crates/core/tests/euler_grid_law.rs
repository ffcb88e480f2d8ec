use gridlaw::drift::VolatilitySpec;
use gridlaw::math::norm_cdf;
use gridlaw::sim::{euler_default_grid, simulate_euler, simulate_euler_anchored, simulate_gbm, AnchorMode, Measure};
use gridlaw::stats::{grid_columns, grid_return_diagnostics, ks_test_lognormal, ks_two_sample};
use gridlaw::{GridSpec, MarketParams};

const SEED: u64 = 4_242;

fn market() -> MarketParams {
    MarketParams::new(0.1, 0.2, 100.0, 0.05).unwrap()
}

/// Every marginal KS test and every return mean/variance band, pooled over the
/// four volatilities and held to a Bonferroni-corrected family level of 1%.
/// Without the correction ~100 checks at 3 SE fail spuriously about a quarter
/// of the time.
#[test]
fn default_mesh_matches_the_grid_law_for_every_volatility() {
    let p = market();
    let g = euler_default_grid(1.0, 12).unwrap();
    let mut p_values = Vec::new();
    for vol in [
        VolatilitySpec::Proportional { nu: 0.1 },
        VolatilitySpec::Proportional { nu: 0.4 },
        VolatilitySpec::Constant { nu: 20.0 },
        VolatilitySpec::SqrtProportional { nu: 2.0 },
    ] {
        let ps = simulate_euler(&p, &g, &vol, 10_000, SEED).unwrap();
        assert_eq!(ps.excluded_paths(), 0);
        assert!(ps.clamp_fraction() < 1e-3);
        let d = grid_return_diagnostics(&ps, &p, &g).unwrap();
        let two_sided = |z: f64| 2.0 * (1.0 - norm_cdf(z.abs()));
        for m in &d.marginals {
            p_values.push((format!("{} marginal t={}", vol.label(), m.time), m.ks.p_value));
        }
        for r in &d.returns {
            let i = r.interval;
            p_values.push((format!("{} return {i} KS", vol.label()), r.ks.p_value));
            let zm = (r.mean - r.mean_reference) / r.mean_se;
            let zv = (r.variance - r.variance_reference) / r.variance_se;
            p_values.push((format!("{} return {i} mean", vol.label()), two_sided(zm)));
            p_values.push((format!("{} return {i} variance", vol.label()), two_sided(zv)));
        }
    }
    let level = 0.01 / p_values.len() as f64;
    let failed: Vec<_> = p_values.iter().filter(|(_, pv)| *pv <= level).collect();
    assert!(failed.is_empty(), "{failed:?}");
}

#[test]
fn black_scholes_euler_is_indistinguishable_from_gbm_on_the_grid() {
    let p = market();
    let g = euler_default_grid(1.0, 12).unwrap();
    let euler = simulate_euler(&p, &g, &VolatilitySpec::BlackScholes, 10_000, SEED).unwrap();
    let gbm = simulate_gbm(&p, &g, 10_000, SEED + 1, Measure::Objective).unwrap();
    let (a, b) = (grid_columns(&euler, &g).unwrap(), grid_columns(&gbm, &g).unwrap());
    for (x, y) in a.iter().zip(&b).skip(1) {
        assert!(ks_two_sample(x, y).unwrap().p_value > 0.01);
    }
}

#[test]
fn terminal_ks_distance_shrinks_with_the_mesh() {
    let p = market();
    let vol = VolatilitySpec::Proportional { nu: 0.4 };
    let (mean, var) = ((p.mu - 0.02) * 1.0 + p.s0.ln(), 0.04);
    let distance = |sub: usize| {
        let g = GridSpec::with_window_fraction(1.0, 12, 0.1, sub).unwrap();
        let ps = simulate_euler(&p, &g, &vol, 40_000, SEED).unwrap();
        ks_test_lognormal(&ps.column(ps.n_times() - 1), mean, var).unwrap()
    };
    let d: Vec<f64> = [2, 4, 8].iter().map(|&s| distance(s).statistic).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert!(distance(200).p_value > 0.01);
}

#[test]
fn a_fixed_anchor_breaks_the_grid_law() {
    // Restarting the lognormal curve from s₀ instead of Y_{iΔ} pulls every
    // interval back towards the initial level.
    let p = market();
    let g = euler_default_grid(1.0, 12).unwrap();
    let vol = VolatilitySpec::Proportional { nu: 0.4 };
    let ps = simulate_euler_anchored(&p, &g, &vol, 10_000, SEED, AnchorMode::Fixed).unwrap();
    let d = grid_return_diagnostics(&ps, &p, &g).unwrap();
    assert!(!d.marginals_pass());
}
