//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p gridlaw --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use gridlaw::drift::{closed_form_drift, drift_consistency_report, tensor_points, VolatilitySpec};
use gridlaw::expfam::LognormalCurve;
use gridlaw::hedging::{hedge_paths, simulate_truth};
use gridlaw::pricing::{bs_call, effective_vol, invert_nu_for_price, price_bounds, price_u};
use gridlaw::sim::{risk_neutral_dynamics, simulate_exact_proportional, Generator, Measure};
use gridlaw::stats::{
    appendix_demo, fp_residual, grid_return_diagnostics, off_grid_fingerprint, uniform_mesh, AppendixConfig,
};
use gridlaw::{GridSpec, MarketParams, OptionSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

fn market() -> MarketParams {
    MarketParams::new(0.1, 0.2, 100.0, 0.05).unwrap()
}

fn report(id: u32, title: &str, pass: bool, elapsed: Duration, details: &str) {
    println!(
        "[{}] criterion {id:>2} {title} ({:.2}s): {details}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

#[test]
fn c01_grid_law_equivalence() {
    let start = Instant::now();
    let p = market();
    let g = GridSpec::new(1.0, 12, 0.0, 1).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for nu in [0.1, 0.2, 0.4] {
        let ps = simulate_exact_proportional(&p, &g, nu, 10_000, SEED, Measure::Objective).unwrap();
        let d = grid_return_diagnostics(&ps, &p, &g).unwrap();
        let min_marginal = d.marginals.iter().map(|m| m.ks.p_value).fold(1.0, f64::min);
        let min_return = d.returns.iter().map(|r| r.ks.p_value).fold(1.0, f64::min);
        let worst_mean = d
            .returns
            .iter()
            .map(|r| ((r.mean - r.mean_reference) / r.mean_se).abs())
            .fold(0.0, f64::max);
        let worst_var = d
            .returns
            .iter()
            .map(|r| ((r.variance - r.variance_reference) / r.variance_se).abs())
            .fold(0.0, f64::max);
        let ok = d.marginals_pass() && d.returns_pass();
        pass &= ok;
        details.push(format!(
            "nu={nu}: min marginal p={min_marginal:.3}, min return p={min_return:.3}, max |mean z|={worst_mean:.2}, max |var z|={worst_var:.2}"
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    report(1, "grid-law equivalence", pass, elapsed, &details.join("; "));
    assert!(pass);
}

#[test]
fn c02_off_grid_fingerprint() {
    let start = Instant::now();
    let p = market();
    let g = GridSpec::new(1.0, 12, 0.0, 4).unwrap();
    let nu = 0.4;
    let ps = simulate_exact_proportional(&p, &g, nu, 100_000, SEED, Measure::Objective).unwrap();
    let f = off_grid_fingerprint(&ps, &p, &g, nu).unwrap();
    let elapsed = start.elapsed();
    let pass = f.matches_beta() && f.distinguishable_from_gbm() && elapsed < Duration::from_secs(120);
    report(
        2,
        "off-grid fingerprint",
        pass,
        elapsed,
        &format!(
            "cov={:.6e} se={:.2e}, beta formula {:.6e} (z={:.2}), GBM {:.6e} (z={:.1})",
            f.covariance,
            f.standard_error,
            f.beta_reference,
            f.z_beta(),
            f.gbm_reference,
            f.z_gbm()
        ),
    );
    assert!(pass);
}

#[test]
fn c03_drift_cross_check() {
    let start = Instant::now();
    let p = market();
    let pts = tensor_points((0.05, 1.0, 10), (50.0, 200.0, 10), 100.0, 0.0);
    let mut pass = true;
    let mut details = Vec::new();
    for vol in [
        VolatilitySpec::Constant { nu: 20.0 },
        VolatilitySpec::SqrtProportional { nu: 2.0 },
        VolatilitySpec::Proportional { nu: 0.3 },
        VolatilitySpec::BlackScholes,
    ] {
        let rep = drift_consistency_report(&p, &vol, &pts).unwrap();
        let strict = rep
            .rows
            .iter()
            .map(|r| (r.closed_form - r.generic).abs() / r.closed_form.abs())
            .fold(0.0, f64::max);
        pass &= rep.max_rel_err < 1e-6;
        details.push(format!(
            "{}: {:.2e} (|.|/|u|: {strict:.2e})",
            rep.volatility, rep.max_rel_err
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    report(3, "drift cross-check", pass, elapsed, &details.join("; "));
    assert!(pass);
}

fn fp_max_residual(p: &MarketParams, vol: &VolatilitySpec, n: usize) -> f64 {
    let curve = LognormalCurve::from_market(p);
    let fam = curve.family();
    let drift = closed_form_drift(p, vol).unwrap();
    let d = vol.diffusion(p.sigma_bar);
    let t = uniform_mesh(0.1, 1.0, n);
    let x = uniform_mesh(p.s0 / 3.0, 3.0 * p.s0, n);
    fp_residual(&fam, &curve, &d, |t, x| drift.eval(t, x, p.s0, 0.0), &t, &x)
        .unwrap()
        .max_residual
}

#[test]
fn c04_fokker_planck_transport() {
    let start = Instant::now();
    let p = market();
    let base = fp_max_residual(&p, &VolatilitySpec::BlackScholes, 200);
    let fine = fp_max_residual(&p, &VolatilitySpec::BlackScholes, 399);
    let prop_low = fp_max_residual(&p, &VolatilitySpec::Proportional { nu: 0.1 }, 200);
    let prop_high = fp_max_residual(&p, &VolatilitySpec::Proportional { nu: 0.3 }, 200);
    let elapsed = start.elapsed();
    let level = base < 1e-4;
    let refinement = base / fine >= 3.0;
    let proportional = prop_low < 2.0 * base && prop_high < 2.0 * base;
    let pass = level && refinement && proportional && elapsed < Duration::from_secs(60);
    report(
        4,
        "Fokker-Planck transport",
        pass,
        elapsed,
        &format!(
            "baseline max residual {base:.3e} (< 1e-4: {level}), refinement ratio {:.2} (>= 3: {refinement}), \
             proportional nu=0.1 {:.2}x and nu=0.3 {:.2}x of baseline (<= 2: {proportional})",
            base / fine,
            prop_low / base,
            prop_high / base
        ),
    );
    assert!(
        level,
        "baseline residual {base:.3e} is not below 1e-4 on the 200x200 mesh"
    );
    assert!(pass);
}

#[test]
fn c05_pricing_limits() {
    let start = Instant::now();
    let p = market();
    let g = GridSpec::with_window_fraction(1.0, 12, 1e-8, 1).unwrap();
    let opt = OptionSpec::call(100.0, 1.0).unwrap();
    let (v_lo, v_hi) = price_bounds(&p, &opt);
    let mut pass = true;
    let mut details = Vec::new();
    for nu in [0.05, 0.2, 0.6] {
        let u = price_u(&p, &g, nu, 0.0, p.s0, &opt).unwrap().price;
        let v = bs_call(p.s0, opt.strike, p.r, nu, 1.0).unwrap();
        pass &= (u - v).abs() < 1e-6;
        details.push(format!("nu={nu}: |U-V_BS|={:.2e}", (u - v).abs()));
    }
    let low = price_u(&p, &g, 1e-4, 0.0, p.s0, &opt).unwrap().price;
    let high = price_u(&p, &g, 50.0, 0.0, p.s0, &opt).unwrap().price;
    pass &= (low - v_lo).abs() < 1e-3 * p.s0 && (high - v_hi).abs() < 1e-3 * p.s0;
    details.push(format!(
        "|U(1e-4)-V_*|={:.2e}, |U(50)-V^*|={:.2e}",
        (low - v_lo).abs(),
        (high - v_hi).abs()
    ));
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    report(5, "pricing limits", pass, elapsed, &details.join("; "));
    assert!(pass);
}

#[test]
fn c06_price_inversion_round_trip() {
    let start = Instant::now();
    let p = market();
    let g = GridSpec::with_window_fraction(1.0, 12, 1e-8, 1).unwrap();
    let opt = OptionSpec::call(100.0, 1.0).unwrap();
    let (v_lo, v_hi) = price_bounds(&p, &opt);
    let (a, b) = (v_lo + 1e-3, v_hi - 1e-3);
    let mut worst: f64 = 0.0;
    let mut nus = Vec::new();
    for i in 0..20 {
        let target = a + (b - a) * i as f64 / 19.0;
        let nu = invert_nu_for_price(&p, &g, &opt, target).unwrap();
        let got = price_u(&p, &g, nu, 0.0, p.s0, &opt).unwrap().price;
        worst = worst.max((got - target).abs());
        nus.push(nu);
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-8 * p.s0 && elapsed < Duration::from_secs(1);
    report(
        6,
        "price inversion round-trip",
        pass,
        elapsed,
        &format!(
            "20 targets in [{a:.4}, {b:.4}], nu from {:.3e} to {:.3e}, max |U-target| = {worst:.2e}",
            nus[0], nus[19]
        ),
    );
    assert!(pass);
}

#[test]
fn c07_monte_carlo_pricing() {
    let start = Instant::now();
    let p = market();
    let g = GridSpec::with_window_fraction(1.0, 12, 0.1, 1).unwrap();
    let opt = OptionSpec::call(100.0, 1.0).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for nu in [0.1, 0.4] {
        let ps = risk_neutral_dynamics(&p, &g, &VolatilitySpec::Proportional { nu }, 100_000, SEED).unwrap();
        let disc = p.discount(1.0);
        let payoffs: Vec<f64> = ps.paths().map(|x| disc * opt.payoff(x[x.len() - 1])).collect();
        let (mean, var) = gridlaw::math::mean_var(&payoffs);
        let se = (var / payoffs.len() as f64).sqrt();
        let u = price_u(&p, &g, nu, 0.0, p.s0, &opt).unwrap().price;
        let z = (mean - u) / se;
        pass &= z.abs() < 3.0;
        details.push(format!("nu={nu}: MC {mean:.4} +- {se:.4} vs U {u:.4} (z={z:.2})"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    report(7, "MC pricing consistency", pass, elapsed, &details.join("; "));
    assert!(pass);
}

#[test]
fn c08_effective_vol_continuity() {
    let start = Instant::now();
    let p = market();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut configs = Vec::new();
    for _ in 0..5 {
        let n = rng.random_range(2..=24);
        let frac = rng.random_range(0.01..0.9);
        let nu = rng.random_range(0.05..1.0);
        let g = GridSpec::with_window_fraction(1.0, n, frac, 1).unwrap();
        let w = |t: f64| effective_vol(&p, &g, nu, t).unwrap().integrated_variance;
        for j in 0..n {
            let a = g.grid_time(j);
            let mut edges = vec![a + g.epsilon];
            if j + 1 < n {
                edges.push(g.grid_time(j + 1));
            }
            for b in edges {
                let (l, r) = (w(b - 1e-12), w(b + 1e-12));
                worst = worst.max((l - r).abs() / l.abs().max(r.abs()));
            }
        }
        configs.push(format!("(N={n}, eps/Delta={frac:.3}, nu={nu:.3})"));
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-9;
    report(
        8,
        "effective-vol branch continuity",
        pass,
        elapsed,
        &format!("max relative jump {worst:.2e} over {}", configs.join(", ")),
    );
    assert!(pass);
}

#[test]
fn c09_hedging_sanity() {
    let start = Instant::now();
    let p = market();
    let opt = OptionSpec::call(100.0, 1.0).unwrap();
    let mut matched = Vec::new();
    for n in [250, 1000] {
        let g = GridSpec::new(1.0, n, 0.0, 1).unwrap();
        let paths = simulate_truth(&p, &g, &Generator::Gbm, 10_000, SEED).unwrap();
        matched.push(hedge_paths(&paths, &p, &g, p.sigma_bar, &opt, n).unwrap());
    }
    let ratio = matched[0].stdev / matched[1].stdev;
    let unbiased = matched.iter().all(|r| r.mean.abs() < 3.0 * r.standard_error());

    let (nu_true, nu_hedge) = (0.4, 0.1);
    let g = GridSpec::new(1.0, 250, 0.0, 1).unwrap();
    let truth = simulate_truth(&p, &g, &Generator::ExactProportional { nu: nu_true }, 10_000, SEED).unwrap();
    let mis = hedge_paths(&truth, &p, &g, nu_hedge, &opt, 250).unwrap();
    let biased = mis.mean.abs() > 3.0 * mis.standard_error();

    let elapsed = start.elapsed();
    let pass = unbiased && (1.8..=2.2).contains(&ratio) && biased && elapsed < Duration::from_secs(120);
    report(
        9,
        "hedging sanity",
        pass,
        elapsed,
        &format!(
            "matched mean/SE: n=250 {:.2}, n=1000 {:.2}; stdev {:.4} / {:.4} = {ratio:.3}; \
             true nu={nu_true} hedged with nu={nu_hedge}: mean {:.4} (z={:.1})",
            matched[0].mean / matched[0].standard_error(),
            matched[1].mean / matched[1].standard_error(),
            matched[0].stdev,
            matched[1].stdev,
            mis.mean,
            mis.mean / mis.standard_error()
        ),
    );
    assert!(pass);
}

#[test]
fn c10_appendix_demonstration() {
    let start = Instant::now();
    let p = market();
    let rep = appendix_demo(&p, 30.0, &AppendixConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let rn = &rep.risk_neutral;
    let pass = rn.z().abs() < 3.0 && rep.objective.clamp_fraction < 1e-3 && elapsed < Duration::from_secs(30);
    report(
        10,
        "appendix demonstration",
        pass,
        elapsed,
        &format!(
            "P(Y_T<=0) empirical {:.4e} vs closed form {:.4e} (z={:.2}, n={}); objective clamp fraction {:.2e} over {} steps",
            rn.empirical_prob_nonpositive,
            rn.closed_form_prob_nonpositive,
            rn.z(),
            rn.samples,
            rep.objective.clamp_fraction,
            rep.objective.euler_steps
        ),
    );
    assert!(pass);
}
