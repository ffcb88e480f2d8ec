use gridlaw::drift::{closed_form_drift, drift_consistency_report, tensor_points};
use gridlaw::expfam::LognormalCurve;
use gridlaw::hedging::{hedge_paths, select_nu, simulate_truth};
use gridlaw::pricing::{invert_nu_for_price, price_bounds, price_u};
use gridlaw::sim::{
    risk_neutral_dynamics, simulate_euler, simulate_exact_proportional, simulate_gbm, Generator, Measure, PathSet,
};
use gridlaw::stats::{
    appendix_demo, fp_residual, grid_return_diagnostics, off_grid_fingerprint, uniform_mesh, ValidationReport,
};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Artifacts;

/// What a subcommand reports back: whether its thresholds held, and a JSON
/// summary for stdout.
pub struct Outcome {
    pub pass: bool,
    pub summary: Value,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Self { pass: true, summary }
    }
}

fn simulate_paths(cfg: &ExperimentConfig) -> Result<PathSet, CliError> {
    let (p, g) = (&cfg.market, cfg.grid());
    let (n, seed) = (cfg.run.n_paths, cfg.run.seed);
    let paths = match (cfg.run.measure, cfg.generator()?) {
        (Measure::RiskNeutral, Generator::Gbm) => simulate_gbm(p, &g, n, seed, Measure::RiskNeutral)?,
        (Measure::RiskNeutral, _) => risk_neutral_dynamics(p, &g, &cfg.vol, n, seed)?,
        (Measure::Objective, Generator::Gbm) => simulate_gbm(p, &g, n, seed, Measure::Objective)?,
        (Measure::Objective, Generator::ExactProportional { nu }) => {
            simulate_exact_proportional(p, &g, nu, n, seed, Measure::Objective)?
        }
        (Measure::Objective, Generator::Euler { vol }) => simulate_euler(p, &g, &vol, n, seed)?,
    };
    Ok(paths)
}

fn path_summary(paths: &PathSet) -> Value {
    json!({
        "generator": paths.generator().label(),
        "measure": paths.measure(),
        "seed": paths.seed(),
        "n_paths": paths.n_paths(),
        "n_times": paths.n_times(),
        "excluded_paths": paths.excluded_paths(),
        "clamped_steps": paths.clamped_steps(),
        "total_steps": paths.total_steps(),
        "clamp_fraction": paths.clamp_fraction(),
    })
}

pub fn simulate(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let paths = simulate_paths(cfg)?;
    let config_line = serde_json::to_string(cfg).expect("configs always serialize");
    let metadata = [("config".to_string(), config_line)];
    out.write_with("paths.csv", |w| paths.write_csv(w, &metadata))?;
    let summary = path_summary(&paths);
    out.write_json("summary.json", &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn validate(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let paths = simulate_paths(cfg)?;
    let g = cfg.grid();
    let diagnostics = grid_return_diagnostics(&paths, &cfg.market, &g)?;
    let mut report = ValidationReport::default();
    report.extend(diagnostics.entries());
    let fingerprint = if cfg.validate.fingerprint {
        let nu = cfg.pricing_nu()?;
        let f = off_grid_fingerprint(&paths, &cfg.market, &g, nu)?;
        report.extend(f.entries());
        Some(f)
    } else {
        None
    };
    out.write_with("validation.txt", |w| report.write_text(w))?;
    let pass = report.all_pass();
    out.write_json(
        "validation.json",
        &json!({
            "pass": pass,
            "paths": path_summary(&paths),
            "grid": diagnostics,
            "fingerprint": fingerprint,
        }),
    )?;
    let failures: Vec<&str> = report.failures().map(|e| e.name.as_str()).collect();
    Ok(Outcome {
        pass,
        summary: json!({ "pass": pass, "checks": report.entries.len(), "failures": failures }),
    })
}

pub fn price(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let nu = cfg.pricing_nu()?;
    let spot = cfg.price.spot.expect("resolved config");
    let quote = price_u(&cfg.market, &cfg.grid(), nu, cfg.price.t, spot, &cfg.option())?;
    let summary = serde_json::to_value(quote).expect("quotes serialize");
    out.write_json("quote.json", &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn invert_nu(cfg: &ExperimentConfig, out: &Artifacts, target: Option<f64>) -> Result<Outcome, CliError> {
    let target = target
        .or(cfg.price.target)
        .ok_or_else(|| CliError::Usage("invert-nu needs --target or price.target".into()))?;
    let (p, g, opt) = (&cfg.market, cfg.grid(), cfg.option());
    let nu = invert_nu_for_price(p, &g, &opt, target)?;
    let back = price_u(p, &g, nu, 0.0, p.s0, &opt)?.price;
    let summary = json!({
        "target": target,
        "nu": nu,
        "price": back,
        "abs_error": (back - target).abs(),
        "epsilon_over_delta": g.window_fraction(),
    });
    out.write_json("inversion.json", &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn bounds(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let opt = cfg.option();
    let (lower, upper) = price_bounds(&cfg.market, &opt);
    let summary = json!({
        "strike": opt.strike,
        "maturity": opt.maturity,
        "lower": lower,
        "upper": upper,
    });
    out.write_json("bounds.json", &summary)?;
    Ok(Outcome::ok(summary))
}

fn truth_paths(cfg: &ExperimentConfig) -> Result<PathSet, CliError> {
    if cfg.run.measure != Measure::Objective {
        return Err(CliError::Usage("hedging runs on objective-measure paths".into()));
    }
    Ok(simulate_truth(
        &cfg.market,
        &cfg.grid(),
        &cfg.generator()?,
        cfg.run.n_paths,
        cfg.run.seed,
    )?)
}

pub fn hedge(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let paths = truth_paths(cfg)?;
    let nu = cfg.hedge.hedger_nu.expect("resolved config");
    let n = cfg.hedge.n_rebalances.expect("resolved config");
    let report = hedge_paths(&paths, &cfg.market, &cfg.grid(), nu, &cfg.option(), n)?;
    out.write_with("hedge.csv", |w| report.write_csv(w))?;
    let mut summary = serde_json::to_value(report.summary()).expect("summaries serialize");
    summary["true_generator"] = json!(report.true_generator);
    summary["standard_error"] = json!(report.standard_error());
    out.write_json("hedge_summary.json", &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn select(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let paths = truth_paths(cfg)?;
    let criterion = cfg.hedge.criterion.build()?;
    let n = cfg.hedge.n_rebalances.expect("resolved config");
    let sel = select_nu(
        &paths,
        &cfg.market,
        &cfg.grid(),
        &cfg.option(),
        n,
        criterion.as_ref(),
        &cfg.hedge.nu_grid,
    )?;
    out.write_json("selection.json", &sel)?;
    Ok(Outcome::ok(json!({
        "criterion": sel.criterion,
        "best_nu": sel.best_nu,
        "scores": sel.scores,
    })))
}

pub fn fp(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let p = &cfg.market;
    let s = &cfg.fp;
    let curve = LognormalCurve::from_market(p);
    let fam = curve.family();
    let drift = closed_form_drift(p, &cfg.vol)?;
    let diffusion = cfg.vol.diffusion(p.sigma_bar);
    let t = uniform_mesh(s.t_min, s.t_max.expect("resolved config"), s.n_t);
    let x = uniform_mesh(
        s.x_min.expect("resolved config"),
        s.x_max.expect("resolved config"),
        s.n_x,
    );
    let report = fp_residual(&fam, &curve, &diffusion, |t, x| drift.eval(t, x, p.s0, 0.0), &t, &x)?;
    out.write_with("fp_residual.csv", |w| report.write_csv(w))?;
    let pass = report.max_residual < s.threshold;
    let summary = json!({
        "volatility": cfg.vol.label(),
        "n_t": s.n_t,
        "n_x": s.n_x,
        "max_residual": report.max_residual,
        "argmax": report.argmax,
        "normalization": report.normalization,
        "threshold": s.threshold,
        "pass": pass,
    });
    out.write_json("fp_summary.json", &summary)?;
    Ok(Outcome { pass, summary })
}

/// Risk-neutral z-score and objective clamp frequency bounds of the demonstration.
const APPENDIX_Z: f64 = 3.0;
const APPENDIX_CLAMP: f64 = 1e-3;

pub fn appendix(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let rep = appendix_demo(&cfg.market, cfg.appendix.nu, &cfg.appendix.config())?;
    let z = rep.risk_neutral.z();
    let pass = z.abs() < APPENDIX_Z && rep.objective.clamp_fraction < APPENDIX_CLAMP;
    out.write_json("appendix.json", &json!({ "pass": pass, "z": z, "report": rep }))?;
    Ok(Outcome {
        pass,
        summary: json!({
            "pass": pass,
            "nu": rep.nu,
            "z": z,
            "empirical_prob_nonpositive": rep.risk_neutral.empirical_prob_nonpositive,
            "closed_form_prob_nonpositive": rep.risk_neutral.closed_form_prob_nonpositive,
            "clamp_fraction": rep.objective.clamp_fraction,
            "summary": rep.summary,
        }),
    })
}

pub fn drift_check(cfg: &ExperimentConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let d = &cfg.drift_check;
    let pts = tensor_points(
        (d.t_min, d.t_max, d.n_t),
        (d.x_min, d.x_max, d.n_x),
        d.y.expect("resolved config"),
        d.alpha,
    );
    let report = drift_consistency_report(&cfg.market, &cfg.vol, &pts)?;
    out.write_with("drift_check.csv", |w| report.write_csv(w))?;
    let pass = report.max_rel_err < d.tolerance;
    let summary = json!({
        "volatility": report.volatility,
        "points": report.rows.len(),
        "max_rel_err": report.max_rel_err,
        "tolerance": d.tolerance,
        "pass": pass,
    });
    out.write_json("drift_check.json", &summary)?;
    Ok(Outcome { pass, summary })
}
