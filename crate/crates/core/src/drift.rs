//! Drifts that make `dY = u(t, Y) dt + σ_t(Y) dW` transport a prescribed
//! curve of densities.
//!
//! [`generic_drift`] evaluates the general three-term construction by
//! quadrature for any [`ExponentialFamily`] and [`ParameterCurve`].
//! [`closed_form_drift`] gives the lognormal specialisation, anchored at a
//! price `y` and time `α` so that it can be restarted at every grid point.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::{dot, ExponentialFamily, LognormalCurve, LognormalFamily, ParameterCurve, Support, MAX_STATISTICS};
use crate::market::MarketParams;
use crate::quadrature::{self, Tolerance};

/// User-supplied diffusion coefficient `(t, x) ↦ σ_t(x)`.
#[derive(Clone)]
pub struct CustomVolatility {
    pub name: String,
    pub sigma: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomVolatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomVolatility").field("name", &self.name).finish()
    }
}

/// Choice of diffusion coefficient σ_t(x).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VolatilitySpec {
    /// σ = ν
    Constant { nu: f64 },
    /// σ = ν√x
    SqrtProportional { nu: f64 },
    /// σ = νx
    Proportional { nu: f64 },
    /// σ = σ̄x, the GBM coefficient itself.
    BlackScholes,
    #[serde(skip)]
    Custom(CustomVolatility),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilityKind {
    Constant,
    SqrtProportional,
    Proportional,
    BlackScholes,
    Custom,
}

impl VolatilitySpec {
    pub fn kind(&self) -> VolatilityKind {
        match self {
            VolatilitySpec::Constant { .. } => VolatilityKind::Constant,
            VolatilitySpec::SqrtProportional { .. } => VolatilityKind::SqrtProportional,
            VolatilitySpec::Proportional { .. } => VolatilityKind::Proportional,
            VolatilitySpec::BlackScholes => VolatilityKind::BlackScholes,
            VolatilitySpec::Custom(_) => VolatilityKind::Custom,
        }
    }

    pub fn custom(name: impl Into<String>, sigma: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        VolatilitySpec::Custom(CustomVolatility {
            name: name.into(),
            sigma: Arc::new(sigma),
        })
    }

    /// The coefficient ν, with `BlackScholes` resolving to σ̄.
    pub fn nu(&self, sigma_bar: f64) -> Option<f64> {
        match *self {
            VolatilitySpec::Constant { nu }
            | VolatilitySpec::SqrtProportional { nu }
            | VolatilitySpec::Proportional { nu } => Some(nu),
            VolatilitySpec::BlackScholes => Some(sigma_bar),
            VolatilitySpec::Custom(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            VolatilitySpec::Constant { nu }
            | VolatilitySpec::SqrtProportional { nu }
            | VolatilitySpec::Proportional { nu } => {
                if nu > 0.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "volatility coefficient must be positive, got {nu}"
                    )))
                }
            }
            _ => Ok(()),
        }
    }

    /// Binds σ̄ so the coefficient can be evaluated.
    pub fn diffusion(&self, sigma_bar: f64) -> Diffusion<'_> {
        Diffusion { spec: self, sigma_bar }
    }

    pub fn label(&self) -> String {
        match self {
            VolatilitySpec::Constant { nu } => format!("constant({nu})"),
            VolatilitySpec::SqrtProportional { nu } => format!("sqrt_proportional({nu})"),
            VolatilitySpec::Proportional { nu } => format!("proportional({nu})"),
            VolatilitySpec::BlackScholes => "black_scholes".to_string(),
            VolatilitySpec::Custom(c) => format!("custom({})", c.name),
        }
    }
}

/// A volatility spec with σ̄ bound; evaluates σ, `a = σ²` and `∂a/∂x`.
#[derive(Debug, Clone, Copy)]
pub struct Diffusion<'a> {
    spec: &'a VolatilitySpec,
    sigma_bar: f64,
}

impl Diffusion<'_> {
    pub fn sigma(&self, t: f64, x: f64) -> f64 {
        match self.spec {
            VolatilitySpec::Constant { nu } => *nu,
            VolatilitySpec::SqrtProportional { nu } => nu * x.sqrt(),
            VolatilitySpec::Proportional { nu } => nu * x,
            VolatilitySpec::BlackScholes => self.sigma_bar * x,
            VolatilitySpec::Custom(c) => (c.sigma)(t, x),
        }
    }

    pub fn a(&self, t: f64, x: f64) -> f64 {
        let s = self.sigma(t, x);
        s * s
    }

    pub fn da_dx(&self, t: f64, x: f64) -> f64 {
        match self.spec {
            VolatilitySpec::Constant { .. } => 0.0,
            VolatilitySpec::SqrtProportional { nu } => nu * nu,
            VolatilitySpec::Proportional { nu } => 2.0 * nu * nu * x,
            VolatilitySpec::BlackScholes => 2.0 * self.sigma_bar * self.sigma_bar * x,
            VolatilitySpec::Custom(_) => {
                let h = 1e-5 * x.abs().max(1.0);
                (self.a(t, x + h) - self.a(t, x - h)) / (2.0 * h)
            }
        }
    }
}

/// Drift of the general construction at `(t, x)`:
///
/// `½ ∂a/∂x + ½ a θ′∂c/∂x − θ̇′ ∫_L^x (c(ξ) − ∇ψ(θ)) exp[θ′(c(ξ) − c(x))] dξ`
///
/// with `L` the lower end of the support. Since `∫(c − ∇ψ)p = 0` over the whole
/// support, the integral over `[L, x]` equals minus the one over `[x, U]`; the
/// side on which `p(ξ) ≤ p(x)` is integrated so the exponential stays bounded.
pub fn generic_drift<F, C>(fam: &F, curve: &C, diffusion: &Diffusion<'_>, t: f64, x: f64) -> Result<f64>
where
    F: ExponentialFamily + ?Sized,
    C: ParameterCurve + ?Sized,
{
    let dim = fam.dim();
    if curve.dim() != dim || dim > MAX_STATISTICS {
        return Err(Error::invalid("curve and family dimensions differ"));
    }
    if !(t > 0.0) {
        return Err(Error::domain("generic drift needs t > 0"));
    }
    let support = fam.support();
    if !support.contains(x) {
        return Err(Error::Support {
            x,
            support: support.describe(),
        });
    }

    let mut theta = [0.0; MAX_STATISTICS];
    let mut theta_dot = [0.0; MAX_STATISTICS];
    let mut grad_psi = [0.0; MAX_STATISTICS];
    let mut c_x = [0.0; MAX_STATISTICS];
    let mut dc_x = [0.0; MAX_STATISTICS];
    curve.theta(t, &mut theta);
    curve.theta_dot(t, &mut theta_dot);
    let (theta, theta_dot) = (&theta[..dim], &theta_dot[..dim]);
    if !fam.in_domain(theta) {
        return Err(Error::domain(format!("curve leaves the parameter domain at t = {t}")));
    }
    fam.grad_log_partition(theta, &mut grad_psi);
    fam.statistics(x, &mut c_x);
    fam.statistic_gradients(x, &mut dc_x);
    let theta_c_x = dot(theta, &c_x[..dim]);
    let slope = dot(theta, &dc_x[..dim]);

    let w_x = support.to_working(x);
    let (_, width) = fam.working_location(theta);
    let lower_side = slope >= 0.0;

    let mut transport = 0.0;
    for k in 0..dim {
        if theta_dot[k] == 0.0 {
            continue;
        }
        let g = grad_psi[k];
        let integrand = |w: f64| {
            let xi = support.from_working(w);
            let mut c = [0.0; MAX_STATISTICS];
            fam.statistics(xi, &mut c);
            let exponent = dot(theta, &c[..dim]) - theta_c_x + support.log_jacobian(w);
            let v = c[k] - g;
            if v == 0.0 {
                0.0
            } else {
                v * exponent.exp()
            }
        };
        let abs_tol = 1e-13
            * match support {
                Support::RealLine => x.abs().max(1.0),
                Support::PositiveHalfLine { .. } => x,
            };
        let tol = Tolerance::default().with_absolute(abs_tol);
        let integral = if lower_side {
            quadrature::integrate_lower(integrand, w_x, width, tol)?.value
        } else {
            -quadrature::integrate_upper(integrand, w_x, width, tol)?.value
        };
        transport += theta_dot[k] * integral;
    }

    let a = diffusion.a(t, x);
    Ok(0.5 * diffusion.da_dx(t, x) + 0.5 * a * slope - transport)
}

/// Which closed form a [`DriftFn`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftProvenance {
    /// The anchored lognormal drift for a volatility of the given kind.
    ClosedForm(VolatilityKind),
}

/// The anchored lognormal drift `u_t(x, y, α)`.
///
/// For `t > α` this is
/// `½ ∂a/∂x + ½ (a/x)[ζ + 2ρ(t−α) ln(x/y)] + x/(2(t−α)) [ln(x/y) − (ζ+1)/(2ρ(t−α))]`,
/// i.e. the GBM marginal curve restarted from `y` at time `α`. At `t = α` the
/// drift is singular; callers stay out of the window `[α, α+ε)`.
#[derive(Debug, Clone)]
pub struct DriftFn {
    params: MarketParams,
    vol: VolatilitySpec,
    provenance: DriftProvenance,
}

impl DriftFn {
    pub fn provenance(&self) -> DriftProvenance {
        self.provenance
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn volatility(&self) -> &VolatilitySpec {
        &self.vol
    }

    pub fn eval(&self, t: f64, x: f64, y: f64, alpha: f64) -> f64 {
        let p = &self.params;
        if let VolatilitySpec::BlackScholes = self.vol {
            return p.mu * x;
        }
        let tau = t - alpha;
        let zeta = p.zeta();
        let rho = -1.0 / (2.0 * p.sigma_bar * p.sigma_bar * tau);
        let log_ratio = (x / y).ln();
        let d = self.vol.diffusion(p.sigma_bar);
        0.5 * d.da_dx(t, x)
            + 0.5 * d.a(t, x) / x * (zeta + 2.0 * rho * log_ratio)
            + x / (2.0 * tau) * (log_ratio - (zeta + 1.0) / (2.0 * rho))
    }
}

pub fn closed_form_drift(params: &MarketParams, vol: &VolatilitySpec) -> Result<DriftFn> {
    params.validate()?;
    vol.validate()?;
    if let VolatilitySpec::Custom(_) = vol {
        return Err(Error::Unsupported(
            "custom volatilities have no closed-form drift; use generic_drift".into(),
        ));
    }
    Ok(DriftFn {
        params: *params,
        vol: vol.clone(),
        provenance: DriftProvenance::ClosedForm(vol.kind()),
    })
}

/// Quadrature drift for the lognormal curve restarted at `(y, α)`: the family
/// is re-centred at `y` and the curve evaluated at `t − α`.
pub fn anchored_generic_drift(
    params: &MarketParams,
    vol: &VolatilitySpec,
    t: f64,
    x: f64,
    y: f64,
    alpha: f64,
) -> Result<f64> {
    let curve = LognormalCurve {
        zeta: params.zeta(),
        sigma_bar: params.sigma_bar,
        s0: y,
    };
    let fam = LognormalFamily::new(y)?;
    // the diffusion coefficient keeps absolute time; the curve runs on t − α
    let shifted = ShiftedCurve { curve, alpha };
    let d = vol.diffusion(params.sigma_bar);
    generic_drift(&fam, &shifted, &d, t, x).map_err(|e| match e {
        Error::Domain(_) if t <= alpha => Error::domain("drift is singular at t = alpha"),
        other => other,
    })
}

struct ShiftedCurve {
    curve: LognormalCurve,
    alpha: f64,
}

impl ParameterCurve for ShiftedCurve {
    fn dim(&self) -> usize {
        2
    }
    fn theta(&self, t: f64, out: &mut [f64]) {
        self.curve.theta(t - self.alpha, out)
    }
    fn theta_dot(&self, t: f64, out: &mut [f64]) {
        self.curve.theta_dot(t - self.alpha, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftComparison {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub closed_form: f64,
    pub generic: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConsistencyReport {
    pub volatility: String,
    pub rows: Vec<DriftComparison>,
    pub max_rel_err: f64,
}

impl DriftConsistencyReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,y,alpha,closed_form,generic,rel_err")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.x, r.y, r.alpha, r.closed_form, r.generic, r.rel_err
            )?;
        }
        Ok(())
    }
}

/// Compares the closed-form and quadrature drifts; the discrepancy at each
/// point is `|closed − generic| / (1 + |closed|)`.
pub fn drift_consistency_report(
    params: &MarketParams,
    vol: &VolatilitySpec,
    points: &[DriftPoint],
) -> Result<DriftConsistencyReport> {
    let closed = closed_form_drift(params, vol)?;
    let mut rows = Vec::with_capacity(points.len());
    let mut max_rel_err: f64 = 0.0;
    for p in points {
        let cf = closed.eval(p.t, p.x, p.y, p.alpha);
        let gen = anchored_generic_drift(params, vol, p.t, p.x, p.y, p.alpha)?;
        let rel_err = (cf - gen).abs() / (1.0 + cf.abs());
        max_rel_err = max_rel_err.max(rel_err);
        rows.push(DriftComparison {
            t: p.t,
            x: p.x,
            y: p.y,
            alpha: p.alpha,
            closed_form: cf,
            generic: gen,
            rel_err,
        });
    }
    Ok(DriftConsistencyReport {
        volatility: vol.label(),
        rows,
        max_rel_err,
    })
}

/// Tensor grid of `nt × nx` points, `t ∈ [t_lo, t_hi]`, `x ∈ [x_lo, x_hi]`,
/// anchored at `(y, α)`; times are offsets from α.
pub fn tensor_points(
    (t_lo, t_hi, nt): (f64, f64, usize),
    (x_lo, x_hi, nx): (f64, f64, usize),
    y: f64,
    alpha: f64,
) -> Vec<DriftPoint> {
    let lin = |lo: f64, hi: f64, n: usize, i: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(nt * nx);
    for i in 0..nt {
        for j in 0..nx {
            pts.push(DriftPoint {
                t: alpha + lin(t_lo, t_hi, nt, i),
                x: lin(x_lo, x_hi, nx, j),
                y,
                alpha,
            });
        }
    }
    pts
}
