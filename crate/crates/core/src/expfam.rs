//! Exponential families `p(x, θ) = exp[θ′c(x) − ψ(θ)]` and curves `t ↦ θ_t`
//! of natural parameters.
//!
//! Integrals over a family are carried out in a working coordinate `w`: the
//! identity on the real line, and `w = ln(x/scale)` on the positive half-line.
//! Under that map every in-scope density becomes Gaussian-tailed in `w`.

use crate::error::{Error, Result};
use crate::market::MarketParams;
use crate::quadrature::{self, Tolerance};

/// Families are limited to this many sufficient statistics so that evaluation
/// can use stack buffers.
pub const MAX_STATISTICS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    RealLine,
    /// `(0, ∞)`, integrated in `w = ln(x/scale)`.
    PositiveHalfLine {
        scale: f64,
    },
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Support::RealLine => x.is_finite(),
            Support::PositiveHalfLine { .. } => x > 0.0 && x.is_finite(),
        }
    }

    /// Maps a working coordinate back to the support.
    pub fn from_working(&self, w: f64) -> f64 {
        match *self {
            Support::RealLine => w,
            Support::PositiveHalfLine { scale } => scale * w.exp(),
        }
    }

    pub fn to_working(&self, x: f64) -> f64 {
        match *self {
            Support::RealLine => x,
            Support::PositiveHalfLine { scale } => (x / scale).ln(),
        }
    }

    /// `ln |dx/dw|` at working coordinate `w`.
    pub fn log_jacobian(&self, w: f64) -> f64 {
        match *self {
            Support::RealLine => 0.0,
            Support::PositiveHalfLine { scale } => scale.ln() + w,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Support::RealLine => "(-inf, inf)".to_string(),
            Support::PositiveHalfLine { .. } => "(0, inf)".to_string(),
        }
    }
}

/// A finite-dimensional exponential family with closed-form log-partition.
///
/// `in_domain` is the admissible parameter set Θ. It cannot be computed in
/// general, so implementors supply it; [`normalization`] gives the runtime
/// check that a parameter actually yields a density.
pub trait ExponentialFamily: Send + Sync {
    fn dim(&self) -> usize;
    fn support(&self) -> Support;
    /// Writes `c(x)` into `out[..dim]`.
    fn statistics(&self, x: f64, out: &mut [f64]);
    /// Writes `∂c/∂x` into `out[..dim]`.
    fn statistic_gradients(&self, x: f64, out: &mut [f64]);
    fn log_partition(&self, theta: &[f64]) -> f64;
    fn grad_log_partition(&self, theta: &[f64], out: &mut [f64]);
    fn in_domain(&self, theta: &[f64]) -> bool;

    /// Centre and width of `p(·, θ)` in the working coordinate, counting the
    /// Jacobian. Only used to place quadrature nodes.
    fn working_location(&self, _theta: &[f64]) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// A differentiable curve `t ↦ θ_t` of natural parameters.
pub trait ParameterCurve: Send + Sync {
    fn dim(&self) -> usize;
    fn theta(&self, t: f64, out: &mut [f64]);
    fn theta_dot(&self, t: f64, out: &mut [f64]);
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_theta<F: ExponentialFamily + ?Sized>(fam: &F, theta: &[f64]) -> Result<()> {
    if theta.len() != fam.dim() {
        return Err(Error::invalid(format!(
            "parameter has {} components, family has {}",
            theta.len(),
            fam.dim()
        )));
    }
    if fam.dim() > MAX_STATISTICS {
        return Err(Error::invalid("family has too many statistics"));
    }
    if !fam.in_domain(theta) {
        return Err(Error::domain(format!("theta {theta:?} outside the parameter domain")));
    }
    Ok(())
}

/// `θ′c(x) − ψ(θ)`.
pub fn log_density<F: ExponentialFamily + ?Sized>(fam: &F, theta: &[f64], x: f64) -> Result<f64> {
    check_theta(fam, theta)?;
    let support = fam.support();
    if !support.contains(x) {
        return Err(Error::Support {
            x,
            support: support.describe(),
        });
    }
    let mut c = [0.0; MAX_STATISTICS];
    fam.statistics(x, &mut c);
    Ok(dot(theta, &c[..fam.dim()]) - fam.log_partition(theta))
}

pub fn density<F: ExponentialFamily + ?Sized>(fam: &F, theta: &[f64], x: f64) -> Result<f64> {
    log_density(fam, theta, x).map(f64::exp)
}

/// Integrates `g(x)·p(x, θ)` over the support in the working coordinate.
fn integrate_against<F, G>(fam: &F, theta: &[f64], g: G, tol: Tolerance) -> Result<f64>
where
    F: ExponentialFamily + ?Sized,
    G: Fn(f64, &[f64]) -> f64,
{
    check_theta(fam, theta)?;
    let support = fam.support();
    let psi = fam.log_partition(theta);
    let dim = fam.dim();
    let (center, width) = fam.working_location(theta);
    let integrand = |w: f64| {
        let x = support.from_working(w);
        if !(x.is_finite() && support.contains(x)) {
            // the working map over/underflowed far out in a tail
            return 0.0;
        }
        let mut c = [0.0; MAX_STATISTICS];
        fam.statistics(x, &mut c);
        let lp = dot(theta, &c[..dim]) - psi + support.log_jacobian(w);
        let v = g(x, &c[..dim]);
        if v == 0.0 {
            0.0
        } else {
            v * lp.exp()
        }
    };
    Ok(quadrature::integrate_real_line(integrand, center, width, tol)?.value)
}

/// `∫ p(x, θ) dx`, which must be 1 for θ in the domain.
pub fn normalization<F: ExponentialFamily + ?Sized>(fam: &F, theta: &[f64]) -> Result<f64> {
    integrate_against(fam, theta, |_, _| 1.0, Tolerance::default())
}

/// `E_θ[c(x)]` by quadrature; equals `∇ψ(θ)` for a correct log-partition.
pub fn expected_statistics<F: ExponentialFamily + ?Sized>(fam: &F, theta: &[f64]) -> Result<Vec<f64>> {
    (0..fam.dim())
        .map(|k| integrate_against(fam, theta, |_, c| c[k], Tolerance::default().with_absolute(1e-13)))
        .collect()
}

/// `ψ(ζ, ρ) = −(ζ+1)²/(4ρ) + ½ ln(−π/ρ) + ln s₀`.
pub fn log_partition_lognormal(zeta: f64, rho: f64, s0: f64) -> Result<f64> {
    if !(rho < 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("lognormal family needs rho < 0, got {rho}")));
    }
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::domain(format!("lognormal family needs s0 > 0, got {s0}")));
    }
    Ok(lognormal_psi(zeta, rho, s0))
}

fn lognormal_psi(zeta: f64, rho: f64, s0: f64) -> f64 {
    -(zeta + 1.0).powi(2) / (4.0 * rho) + 0.5 * (-std::f64::consts::PI / rho).ln() + s0.ln()
}

/// Lognormal family with statistics `ln(x/s₀)`, `ln²(x/s₀)` on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalFamily {
    pub s0: f64,
}

impl LognormalFamily {
    pub fn new(s0: f64) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::domain("lognormal family needs s0 > 0"));
        }
        Ok(Self { s0 })
    }
}

impl ExponentialFamily for LognormalFamily {
    fn dim(&self) -> usize {
        2
    }

    fn support(&self) -> Support {
        Support::PositiveHalfLine { scale: self.s0 }
    }

    fn statistics(&self, x: f64, out: &mut [f64]) {
        let l = (x / self.s0).ln();
        out[0] = l;
        out[1] = l * l;
    }

    fn statistic_gradients(&self, x: f64, out: &mut [f64]) {
        let l = (x / self.s0).ln();
        out[0] = 1.0 / x;
        out[1] = 2.0 * l / x;
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        lognormal_psi(theta[0], theta[1], self.s0)
    }

    fn grad_log_partition(&self, theta: &[f64], out: &mut [f64]) {
        let (zeta, rho) = (theta[0], theta[1]);
        out[0] = -(zeta + 1.0) / (2.0 * rho);
        out[1] = (zeta + 1.0).powi(2) / (4.0 * rho * rho) - 1.0 / (2.0 * rho);
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && theta[0].is_finite() && theta[1] < 0.0 && theta[1].is_finite()
    }

    fn working_location(&self, theta: &[f64]) -> (f64, f64) {
        // exp(ζw + ρw² + w) is Gaussian with mean −(ζ+1)/(2ρ), variance −1/(2ρ)
        let rho = theta[1];
        (-(theta[0] + 1.0) / (2.0 * rho), (-0.5 / rho).sqrt())
    }
}

/// Gaussian family with statistics `(x, x²)` on the real line; exercises the
/// generic code paths independently of the lognormal case.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussianFamily;

pub fn gaussian_fixture_family() -> GaussianFamily {
    GaussianFamily
}

impl ExponentialFamily for GaussianFamily {
    fn dim(&self) -> usize {
        2
    }

    fn support(&self) -> Support {
        Support::RealLine
    }

    fn statistics(&self, x: f64, out: &mut [f64]) {
        out[0] = x;
        out[1] = x * x;
    }

    fn statistic_gradients(&self, x: f64, out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = 2.0 * x;
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        -theta[0] * theta[0] / (4.0 * theta[1]) + 0.5 * (-std::f64::consts::PI / theta[1]).ln()
    }

    fn grad_log_partition(&self, theta: &[f64], out: &mut [f64]) {
        let (a, b) = (theta[0], theta[1]);
        out[0] = -a / (2.0 * b);
        out[1] = a * a / (4.0 * b * b) - 1.0 / (2.0 * b);
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && theta[0].is_finite() && theta[1] < 0.0 && theta[1].is_finite()
    }

    fn working_location(&self, theta: &[f64]) -> (f64, f64) {
        (-theta[0] / (2.0 * theta[1]), (-0.5 / theta[1]).sqrt())
    }
}

/// The curve of GBM marginals: `θ_t = (ζ, ρ(t))` with `ρ(t) = −1/(2σ̄²t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalCurve {
    pub zeta: f64,
    pub sigma_bar: f64,
    pub s0: f64,
}

impl LognormalCurve {
    pub fn from_market(params: &MarketParams) -> Self {
        Self {
            zeta: params.zeta(),
            sigma_bar: params.sigma_bar,
            s0: params.s0,
        }
    }

    pub fn family(&self) -> LognormalFamily {
        LognormalFamily { s0: self.s0 }
    }

    pub fn rho(&self, t: f64) -> f64 {
        -1.0 / (2.0 * self.sigma_bar * self.sigma_bar * t)
    }

    pub fn theta_at(&self, t: f64) -> [f64; 2] {
        [self.zeta, self.rho(t)]
    }

    pub fn theta_dot_at(&self, t: f64) -> [f64; 2] {
        [0.0, 1.0 / (2.0 * self.sigma_bar * self.sigma_bar * t * t)]
    }

    /// Marginal density of `S_t` at `x`, for `t > 0`.
    pub fn density(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain("the lognormal curve is defined for t > 0"));
        }
        density(&self.family(), &self.theta_at(t), x)
    }
}

impl ParameterCurve for LognormalCurve {
    fn dim(&self) -> usize {
        2
    }

    fn theta(&self, t: f64, out: &mut [f64]) {
        out[..2].copy_from_slice(&self.theta_at(t));
    }

    fn theta_dot(&self, t: f64, out: &mut [f64]) {
        out[..2].copy_from_slice(&self.theta_dot_at(t));
    }
}
