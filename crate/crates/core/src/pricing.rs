//! Black–Scholes prices, the window-modified volatility σ̄^ε and the price
//! `U^ε(t, ν)` of a call on the proportional-volatility process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::market::{MarketParams, OptionSpec};
use crate::math::norm_cdf;

/// European call price. `tau = 0` returns the intrinsic value; `vol = 0`
/// returns the discounted forward intrinsic value.
pub fn bs_call(spot: f64, strike: f64, r: f64, vol: f64, tau: f64) -> Result<f64> {
    if !(spot > 0.0 && spot.is_finite()) {
        return Err(Error::invalid(format!("spot must be positive, got {spot}")));
    }
    if !(strike >= 0.0 && strike.is_finite()) {
        return Err(Error::invalid(format!("strike must be non-negative, got {strike}")));
    }
    if !(vol >= 0.0 && vol.is_finite()) {
        return Err(Error::invalid(format!("volatility must be non-negative, got {vol}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) || !r.is_finite() {
        return Err(Error::invalid(format!("bad time to maturity {tau} or rate {r}")));
    }
    let disc_strike = strike * (-r * tau).exp();
    if tau == 0.0 {
        return Ok((spot - strike).max(0.0));
    }
    let sd = vol * tau.sqrt();
    if sd == 0.0 || strike == 0.0 {
        return Ok((spot - disc_strike).max(0.0));
    }
    let d1 = ((spot / strike).ln() + r * tau) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    let price = spot * norm_cdf(d1) - disc_strike * norm_cdf(d2);
    Ok(price.clamp((spot - disc_strike).max(0.0), spot))
}

/// `(V_*, V^*) = ((s₀ − K e^{−rT})⁺, s₀)`.
pub fn price_bounds(params: &MarketParams, option: &OptionSpec) -> (f64, f64) {
    let lower = (params.s0 - option.strike * params.discount(option.maturity)).max(0.0);
    (lower, params.s0)
}

/// Which case of the effective-volatility formula applies at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `t ∈ [α, α + ε)`
    Window,
    /// `t ∈ [α + ε, α + Δ)`
    PostWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveVol {
    pub vol: f64,
    pub branch: Branch,
    /// `σ̄^ε(t)²(T − t)`
    pub integrated_variance: f64,
}

/// σ̄^ε(t): the constant volatility carrying the remaining variance of `Y^ν`
/// from `t` to `T = grid.horizon` under the pricing measure.
///
/// ```text
/// t ∈ [α, α+ε):   ( ε/Δ (σ̄²−ν²)(T−α) + ν²(T−α) + σ̄²(α−t) ) / (T−t)
/// t ∈ [α+ε, α+Δ): ( ε/Δ (σ̄²−ν²)(T−α−Δ) + ν²(T−t) ) / (T−t)
/// ```
pub fn effective_vol(params: &MarketParams, grid: &GridSpec, nu: f64, t: f64) -> Result<EffectiveVol> {
    params.validate()?;
    grid.validate()?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu must be positive, got {nu}")));
    }
    let big_t = grid.horizon;
    if !(t >= 0.0 && t < big_t) {
        return Err(Error::domain(format!("need 0 <= t < T = {big_t}, got {t}")));
    }
    let sb2 = params.sigma_bar * params.sigma_bar;
    let nu2 = nu * nu;
    let frac = grid.window_fraction();
    let delta = grid.delta();
    let alpha = grid.alpha(t);
    let (branch, var) = if t < alpha + grid.epsilon {
        (
            Branch::Window,
            frac * (sb2 - nu2) * (big_t - alpha) + nu2 * (big_t - alpha) + sb2 * (alpha - t),
        )
    } else {
        (
            Branch::PostWindow,
            frac * (sb2 - nu2) * (big_t - alpha - delta) + nu2 * (big_t - t),
        )
    };
    Ok(EffectiveVol {
        vol: (var / (big_t - t)).sqrt(),
        branch,
        integrated_variance: var,
    })
}

/// Price record; serializes as
/// `{nu, epsilon_over_delta, t, effective_vol, branch, price, lower_bound, upper_bound}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub nu: f64,
    pub epsilon_over_delta: f64,
    pub t: f64,
    pub effective_vol: f64,
    pub branch: Branch,
    pub price: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

fn check_option(grid: &GridSpec, option: &OptionSpec) -> Result<()> {
    option.validate()?;
    if (option.maturity - grid.horizon).abs() > 1e-12 * grid.horizon {
        return Err(Error::invalid(format!(
            "option maturity {} must equal the grid horizon {}",
            option.maturity, grid.horizon
        )));
    }
    Ok(())
}

/// `U^ε(t, ν)`: the Black–Scholes price at `spot` with volatility σ̄^ε(t).
///
/// The bounds are those of the time-`t` problem,
/// `((spot − K e^{−r(T−t)})⁺, spot)`, which reduce to `(V_*, V^*)` at `t = 0`.
pub fn price_u(
    params: &MarketParams,
    grid: &GridSpec,
    nu: f64,
    t: f64,
    spot: f64,
    option: &OptionSpec,
) -> Result<PriceQuote> {
    check_option(grid, option)?;
    let ev = effective_vol(params, grid, nu, t)?;
    let tau = option.maturity - t;
    let price = bs_call(spot, option.strike, params.r, ev.vol, tau)?;
    let lower = (spot - option.strike * (-params.r * tau).exp()).max(0.0);
    Ok(PriceQuote {
        nu,
        epsilon_over_delta: grid.window_fraction(),
        t,
        effective_vol: ev.vol,
        branch: ev.branch,
        price,
        lower_bound: lower,
        upper_bound: spot,
    })
}

pub const INVERSION_TOLERANCE: f64 = 1e-8;
const MAX_BISECTIONS: usize = 200;
const NU_LOW: f64 = 1e-6;
const NU_HIGH: f64 = 5.0;

/// The ν with `U^ε(0, ν) = target` to within `1e-8·s₀`.
///
/// The bracket starts at `[1e-6, 5]`, widens geometrically, and is then
/// bisected in `ln ν`. For `ε > 0` prices below `U^ε(0, 0⁺)` are unreachable
/// and reported as a bounds error with that floor as the lower end.
pub fn invert_nu_for_price(params: &MarketParams, grid: &GridSpec, option: &OptionSpec, target: f64) -> Result<f64> {
    check_option(grid, option)?;
    let (v_lo, v_hi) = price_bounds(params, option);
    let out_of_range = |lower: f64| Error::Bounds {
        target,
        lower,
        upper: v_hi,
    };
    if !(target > v_lo && target < v_hi) {
        return Err(out_of_range(v_lo));
    }
    let tol = INVERSION_TOLERANCE * params.s0;
    // aim well inside the contract so callers re-pricing the root keep a margin
    let aim = 1e-3 * tol;
    let price = |nu: f64| price_u(params, grid, nu, 0.0, params.s0, option).map(|q| q.price);

    // the ε-window keeps some σ̄ variance even as ν → 0
    let floor = {
        let var = grid.window_fraction() * params.sigma_bar * params.sigma_bar * grid.horizon;
        bs_call(
            params.s0,
            option.strike,
            params.r,
            (var / grid.horizon).sqrt(),
            grid.horizon,
        )?
    };
    if grid.epsilon > 0.0 && target <= floor {
        return Err(out_of_range(floor));
    }

    let (mut lo, mut hi) = (NU_LOW, NU_HIGH);
    let mut p_lo = price(lo)?;
    let mut p_hi = price(hi)?;
    let mut widen = 0;
    while p_lo > target || p_hi < target {
        widen += 1;
        if widen > MAX_BISECTIONS {
            return Err(out_of_range(p_lo.min(v_lo)));
        }
        if p_lo > target {
            lo /= 10.0;
            p_lo = price(lo)?;
        }
        if p_hi < target {
            hi *= 2.0;
            p_hi = price(hi)?;
        }
    }
    for p in [(lo, p_lo), (hi, p_hi)] {
        if (p.1 - target).abs() < aim {
            return Ok(p.0);
        }
    }
    let mut best = (f64::INFINITY, lo);
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        let p = price(mid)?;
        let resid = p - target;
        if resid.abs() < best.0 {
            best = (resid.abs(), mid);
        }
        if resid.abs() < aim {
            return Ok(mid);
        }
        if resid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
    }
    if best.0 < tol {
        return Ok(best.1);
    }
    Err(Error::Numeric {
        message: format!("price inversion stalled at nu = {}", best.1),
        residual: best.0,
    })
}
