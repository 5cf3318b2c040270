use alloc::format;

use crate::error::{Error, Result};
use crate::math;
use crate::models::{BsParams, Market, ModelSpec, OptionType, XvaParams};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * math::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * math::exp(-0.5 * x * x)
}

/// Price and sensitivities of a European option. `theta` is the derivative
/// with respect to time to maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsGreeks {
    pub price: f64,
    pub delta: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl BsGreeks {
    fn scaled(self, factor: f64, rate: f64) -> Self {
        BsGreeks {
            price: factor * self.price,
            delta: factor * self.delta,
            gamma: factor * self.gamma,
            theta: factor * (self.theta - rate * self.price),
        }
    }
}

/// Black-Scholes price and Greeks with carry `r_repo`, at time to maturity
/// `t` and spot `s`.
///
/// `t = 0` returns the payoff (with the one-sided delta), `s = 0` the
/// discounted strike branch. Arguments are not validated; see [`bs_greeks`].
pub fn bs_greeks_with(t: f64, s: f64, strike: f64, option: OptionType, p: BsParams, r: f64) -> BsGreeks {
    let alpha = option.alpha();
    let q = r - p.r_repo;
    if t <= 0.0 {
        let intrinsic = alpha * (s - strike);
        return BsGreeks {
            price: intrinsic.max(0.0),
            delta: if intrinsic > 0.0 { alpha } else { 0.0 },
            gamma: 0.0,
            theta: 0.0,
        };
    }
    let disc_r = math::exp(-r * t);
    let disc_q = math::exp(-q * t);
    if s <= 0.0 {
        let put = option == OptionType::Put;
        return BsGreeks {
            price: if put { strike * disc_r } else { 0.0 },
            delta: if put { -disc_q } else { 0.0 },
            gamma: 0.0,
            theta: if put { -r * strike * disc_r } else { 0.0 },
        };
    }
    let sqrt_t = math::sqrt(t);
    let vol = p.sigma * sqrt_t;
    let z1 = (math::ln(s / strike) + (p.r_repo + 0.5 * p.sigma * p.sigma) * t) / vol;
    let z2 = z1 - vol;
    let n1 = normal_cdf(alpha * z1);
    let n2 = normal_cdf(alpha * z2);
    let pdf1 = normal_pdf(z1);
    BsGreeks {
        price: alpha * s * disc_q * n1 - alpha * strike * disc_r * n2,
        delta: alpha * disc_q * n1,
        gamma: disc_q * pdf1 / (s * vol),
        theta: s * disc_q * pdf1 * p.sigma / (2.0 * sqrt_t) - alpha * q * s * disc_q * n1
            + alpha * r * strike * disc_r * n2,
    }
}

/// Risk-free price times `exp(-(lambda_B (1 - R_B) + lambda_C (1 - R_C)) t)`.
///
/// This solves the nonlinear equation whenever the price stays
/// non-negative and the funding spread follows `s_F = (1 - R_B) lambda_B`.
pub fn risky_bs_greeks_with(t: f64, s: f64, strike: f64, option: OptionType, p: BsParams, xva: &XvaParams) -> BsGreeks {
    let rate = xva.adjustment_rate();
    bs_greeks_with(t, s, strike, option, p, xva.r).scaled(math::exp(-rate * t.max(0.0)), rate)
}

pub fn risky_bs_price_with(t: f64, s: f64, strike: f64, option: OptionType, p: BsParams, xva: &XvaParams) -> f64 {
    risky_bs_greeks_with(t, s, strike, option, p, xva).price
}

fn bs_inputs(spec: &ModelSpec, t: f64, s: f64) -> Result<BsParams> {
    let p = match spec.market {
        Market::Bs1d(p) => p,
        _ => return Err(Error::WrongModelKind("closed-form prices need a one-asset model")),
    };
    if !(p.sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", p.sigma)));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time to maturity must be >= 0, got {t}")));
    }
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("spot must be >= 0, got {s}")));
    }
    Ok(p)
}

/// Risk-free price for a one-asset model, ignoring its valuation adjustments.
pub fn bs_price(spec: &ModelSpec, t: f64, s: f64) -> Result<f64> {
    Ok(bs_greeks(spec, t, s)?.price)
}

/// Risk-free price, delta, gamma and theta.
pub fn bs_greeks(spec: &ModelSpec, t: f64, s: f64) -> Result<BsGreeks> {
    let p = bs_inputs(spec, t, s)?;
    Ok(bs_greeks_with(t, s, spec.strike, spec.option, p, spec.xva.r))
}

/// Price including the valuation adjustments.
pub fn risky_bs_price(spec: &ModelSpec, t: f64, s: f64) -> Result<f64> {
    Ok(risky_bs_greeks(spec, t, s)?.price)
}

pub fn risky_bs_greeks(spec: &ModelSpec, t: f64, s: f64) -> Result<BsGreeks> {
    let p = bs_inputs(spec, t, s)?;
    Ok(risky_bs_greeks_with(t, s, spec.strike, spec.option, p, &spec.xva))
}
