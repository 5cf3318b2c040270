//! Pricing models: market and valuation-adjustment parameters, payoffs, the
//! nonlinear source term and the residual operator of every grid region.
//!
//! All models share the form
//!
//! ```text
//! du/dt - sum_ij a_ij d2u/dx_i dx_j - sum_i b_i du/dx_i + r u + f(u) = 0
//! ```
//!
//! with `t` the time to maturity and `u(0, x)` the payoff. In the default
//! [`ResidualMode::PdeBoundary`] every boundary residual is this equation
//! restricted to the face: on lower faces the degenerate coefficients vanish
//! by themselves, and on `x_i = max` faces the condition `d2u/dx_i^2 = 0` is
//! substituted, which removes the `a_ii` term. [`ResidualMode::Classic`]
//! penalizes the boundary condition itself instead.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Jet2, JetLayout, Scalar};
use crate::error::{Error, Result};
use crate::geometry::{DomainBox, RegionId};
use crate::math;
use crate::reference;

/// Rates entering the source term.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct XvaParams {
    /// Seller hazard rate.
    pub lambda_b: f64,
    /// Counterparty hazard rate.
    pub lambda_c: f64,
    /// Seller recovery rate.
    pub recovery_b: f64,
    /// Counterparty recovery rate.
    pub recovery_c: f64,
    /// Funding spread.
    pub funding_spread: f64,
    /// Risk-free rate.
    pub r: f64,
}

impl XvaParams {
    /// Funding spread set to `(1 - R_B) lambda_B`.
    pub fn with_default_funding(lambda_b: f64, lambda_c: f64, recovery_b: f64, recovery_c: f64, r: f64) -> Self {
        XvaParams { lambda_b, lambda_c, recovery_b, recovery_c, funding_spread: (1.0 - recovery_b) * lambda_b, r }
    }

    /// No default or funding effects: `f = 0`.
    pub fn risk_free(r: f64) -> Self {
        XvaParams { lambda_b: 0.0, lambda_c: 0.0, recovery_b: 0.0, recovery_c: 0.0, funding_spread: 0.0, r }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("recovery_b", self.recovery_b), ("recovery_c", self.recovery_c)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidModel(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("lambda_b", self.lambda_b),
            ("lambda_c", self.lambda_c),
            ("funding_spread", self.funding_spread),
            ("r", self.r),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!("{name} must be finite")));
            }
        }
        if self.lambda_b < 0.0 || self.lambda_c < 0.0 {
            return Err(Error::InvalidModel("hazard rates must be non-negative".into()));
        }
        Ok(())
    }

    /// Slope of `f` on the negative half-line.
    pub fn negative_slope(&self) -> f64 {
        self.lambda_b * (1.0 - self.recovery_b)
    }

    /// Slope of `f` on the positive half-line.
    pub fn positive_slope(&self) -> f64 {
        self.lambda_c * (1.0 - self.recovery_c) + self.funding_spread
    }

    /// Exponential decay rate of a non-negative price relative to the
    /// risk-free one: `lambda_B (1 - R_B) + lambda_C (1 - R_C)`.
    pub fn adjustment_rate(&self) -> f64 {
        self.lambda_b * (1.0 - self.recovery_b) + self.lambda_c * (1.0 - self.recovery_c)
    }

    pub fn is_risk_free(&self) -> bool {
        self.negative_slope() == 0.0 && self.positive_slope() == 0.0
    }
}

/// `f(v) = lambda_B (1 - R_B) min(v, 0) + (lambda_C (1 - R_C) + s_F) max(v, 0)`.
pub fn source_term(v: f64, xva: &XvaParams) -> f64 {
    source_generic(v, xva)
}

pub fn source_generic<S: Scalar>(v: S, xva: &XvaParams) -> S {
    v.min0() * xva.negative_slope() + v.max0() * xva.positive_slope()
}

/// Derivative of [`source_term`], zero at the kink.
pub fn source_slope(v: f64, xva: &XvaParams) -> f64 {
    if v > 0.0 {
        xva.positive_slope()
    } else if v < 0.0 {
        xva.negative_slope()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OptionType {
    Call,
    Put,
}

impl OptionType {
    /// `+1` for calls, `-1` for puts.
    pub fn alpha(self) -> f64 {
        match self {
            OptionType::Call => 1.0,
            OptionType::Put => -1.0,
        }
    }

    pub fn from_alpha(alpha: f64) -> Option<Self> {
        if alpha == 1.0 {
            Some(OptionType::Call)
        } else if alpha == -1.0 {
            Some(OptionType::Put)
        } else {
            None
        }
    }
}

/// One-asset Black-Scholes dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BsParams {
    pub sigma: f64,
    /// Repo rate minus dividend yield.
    pub r_repo: f64,
}

/// Two correlated Black-Scholes assets.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BasketParams {
    pub sigma: [f64; 2],
    pub r_repo: [f64; 2],
    pub rho: f64,
}

impl BasketParams {
    /// The single-asset dynamics of asset `i`.
    pub fn asset(&self, i: usize) -> BsParams {
        BsParams { sigma: self.sigma[i], r_repo: self.r_repo[i] }
    }
}

/// Heston stochastic variance dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HestonParams {
    pub r_repo: f64,
    /// Mean reversion speed.
    pub kappa: f64,
    /// Long-run variance.
    pub eta: f64,
    /// Volatility of variance.
    pub sigma: f64,
    pub rho: f64,
}

impl HestonParams {
    /// `2 kappa eta > sigma^2`.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.eta > self.sigma * self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Market {
    Bs1d(BsParams),
    BasketAverage(BasketParams),
    BasketWorstOf(BasketParams),
    Heston(HestonParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModelKind {
    Bs1d,
    BasketAverage,
    BasketWorstOf,
    Heston,
}

impl Market {
    pub fn kind(&self) -> ModelKind {
        match self {
            Market::Bs1d(_) => ModelKind::Bs1d,
            Market::BasketAverage(_) => ModelKind::BasketAverage,
            Market::BasketWorstOf(_) => ModelKind::BasketWorstOf,
            Market::Heston(_) => ModelKind::Heston,
        }
    }

    pub fn spatial_dim(&self) -> usize {
        match self {
            Market::Bs1d(_) => 1,
            _ => 2,
        }
    }
}

/// How boundary residuals are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ResidualMode {
    /// The model equation restricted to each boundary face.
    #[default]
    PdeBoundary,
    /// The boundary condition itself (Dirichlet value or derivative).
    Classic,
}

/// A fully specified pricing problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub market: Market,
    pub option: OptionType,
    pub strike: f64,
    pub xva: XvaParams,
    pub domain: DomainBox,
    pub mode: ResidualMode,
    /// Heston only: on `nu = nu_max` drop the `d/dnu` and `d2/dS dnu` terms
    /// (the Neumann condition) instead of the `S` diffusion term.
    pub strict_neumann: bool,
}

/// What a region's residual penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// The model equation with the listed jet components removed (bit mask
    /// over [`JetLayout`] indices).
    Pde { removed: u32 },
    /// `u - g` with `g` the known boundary value.
    Dirichlet,
    /// `d2u/dx_i^2`.
    Curvature(usize),
    /// `du/dx_i`.
    Slope(usize),
    /// `u - payoff`.
    Initial,
}

/// Residual at one point, linear in the jet apart from the source term:
/// `sum_c coeffs[c] J[c] + source * f(J.value) - target`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResidual {
    pub coeffs: Vec<f64>,
    pub source: bool,
    pub target: f64,
}

impl PointResidual {
    pub fn apply<S: Scalar>(&self, jet: &Jet2<S>, xva: &XvaParams) -> S {
        let mut acc = jet.value.constant_like(-self.target);
        for (c, &a) in self.coeffs.iter().enumerate() {
            if a != 0.0 {
                acc = acc + jet.component(c) * a;
            }
        }
        if self.source {
            acc = acc + source_generic(jet.value, xva);
        }
        acc
    }
}

/// The operator of every region of a model's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionResidualSet {
    pub ops: Vec<(RegionId, OperatorKind)>,
}

impl RegionResidualSet {
    pub fn get(&self, id: RegionId) -> Result<OperatorKind> {
        self.ops.iter().find(|(r, _)| *r == id).map(|(_, op)| *op).ok_or_else(|| Error::UnknownRegion(format!("{id}")))
    }
}

impl ModelSpec {
    pub fn new(market: Market, option: OptionType, strike: f64, xva: XvaParams, domain: DomainBox) -> Result<Self> {
        let spec =
            ModelSpec { market, option, strike, xva, domain, mode: ResidualMode::PdeBoundary, strict_neumann: false };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_mode(mut self, mode: ResidualMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_strict_neumann(mut self, on: bool) -> Self {
        self.strict_neumann = on;
        self
    }

    pub fn with_xva(mut self, xva: XvaParams) -> Self {
        self.xva = xva;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.market.kind()
    }

    pub fn alpha(&self) -> f64 {
        self.option.alpha()
    }

    pub fn spatial_dim(&self) -> usize {
        self.market.spatial_dim()
    }

    pub fn layout(&self) -> JetLayout {
        JetLayout::new(self.spatial_dim())
    }

    pub fn validate(&self) -> Result<()> {
        self.xva.validate()?;
        self.domain.validate()?;
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::InvalidModel(format!("strike must be positive, got {}", self.strike)));
        }
        if self.domain.spatial_dim() != self.spatial_dim() {
            return Err(Error::InvalidModel(format!(
                "{:?} needs {} spatial axes, domain has {}",
                self.kind(),
                self.spatial_dim(),
                self.domain.spatial_dim()
            )));
        }
        if self.domain.axes.iter().any(|a| a.min != 0.0) {
            return Err(Error::InvalidModel("every spatial axis must start at 0".into()));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} must be positive, got {v}")))
            }
        };
        let correlation = |v: f64| {
            if (-1.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("correlation must lie in [-1, 1], got {v}")))
            }
        };
        match &self.market {
            Market::Bs1d(p) => positive("sigma", p.sigma)?,
            Market::BasketAverage(p) | Market::BasketWorstOf(p) => {
                positive("sigma_1", p.sigma[0])?;
                positive("sigma_2", p.sigma[1])?;
                correlation(p.rho)?;
            }
            Market::Heston(p) => {
                positive("kappa", p.kappa)?;
                positive("eta", p.eta)?;
                positive("sigma", p.sigma)?;
                correlation(p.rho)?;
            }
        }
        Ok(())
    }

    /// Whether the variance process stays strictly positive.
    pub fn feller_check(&self) -> Result<bool> {
        match &self.market {
            Market::Heston(p) => Ok(p.feller_satisfied()),
            _ => Err(Error::WrongModelKind("feller_check needs a Heston model")),
        }
    }

    /// Payoff at spatial coordinates `x`.
    pub fn payoff(&self, x: &[f64]) -> f64 {
        let alpha = self.alpha();
        let k = self.strike;
        let underlying = match &self.market {
            Market::Bs1d(_) | Market::Heston(_) => x[0],
            Market::BasketAverage(_) => 0.5 * (x[0] + x[1]),
            Market::BasketWorstOf(_) => x[0].min(x[1]),
        };
        (alpha * (underlying - k)).max(0.0)
    }

    /// Value on the `S = 0` face for payoffs that no longer depend on the
    /// remaining coordinates: the discounted strike for puts, zero for calls.
    pub fn left_dirichlet(&self, t: f64) -> f64 {
        0.5 * (self.alpha() - 1.0).abs() * self.strike * math::exp(-(self.xva.r + self.xva.adjustment_rate()) * t)
    }

    /// Diffusion `a_ij` (symmetric, operator `sum_ij a_ij d_ij`) and drift
    /// `b_i` at spatial point `x`.
    pub fn coefficients(&self, x: &[f64]) -> ([[f64; 2]; 2], [f64; 2]) {
        let mut a = [[0.0; 2]; 2];
        let mut b = [0.0; 2];
        match &self.market {
            Market::Bs1d(p) => {
                a[0][0] = 0.5 * p.sigma * p.sigma * x[0] * x[0];
                b[0] = p.r_repo * x[0];
            }
            Market::BasketAverage(p) | Market::BasketWorstOf(p) => {
                for i in 0..2 {
                    a[i][i] = 0.5 * p.sigma[i] * p.sigma[i] * x[i] * x[i];
                    b[i] = p.r_repo[i] * x[i];
                }
                let mixed = 0.5 * p.rho * p.sigma[0] * p.sigma[1] * x[0] * x[1];
                a[0][1] = mixed;
                a[1][0] = mixed;
            }
            Market::Heston(p) => {
                let (s, nu) = (x[0], x[1]);
                a[0][0] = 0.5 * s * s * nu;
                a[1][1] = 0.5 * p.sigma * p.sigma * nu;
                let mixed = 0.5 * p.rho * p.sigma * s * nu;
                a[0][1] = mixed;
                a[1][0] = mixed;
                b[0] = p.r_repo * s;
                b[1] = p.kappa * (p.eta - nu);
            }
        }
        (a, b)
    }

    /// Coefficients of the full model equation over the jet components.
    pub fn pde_coeffs(&self, x: &[f64]) -> Vec<f64> {
        let layout = self.layout();
        let d = layout.dim();
        let (a, b) = self.coefficients(x);
        let mut c = vec![0.0; layout.len()];
        c[JetLayout::VALUE] = self.xva.r;
        c[JetLayout::D_T] = 1.0;
        for i in 0..d {
            c[layout.d_x(i)] = -b[i];
        }
        for (i, j) in layout.pairs() {
            c[layout.d_xx(i, j)] = if i == j { -a[i][i] } else { -2.0 * a[i][j] };
        }
        c
    }

    /// The operator attached to each region of this model's grid.
    pub fn residuals(&self) -> RegionResidualSet {
        let d = self.spatial_dim();
        let mut ops = vec![(RegionId::Interior, OperatorKind::Pde { removed: 0 })];
        for i in 0..d {
            ops.push((RegionId::Lower(i), self.lower_operator(i)));
        }
        for i in 0..d {
            ops.push((RegionId::Upper(i), self.upper_operator(i)));
        }
        ops.push((RegionId::Initial, OperatorKind::Initial));
        RegionResidualSet { ops }
    }

    fn lower_operator(&self, axis: usize) -> OperatorKind {
        let pde = OperatorKind::Pde { removed: 0 };
        match (self.mode, &self.market) {
            (ResidualMode::PdeBoundary, _) => pde,
            // the variance floor keeps its degenerate equation in both modes
            (ResidualMode::Classic, Market::Heston(_)) if axis == 1 => pde,
            (ResidualMode::Classic, _) => OperatorKind::Dirichlet,
        }
    }

    fn upper_operator(&self, axis: usize) -> OperatorKind {
        let layout = self.layout();
        let heston_variance_cap = matches!(self.market, Market::Heston(_)) && axis == 1;
        match self.mode {
            ResidualMode::Classic if heston_variance_cap => OperatorKind::Slope(1),
            ResidualMode::Classic => OperatorKind::Curvature(axis),
            ResidualMode::PdeBoundary if heston_variance_cap && self.strict_neumann => {
                OperatorKind::Pde { removed: (1 << layout.d_x(1)) | (1 << layout.d_xx(0, 1)) }
            }
            // on the variance cap the printed residual drops the S diffusion
            ResidualMode::PdeBoundary if heston_variance_cap => OperatorKind::Pde { removed: 1 << layout.d_xx(0, 0) },
            ResidualMode::PdeBoundary => OperatorKind::Pde { removed: 1 << layout.d_xx(axis, axis) },
        }
    }

    /// Known boundary value used by classic Dirichlet residuals on the lower
    /// face of `axis`.
    pub fn dirichlet_value(&self, axis: usize, point: &[f64]) -> f64 {
        let t = point[0];
        match &self.market {
            Market::BasketAverage(p) => {
                // with S_axis = 0 the payoff is half a vanilla on the other
                // asset struck at 2K
                let other = 1 - axis;
                let s = point[1 + other];
                0.5 * reference::risky_bs_price_with(t, s, 2.0 * self.strike, self.option, p.asset(other), &self.xva)
            }
            _ => self.left_dirichlet(t),
        }
    }

    /// The residual of region `id` at space-time `point`, as coefficients.
    pub fn point_residual(&self, id: RegionId, point: &[f64]) -> Result<PointResidual> {
        let op = self.residuals().get(id)?;
        Ok(self.point_residual_for(id, op, point))
    }

    pub(crate) fn point_residual_for(&self, id: RegionId, op: OperatorKind, point: &[f64]) -> PointResidual {
        let layout = self.layout();
        let unit = |c: usize| {
            let mut v = vec![0.0; layout.len()];
            v[c] = 1.0;
            v
        };
        match op {
            OperatorKind::Pde { removed } => {
                let mut coeffs = self.pde_coeffs(&point[1..]);
                for (c, v) in coeffs.iter_mut().enumerate() {
                    if removed & (1 << c) != 0 {
                        *v = 0.0;
                    }
                }
                PointResidual { coeffs, source: true, target: 0.0 }
            }
            OperatorKind::Dirichlet => {
                let axis = match id {
                    RegionId::Lower(a) | RegionId::Upper(a) => a,
                    _ => 0,
                };
                PointResidual {
                    coeffs: unit(JetLayout::VALUE),
                    source: false,
                    target: self.dirichlet_value(axis, point),
                }
            }
            OperatorKind::Curvature(i) => PointResidual { coeffs: unit(layout.d_xx(i, i)), source: false, target: 0.0 },
            OperatorKind::Slope(i) => PointResidual { coeffs: unit(layout.d_x(i)), source: false, target: 0.0 },
            OperatorKind::Initial => {
                PointResidual { coeffs: unit(JetLayout::VALUE), source: false, target: self.payoff(&point[1..]) }
            }
        }
    }

    /// Residual of region `id` for a field whose jet at `point` is `jet`.
    pub fn residual<S: Scalar>(&self, id: RegionId, point: &[f64], jet: &Jet2<S>) -> Result<S> {
        if jet.dim != self.spatial_dim() {
            return Err(Error::DimensionMismatch { expected: self.spatial_dim(), found: jet.dim });
        }
        Ok(self.point_residual(id, point)?.apply(jet, &self.xva))
    }
}

/// Parameter sets used by the bundled experiments.
pub mod presets {
    use super::*;
    use crate::geometry::Axis;
    use alloc::vec;

    /// One-asset put: `K = 15`, `T = 5`, `sigma = 0.25`, `r = 0.03`,
    /// `r_R = 0.015`, `S_max = 4K`, `lambda_C = 0.05`, recoveries `0.4`.
    pub fn bs1d_put(lambda_b: f64) -> ModelSpec {
        let k = 15.0;
        ModelSpec::new(
            Market::Bs1d(BsParams { sigma: 0.25, r_repo: 0.015 }),
            OptionType::Put,
            k,
            XvaParams::with_default_funding(lambda_b, 0.05, 0.4, 0.4, 0.03),
            DomainBox::new(5.0, vec![Axis::new("S", 0.0, 4.0 * k)]).expect("valid domain"),
        )
        .expect("valid preset")
    }

    /// Same market with `lambda_C = 0`, i.e. no source term when `lambda_b = 0`.
    pub fn bs1d_put_risk_free() -> ModelSpec {
        bs1d_put(0.0).with_xva(XvaParams::risk_free(0.03))
    }

    /// Two-asset basket put: `K = 50`, `T = 1`, `r = 0.03`,
    /// `sigma = (0.25, 0.15)`, `r_R = (0.015, 0.022)`, `rho = -0.65`,
    /// `lambda_C = 0.07`, `R_B = 0.5`, `R_C = 0.3`, `S_max = 4K`.
    pub fn basket_put(worst_of: bool, lambda_b: f64) -> ModelSpec {
        let k = 50.0;
        let p = BasketParams { sigma: [0.25, 0.15], r_repo: [0.015, 0.022], rho: -0.65 };
        ModelSpec::new(
            if worst_of { Market::BasketWorstOf(p) } else { Market::BasketAverage(p) },
            OptionType::Put,
            k,
            XvaParams::with_default_funding(lambda_b, 0.07, 0.5, 0.3, 0.03),
            DomainBox::new(1.0, vec![Axis::new("S1", 0.0, 4.0 * k), Axis::new("S2", 0.0, 4.0 * k)])
                .expect("valid domain"),
        )
        .expect("valid preset")
    }

    /// Heston put: `K = 1`, `T = 2`, `r = r_R = 0.025`, `kappa = 1.5`,
    /// `eta = 0.04`, `sigma = 0.3`, `rho = -0.9`, `lambda_C = 0.04`,
    /// recoveries `0.3`, `S_max = 4K`, `nu_max = 3`.
    pub fn heston_put(lambda_b: f64) -> ModelSpec {
        let k = 1.0;
        ModelSpec::new(
            Market::Heston(HestonParams { r_repo: 0.025, kappa: 1.5, eta: 0.04, sigma: 0.3, rho: -0.9 }),
            OptionType::Put,
            k,
            XvaParams::with_default_funding(lambda_b, 0.04, 0.3, 0.3, 0.025),
            DomainBox::new(2.0, vec![Axis::new("S", 0.0, 4.0 * k), Axis::new("nu", 0.0, 3.0)]).expect("valid domain"),
        )
        .expect("valid preset")
    }
}
