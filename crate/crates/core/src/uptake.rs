//! Behavioural layer: risk-adjusted IRR, exponential utility, the prospect
//! theory value function, prospect utility and modelled deployment.

use crate::error::{Error, Result};
use crate::timeseries::{MonthlyTimeSeries, Unit};

/// Largest |κ·π| accepted by [`exp_utility`].
pub const MAX_UTILITY_EXPONENT: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehavioralParams {
    /// Sensitivity of utility to risk-adjusted return (the economic lifetime).
    pub kappa: f64,
    /// Saturation exponent of the value function.
    pub alpha: f64,
    /// Loss-aversion factor.
    pub lambda: f64,
}

impl BehavioralParams {
    pub fn new(kappa: f64, alpha: f64, lambda: f64) -> Result<Self> {
        let p = Self { kappa, alpha, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        Ok(())
    }
}

impl Default for BehavioralParams {
    fn default() -> Self {
        Self {
            kappa: 20.0,
            alpha: 0.88,
            lambda: 2.25,
        }
    }
}

/// Modelled series for one model variant; all share one month range.
#[derive(Clone, Debug, PartialEq)]
pub struct UptakeResult {
    pub pi: MonthlyTimeSeries,
    pub u: MonthlyTimeSeries,
    /// Prospect utility; equals `u` for the exponential model.
    pub utility: MonthlyTimeSeries,
    pub d_model: MonthlyTimeSeries,
    pub scale: f64,
}

/// `π(t) = mean IRR(t) − ρ(t)`.
pub fn risk_adjusted_irr(mean_irr: &MonthlyTimeSeries, bond_yield: &MonthlyTimeSeries) -> Result<MonthlyTimeSeries> {
    mean_irr.ensure_same_range(bond_yield, "mean IRR vs bond yield")?;
    MonthlyTimeSeries::new(
        mean_irr.start(),
        mean_irr
            .values()
            .iter()
            .zip(bond_yield.values())
            .map(|(irr, rho)| irr - rho)
            .collect(),
        Unit::Fraction,
    )
}

/// `u(t) = exp(κ π(t))`.
pub fn exp_utility(pi: &MonthlyTimeSeries, kappa: f64) -> Result<MonthlyTimeSeries> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
    }
    if let Some((month, p)) = pi.iter().find(|(_, p)| (kappa * p).abs() > MAX_UTILITY_EXPONENT) {
        return Err(Error::Invariant(format!(
            "{month}: utility exponent {} exceeds {MAX_UTILITY_EXPONENT}",
            kappa * p
        )));
    }
    pi.map(Unit::Dimensionless, |p| (kappa * p).exp())
}

/// `x^α` for gains, `−λ(−x)^α` for losses.
pub fn value_function(x: f64, params: &BehavioralParams) -> f64 {
    if x > 0.0 {
        x.powf(params.alpha)
    } else {
        -params.lambda * (-x).powf(params.alpha)
    }
}

/// `U(t) = u(t) − v(u(t+1) − u(t)) + v(u(t) − u(t−1))`. The forward change
/// at the last month and the backward change at the first month are zero.
pub fn prospect_utility(u: &MonthlyTimeSeries, params: &BehavioralParams) -> Result<MonthlyTimeSeries> {
    let u_vals = u.values();
    if u_vals.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: u_vals.len(),
        });
    }
    let last = u_vals.len() - 1;
    let values = (0..=last)
        .map(|t| {
            let forward = if t < last { u_vals[t + 1] - u_vals[t] } else { 0.0 };
            let backward = if t > 0 { u_vals[t] - u_vals[t - 1] } else { 0.0 };
            u_vals[t] - value_function(forward, params) + value_function(backward, params)
        })
        .collect();
    MonthlyTimeSeries::new(u.start(), values, Unit::Dimensionless)
}

/// `scale · U(t)`, with non-positive utility mapped to zero deployment when
/// `clamp` is set.
pub fn deployment(utility: &MonthlyTimeSeries, scale: f64, clamp: bool) -> Result<MonthlyTimeSeries> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be > 0, got {scale}")));
    }
    utility.map(Unit::Count, |u| if clamp && u <= 0.0 { 0.0 } else { scale * u })
}
