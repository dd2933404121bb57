//! Deterministic project economics of one candidate system.

use crate::error::{Error, Result};
use crate::sampling::SystemSample;

/// Size scaling exponent for specific investment cost, relative to a
/// 10 kWp reference system.
pub const COST_SCALING_EXPONENT: f64 = -0.063;
pub const REFERENCE_SIZE_KWP: f64 = 10.0;

/// Initial outlay and yearly net flows for years `1..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct CashFlowProfile {
    pub initial_outlay: f64,
    pub net_flows: Vec<f64>,
}

impl CashFlowProfile {
    pub fn new(initial_outlay: f64, net_flows: Vec<f64>) -> Result<Self> {
        if !(initial_outlay.is_finite() && initial_outlay >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "initial outlay must be finite and >= 0, got {initial_outlay}"
            )));
        }
        if net_flows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("net flows must be finite".into()));
        }
        Ok(Self {
            initial_outlay,
            net_flows,
        })
    }

    pub fn years(&self) -> usize {
        self.net_flows.len()
    }
}

/// `s * I0 * (s / 10)^-0.063`.
pub fn investment_cost(size_kwp: f64, specific_cost: f64) -> Result<f64> {
    if !(size_kwp > 0.0 && size_kwp.is_finite()) || !(specific_cost > 0.0 && specific_cost.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "size and specific cost must be positive, got s={size_kwp}, I0={specific_cost}"
        )));
    }
    Ok(size_kwp * specific_cost * (size_kwp / REFERENCE_SIZE_KWP).powf(COST_SCALING_EXPONENT))
}

/// Output in year `year` (1-based), degraded from the first year on.
pub fn annual_energy(sample: &SystemSample, year: usize) -> Result<f64> {
    if year < 1 || year > sample.lifetime_years {
        return Err(Error::InvalidArgument(format!(
            "year {year} outside 1..={}",
            sample.lifetime_years
        )));
    }
    Ok(energy_unchecked(sample, year))
}

fn energy_unchecked(sample: &SystemSample, year: usize) -> f64 {
    sample.size_kwp
        * sample.inclination_factor
        * sample.performance_ratio
        * sample.irradiance_kwh_per_m2_yr
        * (1.0 - sample.degradation).powi(year as i32)
}

/// Revenue plus avoided grid purchases for `energy` kWh. When the feed-in
/// tariff beats self-consumption, everything is fed in.
pub fn positive_cash_flow(sample: &SystemSample, energy: f64) -> f64 {
    let f = sample.tariff_eur_per_kwh;
    let own = sample.retail_price_eur_per_kwh + sample.sc_tariff_eur_per_kwh;
    if f > own {
        energy * f
    } else {
        let sc = sample.self_consumption;
        energy * (f * (1.0 - sc) + own * sc)
    }
}

pub fn build_profile(sample: &SystemSample) -> Result<CashFlowProfile> {
    let outlay = investment_cost(sample.size_kwp, sample.specific_cost_eur_per_kwp)?;
    let om = outlay * sample.om_share;
    let flows = (1..=sample.lifetime_years)
        .map(|n| positive_cash_flow(sample, energy_unchecked(sample, n)) - om)
        .collect();
    CashFlowProfile::new(outlay, flows)
}

/// `-C0 + sum_n flow_n / (1 + r)^n`.
pub fn npv(profile: &CashFlowProfile, rate: f64) -> Result<f64> {
    if !(rate > -1.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("discount rate must exceed -1, got {rate}")));
    }
    let factor = 1.0 / (1.0 + rate);
    let mut discount = 1.0;
    let mut total = -profile.initial_outlay;
    for flow in &profile.net_flows {
        discount *= factor;
        total += flow * discount;
    }
    Ok(total)
}
