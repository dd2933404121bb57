#![allow(dead_code)]

use std::path::PathBuf;

use pv_uptake::cashflow::CashFlowProfile;
use pv_uptake::sampling::{MarketSeries, SystemSample};
use pv_uptake::scenario::ScenarioInputs;
use pv_uptake::timeseries::{MonthIndex, MonthRange, MonthlyTimeSeries, Unit};

pub fn bundled_data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/germany")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn month(s: &str) -> MonthIndex {
    s.parse().unwrap()
}

/// NPV by direct summation with `powi`, independent of the library path.
pub fn npv_direct(outlay: f64, flows: &[f64], r: f64) -> f64 {
    -outlay
        + flows
            .iter()
            .enumerate()
            .map(|(i, f)| f / (1.0 + r).powi(i as i32 + 1))
            .sum::<f64>()
}

/// IRR by bisection on `[lo, hi]`; `None` unless NPV(lo) > 0 >= NPV(hi).
pub fn irr_bisection(profile: &CashFlowProfile, lo: f64, hi: f64) -> Option<f64> {
    let f = |r: f64| npv_direct(profile.initial_outlay, &profile.net_flows, r);
    let (mut a, mut b) = (lo, hi);
    if !(f(a) > 0.0 && f(b) <= 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Level-annuity system: 10 kWp (no size scaling), no degradation, no O&M,
/// all energy fed in, so year flows equal `flow` and the outlay is `outlay`.
pub fn annuity_sample(outlay: f64, flow: f64) -> SystemSample {
    SystemSample {
        size_kwp: 10.0,
        specific_cost_eur_per_kwp: outlay / 10.0,
        performance_ratio: 1.0,
        self_consumption: 0.0,
        degradation: 0.0,
        inclination_factor: 1.0,
        irradiance_kwh_per_m2_yr: 1000.0,
        om_share: 0.0,
        retail_price_eur_per_kwh: 0.0,
        tariff_eur_per_kwh: flow / 10_000.0,
        sc_tariff_eur_per_kwh: 0.0,
        lifetime_years: 20,
    }
}

/// Annual flow that gives a 10 000 outlay the IRR `r` over 20 years.
pub fn annuity_flow_for_irr(r: f64) -> f64 {
    10_000.0 * r / (1.0 - (1.0 + r).powi(-20))
}

pub struct MarketLevels {
    pub tariff: f64,
    pub sc_tariff: f64,
    pub retail: f64,
    pub cost: f64,
    pub bond: f64,
}

pub const BASE_LEVELS: MarketLevels = MarketLevels {
    tariff: 0.43,
    sc_tariff: 0.0,
    retail: 0.22,
    cost: 3000.0,
    bond: 0.03,
};

/// Constant market except the tariff, which is given month by month.
pub fn scenario_with_tariffs(tariffs: &[f64], observed: &[f64], levels: &MarketLevels) -> ScenarioInputs {
    assert_eq!(tariffs.len(), observed.len());
    let start = month("2010-01");
    let range = MonthRange::new(start, start.offset(tariffs.len() as i64 - 1)).unwrap();
    let constant = |v: f64, unit: Unit| MonthlyTimeSeries::constant(range, v, unit).unwrap();
    ScenarioInputs::from_series(
        MarketSeries {
            tariff: MonthlyTimeSeries::new(start, tariffs.to_vec(), Unit::EurPerKwh).unwrap(),
            sc_tariff: constant(levels.sc_tariff, Unit::EurPerKwh),
            retail_price: constant(levels.retail, Unit::EurPerKwh),
            specific_cost: constant(levels.cost, Unit::EurPerKwp),
        },
        constant(levels.bond, Unit::Fraction),
        MonthlyTimeSeries::new(start, observed.to_vec(), Unit::Count).unwrap(),
    )
    .unwrap()
}

pub const STEP_MONTHS: usize = 24;
/// Index of the first month after the tariff cut.
pub const STEP_AT: usize = 12;

/// 24 months, tariff cut from 0.43 to 0.36 at month 12; observed deployment
/// peaks just before the cut and slumps right after it.
pub fn step_scenario() -> ScenarioInputs {
    let tariffs: Vec<f64> = (0..STEP_MONTHS).map(|t| if t < STEP_AT { 0.43 } else { 0.36 }).collect();
    let observed: Vec<f64> = (0..STEP_MONTHS)
        .map(|t| match t {
            t if t == STEP_AT - 1 => 3000.0,
            t if t == STEP_AT => 300.0,
            t if t < STEP_AT => 1000.0,
            _ => 700.0,
        })
        .collect();
    scenario_with_tariffs(&tariffs, &observed, &BASE_LEVELS)
}

pub fn peak_to_mean(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    max / mean
}

/// Share of total deployment falling into the months flagged `high`.
pub fn high_share(values: &[f64], high: &[bool]) -> f64 {
    let total: f64 = values.iter().sum();
    let part: f64 = values.iter().zip(high).filter(|(_, &h)| h).map(|(v, _)| v).sum();
    part / total
}

/// Parses a CSV into rows of fields, header excluded.
pub fn read_rows(path: &std::path::Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}
