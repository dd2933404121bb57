//! Calibration of the deployment scale, goodness of fit, and sensitivity
//! sweeps over the behavioural parameters.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::irr::{mean_irr_series, IrrSeries};
use crate::scenario::{ScenarioConfig, ScenarioInputs};
use crate::timeseries::MonthlyTimeSeries;
use crate::uptake::{deployment, exp_utility, prospect_utility, risk_adjusted_irr, BehavioralParams, UptakeResult};

/// Two-sided significance threshold for correlation p-values.
pub const SIGNIFICANCE_LEVEL: f64 = 0.001;

/// Ratio of totals so that modelled and observed deployment sum to the same
/// number of installations.
pub fn calibrate_scale(utility: &MonthlyTimeSeries, observed: &MonthlyTimeSeries, clamp: bool) -> Result<f64> {
    utility.ensure_same_range(observed, "utility vs observed")?;
    let modelled: f64 = if clamp {
        utility.values().iter().map(|&u| u.max(0.0)).sum()
    } else {
        utility.sum()
    };
    let total = observed.sum();
    if !(modelled > 0.0) {
        return Err(Error::ZeroTotal("modelled utility"));
    }
    if !(total > 0.0) {
        return Err(Error::ZeroTotal("observed deployment"));
    }
    Ok(total / modelled)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(a: &MonthlyTimeSeries, b: &MonthlyTimeSeries) -> Result<f64> {
    a.ensure_same_range(b, "pearson")?;
    pearson_slices(a.values(), b.values())
}

fn pearson_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    // Relative guard: values that are constant up to rounding count as constant.
    let tiny = |ss: f64, xs: &[f64]| {
        let scale = xs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ss <= (scale * 1e-12).powi(2) * n as f64
    };
    if tiny(saa, a) {
        return Err(Error::ZeroVariance("first series"));
    }
    if tiny(sbb, b) {
        return Err(Error::ZeroVariance("second series"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of `r` over `n` points via the t-transform with
/// `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub model: String,
    /// Calibrated scale; `None` for raw features that are not deployment models.
    pub scale: Option<f64>,
    pub pearson_r: f64,
    pub significant: bool,
    pub total_modeled: Option<f64>,
    pub total_observed: f64,
}

impl FitReport {
    fn new(model: &str, modelled: &MonthlyTimeSeries, observed: &MonthlyTimeSeries, scale: Option<f64>) -> Result<Self> {
        let r = pearson(modelled, observed)?;
        Ok(Self {
            model: model.to_string(),
            scale,
            pearson_r: r,
            significant: correlation_p_value(r, modelled.len()) < SIGNIFICANCE_LEVEL,
            total_modeled: scale.map(|_| modelled.sum()),
            total_observed: observed.sum(),
        })
    }
}

/// Exponential-model uptake: `d = c · u`.
pub fn exponential_model(pi: &MonthlyTimeSeries, observed: &MonthlyTimeSeries, params: &BehavioralParams) -> Result<UptakeResult> {
    let u = exp_utility(pi, params.kappa)?;
    let scale = calibrate_scale(&u, observed, false)?;
    Ok(UptakeResult {
        pi: pi.clone(),
        d_model: deployment(&u, scale, false)?,
        utility: u.clone(),
        u,
        scale,
    })
}

/// Prospect-model uptake: `d = k · max(U, 0)`.
pub fn prospect_model(pi: &MonthlyTimeSeries, observed: &MonthlyTimeSeries, params: &BehavioralParams) -> Result<UptakeResult> {
    let u = exp_utility(pi, params.kappa)?;
    let utility = prospect_utility(&u, params)?;
    let scale = calibrate_scale(&utility, observed, true)?;
    Ok(UptakeResult {
        pi: pi.clone(),
        d_model: deployment(&utility, scale, true)?,
        utility,
        u,
        scale,
    })
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub irr: IrrSeries,
    pub pi: MonthlyTimeSeries,
    pub exponential: UptakeResult,
    pub prospect: UptakeResult,
    /// Mean IRR, risk-adjusted IRR, exponential and prospect model, in that order.
    pub reports: Vec<FitReport>,
}

impl ScenarioResult {
    pub fn report(&self, model: &str) -> Option<&FitReport> {
        self.reports.iter().find(|r| r.model == model)
    }
}

pub const MODEL_MEAN_IRR: &str = "mean_irr";
pub const MODEL_RISK_ADJUSTED: &str = "risk_adjusted_irr";
pub const MODEL_EXPONENTIAL: &str = "exponential";
pub const MODEL_PROSPECT: &str = "prospect";

/// Both uptake models and their fit reports from a precomputed mean-IRR series.
pub fn fit_models(
    irr: IrrSeries,
    inputs: &ScenarioInputs,
    params: &BehavioralParams,
) -> Result<ScenarioResult> {
    let observed = &inputs.observed;
    let pi = risk_adjusted_irr(&irr.mean_irr, &inputs.bond_yield)?;
    let exponential = exponential_model(&pi, observed, params)?;
    let prospect = prospect_model(&pi, observed, params)?;
    let reports = vec![
        FitReport::new(MODEL_MEAN_IRR, &irr.mean_irr, observed, None)?,
        FitReport::new(MODEL_RISK_ADJUSTED, &pi, observed, None)?,
        FitReport::new(MODEL_EXPONENTIAL, &exponential.d_model, observed, Some(exponential.scale))?,
        FitReport::new(MODEL_PROSPECT, &prospect.d_model, observed, Some(prospect.scale))?,
    ];
    Ok(ScenarioResult {
        irr,
        pi,
        exponential,
        prospect,
        reports,
    })
}

/// Runs the full pipeline on `inputs` restricted to the configured range.
pub fn run_scenario(config: &ScenarioConfig, inputs: &ScenarioInputs) -> Result<ScenarioResult> {
    config.validate()?;
    let range = config.resolve_range(inputs.range)?;
    let inputs = inputs.restrict(range)?;
    let irr = mean_irr_series(&config.specs, &inputs.market, range, config.n_samples, config.seed, &config.grid)?;
    fit_models(irr, &inputs, &config.params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Alpha,
    Lambda,
    Kappa,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Lambda => "lambda",
            SweepParameter::Kappa => "kappa",
        }
    }

    fn apply(self, base: &BehavioralParams, value: f64) -> Result<BehavioralParams> {
        let mut p = *base;
        match self {
            SweepParameter::Alpha => p.alpha = value,
            SweepParameter::Lambda => p.lambda = value,
            SweepParameter::Kappa => p.kappa = value,
        }
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParameter::Alpha),
            "lambda" => Ok(SweepParameter::Lambda),
            "kappa" => Ok(SweepParameter::Kappa),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep parameter {other:?}, expected one of alpha, lambda, kappa"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub result: UptakeResult,
    /// `None` when the modelled series has zero variance.
    pub pearson_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
}

/// Prospect-model sweep over one behavioural parameter, reusing one
/// mean-IRR series. Each point is calibrated on its own.
pub fn sweep_from_irr(
    mean_irr: &MonthlyTimeSeries,
    inputs: &ScenarioInputs,
    base: &BehavioralParams,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    if let Some(w) = values.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!(
            "sweep values must be strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    let pi = risk_adjusted_irr(mean_irr, &inputs.bond_yield)?;
    let points = values
        .iter()
        .map(|&value| {
            let params = parameter.apply(base, value)?;
            let result = prospect_model(&pi, &inputs.observed, &params)?;
            let pearson_r = match pearson(&result.d_model, &inputs.observed) {
                Ok(r) => Some(r),
                Err(Error::ZeroVariance(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepPoint { value, result, pearson_r })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { parameter, points })
}

pub fn sensitivity_sweep(
    config: &ScenarioConfig,
    inputs: &ScenarioInputs,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<SweepResult> {
    config.validate()?;
    for &v in values {
        parameter.apply(&config.params, v)?;
    }
    let range = config.resolve_range(inputs.range)?;
    let inputs = inputs.restrict(range)?;
    let irr = mean_irr_series(&config.specs, &inputs.market, range, config.n_samples, config.seed, &config.grid)?;
    sweep_from_irr(&irr.mean_irr, &inputs, &config.params, parameter, values)
}
