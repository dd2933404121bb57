//! Random-input model: parameter distributions and generation of candidate
//! PV systems for one installation month.
//!
//! Every draw comes from its own ChaCha8 stream addressed by
//! `(seed, sample index, parameter)`, so sample `i` never depends on how the
//! index range is partitioned across threads. The month enters only through
//! the market values read from the input series; the underlying random
//! numbers are shared across months (common random numbers), so months with
//! identical market conditions produce identical populations.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution as _, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::timeseries::{MonthIndex, MonthlyTimeSeries};

/// Economic lifetime in years; also the length of every cash-flow profile.
pub const LIFETIME_YEARS: usize = 20;

/// Upper bound on resampling attempts for zero-truncated normals.
const MAX_TRUNCATION_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parameter {
    Size,
    SpecificCost,
    PerformanceRatio,
    SelfConsumption,
    Degradation,
    InclinationFactor,
    Irradiance,
    OmShare,
    RetailPrice,
    Lifetime,
}

impl Parameter {
    pub const ALL: [Parameter; 10] = [
        Parameter::Size,
        Parameter::SpecificCost,
        Parameter::PerformanceRatio,
        Parameter::SelfConsumption,
        Parameter::Degradation,
        Parameter::InclinationFactor,
        Parameter::Irradiance,
        Parameter::OmShare,
        Parameter::RetailPrice,
        Parameter::Lifetime,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Size => "size_kwp",
            Parameter::SpecificCost => "specific_cost",
            Parameter::PerformanceRatio => "performance_ratio",
            Parameter::SelfConsumption => "self_consumption",
            Parameter::Degradation => "degradation",
            Parameter::InclinationFactor => "inclination_factor",
            Parameter::Irradiance => "irradiance",
            Parameter::OmShare => "om_share",
            Parameter::RetailPrice => "retail_price",
            Parameter::Lifetime => "lifetime",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                let legal: Vec<_> = Parameter::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown parameter {name:?}, expected one of {}",
                    legal.join(", ")
                ))
            })
    }

    /// Closed support `[lo, hi]` every drawn value must respect. Size is
    /// additionally required to be strictly positive.
    pub fn support(self) -> (f64, f64) {
        match self {
            Parameter::Size => (0.0, 10.0),
            Parameter::PerformanceRatio
            | Parameter::SelfConsumption
            | Parameter::InclinationFactor => (0.0, 1.0),
            Parameter::Degradation => (0.0, 0.02),
            Parameter::Lifetime => (LIFETIME_YEARS as f64, LIFETIME_YEARS as f64),
            Parameter::SpecificCost
            | Parameter::Irradiance
            | Parameter::OmShare
            | Parameter::RetailPrice => (0.0, f64::INFINITY),
        }
    }

    /// Parameters whose mean is read from a monthly input series.
    pub fn is_series_backed(self) -> bool {
        matches!(self, Parameter::SpecificCost | Parameter::RetailPrice)
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    Constant(f64),
    /// Half-open `(min, max]`.
    Uniform { min: f64, max: f64 },
    /// Zero-truncated normal with absolute parameters.
    Normal { mean: f64, sd: f64 },
    /// Zero-truncated normal centred on a series value, `sd = rel_sd * mean`.
    NormalRelative { rel_sd: f64 },
    /// PERT beta from a three-point estimate.
    BetaMmm { min: f64, mode: f64, max: f64 },
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Distribution::Constant(v) => write!(f, "constant,{v},,"),
            Distribution::Uniform { min, max } => write!(f, "uniform,{min},{max},"),
            Distribution::Normal { mean, sd } => write!(f, "normal,{mean},{sd},"),
            Distribution::NormalRelative { rel_sd } => write!(f, "normal_rel,{rel_sd},,"),
            Distribution::BetaMmm { min, mode, max } => write!(f, "beta_mmm,{min},{mode},{max}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterSpec {
    pub parameter: Parameter,
    pub distribution: Distribution,
}

impl ParameterSpec {
    pub fn new(parameter: Parameter, distribution: Distribution) -> Result<Self> {
        let spec = Self {
            parameter,
            distribution,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `name,kind,p1,p2,p3` fields; unused trailing fields may be empty.
    pub fn parse(fields: &[&str]) -> Result<Self> {
        let field = |i: usize| fields.get(i).copied().unwrap_or("").trim();
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("p{} is not a number: {:?}", i - 1, field(i))))
        };
        let parameter = Parameter::from_name(field(0))?;
        let distribution = match field(1) {
            "constant" => Distribution::Constant(num(2)?),
            "uniform" => Distribution::Uniform { min: num(2)?, max: num(3)? },
            "normal" => Distribution::Normal { mean: num(2)?, sd: num(3)? },
            "normal_rel" => Distribution::NormalRelative { rel_sd: num(2)? },
            "beta_mmm" => Distribution::BetaMmm {
                min: num(2)?,
                mode: num(3)?,
                max: num(4)?,
            },
            other => return Err(Error::InvalidParameter(format!("unknown distribution kind {other:?}"))),
        };
        Self::new(parameter, distribution)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.parameter.support();
        let p = self.parameter;
        let bad = |msg: String| Err(Error::InvalidParameter(format!("{p}: {msg}")));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());

        if p.is_series_backed() != matches!(self.distribution, Distribution::NormalRelative { .. }) {
            return if p.is_series_backed() {
                bad("series-backed parameter must use kind normal_rel".into())
            } else {
                bad("kind normal_rel is only valid for specific_cost and retail_price".into())
            };
        }
        match self.distribution {
            Distribution::Constant(v) => {
                if !finite(&[v]) || v < lo || v > hi || (p == Parameter::Size && v <= 0.0) {
                    return bad(format!("constant {v} outside support [{lo}, {hi}]"));
                }
            }
            Distribution::Uniform { min, max } => {
                if !finite(&[min, max]) || min >= max {
                    return bad(format!("uniform needs min < max, got ({min}, {max})"));
                }
                if min < lo || max > hi {
                    return bad(format!("uniform ({min}, {max}] outside support [{lo}, {hi}]"));
                }
            }
            Distribution::Normal { mean, sd } => {
                if !finite(&[mean, sd]) || sd < 0.0 || mean < 0.0 {
                    return bad(format!("normal needs mean >= 0 and sd >= 0, got ({mean}, {sd})"));
                }
                if hi.is_finite() {
                    return bad("normal is only valid for parameters without an upper bound".into());
                }
            }
            Distribution::NormalRelative { rel_sd } => {
                if !rel_sd.is_finite() || rel_sd < 0.0 {
                    return bad(format!("relative sd must be >= 0, got {rel_sd}"));
                }
            }
            Distribution::BetaMmm { min, mode, max } => {
                if !finite(&[min, mode, max]) || !(min <= mode && mode <= max) {
                    return bad(format!("beta_mmm needs min <= mode <= max, got ({min}, {mode}, {max})"));
                }
                if min < lo || max > hi {
                    return bad(format!("beta_mmm [{min}, {max}] outside support [{lo}, {hi}]"));
                }
                if p == Parameter::Size && min <= 0.0 {
                    return bad("size must be strictly positive".into());
                }
            }
        }
        Ok(())
    }
}

/// PERT beta distribution from `(min, mode, max)` with shape constant 4.
#[derive(Clone, Copy, Debug)]
pub struct BetaMmm {
    min: f64,
    range: f64,
    beta: Option<Beta<f64>>,
}

impl BetaMmm {
    pub fn new(min: f64, mode: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && mode.is_finite() && max.is_finite()) || !(min <= mode && mode <= max) {
            return Err(Error::InvalidParameter(format!(
                "beta_mmm needs min <= mode <= max, got ({min}, {mode}, {max})"
            )));
        }
        let range = max - min;
        if range == 0.0 {
            return Ok(Self { min, range, beta: None });
        }
        let (a, b) = pert_shape(min, mode, max);
        let beta = Beta::new(a, b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self {
            min,
            range,
            beta: Some(beta),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.beta {
            None => self.min,
            Some(beta) => {
                let x = beta.sample(rng);
                (self.min + self.range * x).clamp(self.min, self.min + self.range)
            }
        }
    }
}

/// Beta shape parameters `(1 + 4(mode-min)/(max-min), 1 + 4(max-mode)/(max-min))`.
pub fn pert_shape(min: f64, mode: f64, max: f64) -> (f64, f64) {
    let range = max - min;
    (1.0 + 4.0 * (mode - min) / range, 1.0 + 4.0 * (max - mode) / range)
}

pub fn sample_beta_mmm<R: Rng + ?Sized>(min: f64, mode: f64, max: f64, rng: &mut R) -> Result<f64> {
    Ok(BetaMmm::new(min, mode, max)?.sample(rng))
}

fn truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> Result<f64> {
    if sd == 0.0 && mean >= 0.0 {
        return Ok(mean);
    }
    for _ in 0..MAX_TRUNCATION_ATTEMPTS {
        let z: f64 = rng.sample(StandardNormal);
        let x = mean + sd * z;
        if x >= 0.0 {
            return Ok(x);
        }
    }
    Err(Error::Invariant(format!(
        "normal({mean}, {sd}) truncated at zero did not yield a value"
    )))
}

#[derive(Clone, Copy, Debug)]
enum Sampler {
    Constant(f64),
    Uniform { min: f64, max: f64 },
    Normal { mean: f64, sd: f64 },
    NormalRelative { rel_sd: f64 },
    Beta(BetaMmm),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, series_mean: f64, rng: &mut R) -> Result<f64> {
        match *self {
            Sampler::Constant(v) => Ok(v),
            Sampler::Uniform { min, max } => {
                let u: f64 = rng.random();
                Ok(max - (max - min) * u)
            }
            Sampler::Normal { mean, sd } => truncated_normal(mean, sd, rng),
            Sampler::NormalRelative { rel_sd } => truncated_normal(series_mean, rel_sd * series_mean, rng),
            Sampler::Beta(b) => Ok(b.sample(rng)),
        }
    }
}

/// A full set of input specifications, one per [`Parameter`].
#[derive(Clone, Debug)]
pub struct ParameterSet {
    specs: [ParameterSpec; 10],
    samplers: [Sampler; 10],
}

impl ParameterSet {
    /// Input distributions of the reference study.
    pub fn reference() -> Self {
        use Distribution::*;
        let table = [
            (Parameter::Size, Uniform { min: 0.0, max: 10.0 }),
            (Parameter::SpecificCost, NormalRelative { rel_sd: 0.10 }),
            (Parameter::PerformanceRatio, BetaMmm { min: 0.75, mode: 0.84, max: 0.90 }),
            (Parameter::SelfConsumption, BetaMmm { min: 0.0, mode: 0.05, max: 0.20 }),
            (Parameter::Degradation, BetaMmm { min: 0.0, mode: 0.005, max: 0.02 }),
            (Parameter::InclinationFactor, BetaMmm { min: 0.25, mode: 0.98, max: 1.00 }),
            (Parameter::Irradiance, BetaMmm { min: 1141.0, mode: 1253.0, max: 1403.0 }),
            (Parameter::OmShare, Normal { mean: 0.015, sd: 0.0015 }),
            (Parameter::RetailPrice, NormalRelative { rel_sd: 0.05 }),
            (Parameter::Lifetime, Constant(LIFETIME_YEARS as f64)),
        ];
        let specs = table.map(|(parameter, distribution)| {
            ParameterSpec::new(parameter, distribution).expect("reference specs are valid")
        });
        Self::from_specs(specs).expect("reference specs are valid")
    }

    fn from_specs(specs: [ParameterSpec; 10]) -> Result<Self> {
        let mut samplers = [Sampler::Constant(0.0); 10];
        for (i, spec) in specs.iter().enumerate() {
            debug_assert_eq!(spec.parameter.index(), i);
            samplers[i] = match spec.distribution {
                Distribution::Constant(v) => Sampler::Constant(v),
                Distribution::Uniform { min, max } => Sampler::Uniform { min, max },
                Distribution::Normal { mean, sd } => Sampler::Normal { mean, sd },
                Distribution::NormalRelative { rel_sd } => Sampler::NormalRelative { rel_sd },
                Distribution::BetaMmm { min, mode, max } => Sampler::Beta(BetaMmm::new(min, mode, max)?),
            };
        }
        Ok(Self { specs, samplers })
    }

    pub fn get(&self, parameter: Parameter) -> &ParameterSpec {
        &self.specs[parameter.index()]
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    pub fn with(mut self, spec: ParameterSpec) -> Result<Self> {
        spec.validate()?;
        self.specs[spec.parameter.index()] = spec;
        Self::from_specs(self.specs)
    }

    /// Applies overrides from a `name,kind,p1,p2,p3` CSV on top of `self`.
    pub fn with_overrides_from(mut self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => Error::Io {
                    path: path.to_path_buf(),
                    source,
                },
                other => Error::InvalidParameter(format!("{}: {other:?}", path.display())),
            })?;
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let expected = ["name", "kind", "p1", "p2", "p3"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(parse_err(1, format!("header must be {:?}", expected.join(","))));
        }
        for record in reader.records() {
            let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let fields: Vec<&str> = record.iter().collect();
            let spec = ParameterSpec::parse(&fields).map_err(|e| parse_err(line, e.to_string()))?;
            self = self.with(spec)?;
        }
        Ok(self)
    }

    /// One `name,kind,p1,p2,p3` line per parameter.
    pub fn describe(&self) -> Vec<String> {
        self.specs
            .iter()
            .map(|s| format!("{},{}", s.parameter, s.distribution))
            .collect()
    }
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self::reference()
    }
}

/// Market conditions for one installation month.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonthInputs {
    pub tariff: f64,
    pub sc_tariff: f64,
    pub retail_price: f64,
    pub specific_cost: f64,
}

/// The monthly series the sampler reads market values from.
#[derive(Clone, Debug)]
pub struct MarketSeries {
    pub tariff: MonthlyTimeSeries,
    pub sc_tariff: MonthlyTimeSeries,
    pub retail_price: MonthlyTimeSeries,
    pub specific_cost: MonthlyTimeSeries,
}

impl MarketSeries {
    pub fn at(&self, month: MonthIndex) -> Result<MonthInputs> {
        let get = |s: &MonthlyTimeSeries, name: &str| {
            s.get(month).ok_or_else(|| Error::OutOfCoverage {
                series: name.to_string(),
                month,
            })
        };
        Ok(MonthInputs {
            tariff: get(&self.tariff, "feed_in_tariff")?,
            sc_tariff: get(&self.sc_tariff, "fit_self_consumption")?,
            retail_price: get(&self.retail_price, "retail_price")?,
            specific_cost: get(&self.specific_cost, "system_cost")?,
        })
    }
}

/// One concrete candidate system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSample {
    pub size_kwp: f64,
    /// Specific cost of a 10 kWp reference system; size scaling is applied
    /// by the cash-flow model.
    pub specific_cost_eur_per_kwp: f64,
    pub performance_ratio: f64,
    pub self_consumption: f64,
    pub degradation: f64,
    pub inclination_factor: f64,
    pub irradiance_kwh_per_m2_yr: f64,
    pub om_share: f64,
    pub retail_price_eur_per_kwh: f64,
    pub tariff_eur_per_kwh: f64,
    pub sc_tariff_eur_per_kwh: f64,
    pub lifetime_years: usize,
}

impl SystemSample {
    /// Checks the domain invariants of a sample.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            (Parameter::Size, self.size_kwp),
            (Parameter::SpecificCost, self.specific_cost_eur_per_kwp),
            (Parameter::PerformanceRatio, self.performance_ratio),
            (Parameter::SelfConsumption, self.self_consumption),
            (Parameter::Degradation, self.degradation),
            (Parameter::InclinationFactor, self.inclination_factor),
            (Parameter::Irradiance, self.irradiance_kwh_per_m2_yr),
            (Parameter::OmShare, self.om_share),
            (Parameter::RetailPrice, self.retail_price_eur_per_kwh),
            (Parameter::Lifetime, self.lifetime_years as f64),
        ];
        for (p, v) in fields {
            let (lo, hi) = p.support();
            if !v.is_finite() || v < lo || v > hi || (p == Parameter::Size && v <= 0.0) {
                return Err(Error::Invariant(format!("sample {p} = {v} outside [{lo}, {hi}]")));
            }
        }
        for (name, v) in [("tariff", self.tariff_eur_per_kwh), ("sc_tariff", self.sc_tariff_eur_per_kwh)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invariant(format!("sample {name} = {v} is negative")));
            }
        }
        Ok(())
    }
}

/// Source of per-(sample, parameter) random streams for one seed.
#[derive(Clone, Debug)]
pub struct StreamSource {
    base: ChaCha8Rng,
}

impl StreamSource {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for one parameter of one sample. Streams are
    /// separated by the ChaCha stream id (sample) and a 2^40-word block of
    /// the counter space (parameter).
    pub fn stream(&self, sample: u64, parameter: Parameter) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(sample);
        rng.set_word_pos((parameter.index() as u128) << 40);
        rng
    }
}

/// Draws sample `index` for the given market conditions. A pure function of
/// `(specs, inputs, seed, index)`.
pub fn draw_sample(
    specs: &ParameterSet,
    inputs: &MonthInputs,
    streams: &StreamSource,
    index: u64,
) -> Result<SystemSample> {
    let draw = |p: Parameter, mean: f64| specs.samplers[p.index()].draw(mean, &mut streams.stream(index, p));
    let sample = SystemSample {
        size_kwp: draw(Parameter::Size, 0.0)?,
        specific_cost_eur_per_kwp: draw(Parameter::SpecificCost, inputs.specific_cost)?,
        performance_ratio: draw(Parameter::PerformanceRatio, 0.0)?,
        self_consumption: draw(Parameter::SelfConsumption, 0.0)?,
        degradation: draw(Parameter::Degradation, 0.0)?,
        inclination_factor: draw(Parameter::InclinationFactor, 0.0)?,
        irradiance_kwh_per_m2_yr: draw(Parameter::Irradiance, 0.0)?,
        om_share: draw(Parameter::OmShare, 0.0)?,
        retail_price_eur_per_kwh: draw(Parameter::RetailPrice, inputs.retail_price)?,
        tariff_eur_per_kwh: inputs.tariff,
        sc_tariff_eur_per_kwh: inputs.sc_tariff,
        lifetime_years: draw(Parameter::Lifetime, 0.0)? as usize,
    };
    Ok(sample)
}

/// Draws `n` candidate systems for `month`. Deterministic for a fixed seed
/// regardless of thread count.
pub fn sample_population(
    specs: &ParameterSet,
    month: MonthIndex,
    market: &MarketSeries,
    n: usize,
    seed: u64,
) -> Result<Vec<SystemSample>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let inputs = market.at(month)?;
    let streams = StreamSource::new(seed);
    (0..n as u64)
        .into_par_iter()
        .map(|i| draw_sample(specs, &inputs, &streams, i))
        .collect()
}
