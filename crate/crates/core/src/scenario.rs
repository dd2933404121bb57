//! Run definition and the aligned input series a run consumes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::irr::DiscountGrid;
use crate::sampling::{MarketSeries, ParameterSet, ParameterSpec};
use crate::timeseries::{align, load_anchored_series, load_series, MonthIndex, MonthRange, MonthlyTimeSeries, Unit};
use crate::uptake::BehavioralParams;

pub const FEED_IN_TARIFF_FILE: &str = "feed_in_tariff.csv";
pub const SC_TARIFF_FILE: &str = "fit_self_consumption.csv";
pub const SYSTEM_COST_FILE: &str = "system_cost.csv";
pub const RETAIL_PRICE_FILE: &str = "retail_price.csv";
pub const BOND_YIELD_FILE: &str = "bond_yield.csv";
pub const OBSERVED_FILE: &str = "observed_deployment.csv";
pub const PARAMETERS_FILE: &str = "parameters.csv";

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 42;

/// Full definition of a run. Every field is written to the run manifest.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// `None` means the start of the common coverage of all inputs.
    pub start: Option<MonthIndex>,
    pub end: Option<MonthIndex>,
    pub n_samples: usize,
    pub seed: u64,
    pub grid: DiscountGrid,
    pub params: BehavioralParams,
    pub specs: ParameterSet,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data/germany"),
            out_dir: PathBuf::from("out"),
            start: None,
            end: None,
            n_samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            grid: DiscountGrid::default(),
            params: BehavioralParams::default(),
            specs: ParameterSet::reference(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            MonthRange::new(s, e)?;
        }
        self.params.validate()
    }

    /// Resolves the run range against the inputs' common coverage.
    pub fn resolve_range(&self, coverage: MonthRange) -> Result<MonthRange> {
        let range = MonthRange::new(self.start.unwrap_or(coverage.start), self.end.unwrap_or(coverage.end))?;
        if !coverage.contains_range(&range) {
            return Err(Error::Misaligned(format!(
                "requested range {range} is not covered by the inputs ({coverage})"
            )));
        }
        Ok(range)
    }

    /// Plain-text `key=value` manifest recording every effective setting.
    pub fn to_manifest(&self, range: MonthRange) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "data={}", self.data_dir.display());
        let _ = writeln!(out, "out={}", self.out_dir.display());
        let _ = writeln!(out, "start={}", range.start);
        let _ = writeln!(out, "end={}", range.end);
        let _ = writeln!(out, "samples={}", self.n_samples);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "grid={},{},{}", self.grid.r_min(), self.grid.r_max(), self.grid.step());
        let _ = writeln!(out, "kappa={}", self.params.kappa);
        let _ = writeln!(out, "alpha={}", self.params.alpha);
        let _ = writeln!(out, "lambda={}", self.params.lambda);
        for line in self.specs.describe() {
            let _ = writeln!(out, "param={line}");
        }
        out
    }

    /// Rebuilds a config from a manifest written by [`Self::to_manifest`].
    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut kappa = cfg.params.kappa;
        let mut alpha = cfg.params.alpha;
        let mut lambda = cfg.params.lambda;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::InvalidArgument(format!("manifest line {}: {msg}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("{key}: not a number: {v:?}")));
            match key {
                "data" => cfg.data_dir = PathBuf::from(value),
                "out" => cfg.out_dir = PathBuf::from(value),
                "start" => cfg.start = Some(value.parse()?),
                "end" => cfg.end = Some(value.parse()?),
                "samples" => cfg.n_samples = value.parse().map_err(|_| bad(format!("bad sample count {value:?}")))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad(format!("bad seed {value:?}")))?,
                "grid" => cfg.grid = parse_grid(value)?,
                "kappa" => kappa = num(value)?,
                "alpha" => alpha = num(value)?,
                "lambda" => lambda = num(value)?,
                "param" => {
                    let fields: Vec<&str> = value.split(',').collect();
                    cfg.specs = cfg.specs.with(ParameterSpec::parse(&fields)?)?;
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        cfg.params = BehavioralParams::new(kappa, alpha, lambda)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `rmin,rmax,step`.
pub fn parse_grid(text: &str) -> Result<DiscountGrid> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("grid must be rmin,rmax,step, got {text:?}")))?;
    match parts.as_slice() {
        [lo, hi, step] => DiscountGrid::new(*lo, *hi, *step),
        _ => Err(Error::InvalidArgument(format!("grid must be rmin,rmax,step, got {text:?}"))),
    }
}

/// All series a run needs, restricted to their common month range.
#[derive(Clone, Debug)]
pub struct ScenarioInputs {
    pub range: MonthRange,
    pub market: MarketSeries,
    pub bond_yield: MonthlyTimeSeries,
    pub observed: MonthlyTimeSeries,
}

/// Coverage of one input file, for reporting.
#[derive(Clone, Debug)]
pub struct Coverage {
    pub file: &'static str,
    pub range: MonthRange,
    pub unit: Unit,
}

impl ScenarioInputs {
    /// Aligns the given series to their common range.
    pub fn from_series(
        market: MarketSeries,
        bond_yield: MonthlyTimeSeries,
        observed: MonthlyTimeSeries,
    ) -> Result<Self> {
        let (range, mut aligned) = align(&[
            &market.tariff,
            &market.sc_tariff,
            &market.retail_price,
            &market.specific_cost,
            &bond_yield,
            &observed,
        ])?;
        let mut take = || aligned.remove(0);
        let market = MarketSeries {
            tariff: take(),
            sc_tariff: take(),
            retail_price: take(),
            specific_cost: take(),
        };
        Ok(Self {
            range,
            market,
            bond_yield: take(),
            observed: take(),
        })
    }

    /// Loads every input file from `dir` and aligns them.
    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, Vec<Coverage>)> {
        let dir = dir.as_ref();
        let tariff = load_series(dir.join(FEED_IN_TARIFF_FILE), Unit::EurPerKwh)?;
        let sc_tariff = load_series(dir.join(SC_TARIFF_FILE), Unit::EurPerKwh)?;
        let specific_cost = load_anchored_series(dir.join(SYSTEM_COST_FILE), Unit::EurPerKwp)?;
        let retail_price = load_series(dir.join(RETAIL_PRICE_FILE), Unit::EurPerKwh)?;
        let bond_yield = load_series(dir.join(BOND_YIELD_FILE), Unit::Fraction)?;
        let observed = load_series(dir.join(OBSERVED_FILE), Unit::Count)?;
        let coverage = [
            (FEED_IN_TARIFF_FILE, &tariff),
            (SC_TARIFF_FILE, &sc_tariff),
            (SYSTEM_COST_FILE, &specific_cost),
            (RETAIL_PRICE_FILE, &retail_price),
            (BOND_YIELD_FILE, &bond_yield),
            (OBSERVED_FILE, &observed),
        ]
        .into_iter()
        .map(|(file, s)| Coverage {
            file,
            range: s.range(),
            unit: s.unit(),
        })
        .collect();
        let inputs = Self::from_series(
            MarketSeries {
                tariff,
                sc_tariff,
                retail_price,
                specific_cost,
            },
            bond_yield,
            observed,
        )?;
        Ok((inputs, coverage))
    }

    /// Restriction to a sub-range of the aligned coverage.
    pub fn restrict(&self, range: MonthRange) -> Result<Self> {
        Ok(Self {
            range,
            market: MarketSeries {
                tariff: self.market.tariff.slice(range)?,
                sc_tariff: self.market.sc_tariff.slice(range)?,
                retail_price: self.market.retail_price.slice(range)?,
                specific_cost: self.market.specific_cost.slice(range)?,
            },
            bond_yield: self.bond_yield.slice(range)?,
            observed: self.observed.slice(range)?,
        })
    }
}

/// Reference parameters, overridden by `parameters.csv` in `dir` if present.
pub fn load_specs(dir: impl AsRef<Path>) -> Result<ParameterSet> {
    let path = dir.as_ref().join(PARAMETERS_FILE);
    if path.exists() {
        ParameterSet::reference().with_overrides_from(path)
    } else {
        Ok(ParameterSet::reference())
    }
}
