//! Economic potential over a discount-rate grid, the IRR density derived
//! from it, and the mean IRR per installation month.
//!
//! The share of candidate systems with positive NPV, as a function of the
//! discount rate, falls from 1 towards 0; each system drops out at its own
//! IRR. Differencing that share along the grid gives the IRR distribution
//! without solving for any individual root.

use rayon::prelude::*;

use crate::cashflow::{build_profile, CashFlowProfile};
use crate::error::{Error, Result};
use crate::sampling::{draw_sample, MarketSeries, ParameterSet, StreamSource, SystemSample};
use crate::timeseries::{MonthIndex, MonthRange, MonthlyTimeSeries, Unit};

/// Captured mass below this triggers a warning: IRRs escape the grid.
pub const CAPTURED_MASS_WARN: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscountGrid {
    r_min: f64,
    r_max: f64,
    step: f64,
    cells: usize,
}

impl DiscountGrid {
    pub fn new(r_min: f64, r_max: f64, step: f64) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite() && step.is_finite()) {
            return Err(Error::InvalidArgument("grid bounds must be finite".into()));
        }
        if r_min <= -1.0 {
            return Err(Error::InvalidArgument(format!("grid minimum must exceed -1, got {r_min}")));
        }
        if r_min >= r_max || step <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs r_min < r_max and step > 0, got {r_min},{r_max},{step}"
            )));
        }
        let ratio = (r_max - r_min) / step;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "grid span {} is not a whole number of {step} steps",
                r_max - r_min
            )));
        }
        Ok(Self {
            r_min,
            r_max,
            step,
            cells: cells as usize,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of grid points (cells + 1).
    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rate(&self, k: usize) -> f64 {
        if k == self.cells {
            self.r_max
        } else {
            self.r_min + k as f64 * self.step
        }
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.rate(k))
    }

    /// Same bounds, half the step.
    pub fn refined(&self) -> Self {
        Self {
            step: self.step / 2.0,
            cells: self.cells * 2,
            ..*self
        }
    }
}

impl Default for DiscountGrid {
    /// -10 % to +15 % in steps of 0.5 %.
    fn default() -> Self {
        Self::new(-0.10, 0.15, 0.005).expect("default grid is valid")
    }
}

/// Discount factors `(1 + r_k)^-n` for every grid rate and year.
struct DiscountTable {
    factors: Vec<Vec<f64>>,
}

impl DiscountTable {
    fn new(grid: &DiscountGrid, years: usize) -> Self {
        let factors = grid
            .rates()
            .map(|r| {
                let base = 1.0 / (1.0 + r);
                let mut d = 1.0;
                (0..years)
                    .map(|_| {
                        d *= base;
                        d
                    })
                    .collect()
            })
            .collect();
        Self { factors }
    }

    fn count_positive(&self, profile: &CashFlowProfile, counts: &mut [u64]) -> Result<()> {
        for (count, factors) in counts.iter_mut().zip(&self.factors) {
            if factors.len() != profile.net_flows.len() {
                return Err(Error::Invariant(format!(
                    "profile has {} years, discount table {}",
                    profile.net_flows.len(),
                    factors.len()
                )));
            }
            let pv: f64 = profile.net_flows.iter().zip(factors).map(|(f, d)| f * d).sum();
            if pv - profile.initial_outlay > 0.0 {
                *count += 1;
            }
        }
        Ok(())
    }
}

/// Share of candidate systems with NPV > 0 at each grid rate for one month.
#[derive(Clone, Debug, PartialEq)]
pub struct EconomicPotentialTable {
    pub month: MonthIndex,
    pub grid: DiscountGrid,
    pub theta: Vec<f64>,
}

impl EconomicPotentialTable {
    fn from_counts(month: MonthIndex, grid: DiscountGrid, counts: &[u64], n: usize) -> Result<Self> {
        let theta: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self::new(month, grid, theta)
    }

    /// Validates range and monotonicity of the table.
    pub fn new(month: MonthIndex, grid: DiscountGrid, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != grid.len() {
            return Err(Error::Invariant(format!(
                "theta has {} entries for a {}-point grid",
                theta.len(),
                grid.len()
            )));
        }
        if let Some(v) = theta.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invariant(format!("{month}: economic potential {v} outside [0, 1]")));
        }
        if let Some(k) = (1..theta.len()).find(|&k| theta[k] > theta[k - 1]) {
            return Err(Error::Invariant(format!(
                "{month}: economic potential rises from {} to {} between r={} and r={}",
                theta[k - 1],
                theta[k],
                grid.rate(k - 1),
                grid.rate(k)
            )));
        }
        Ok(Self { month, grid, theta })
    }

    /// Pointwise average of tables over the same grid, weighted by sample count.
    pub fn mixture(parts: &[(&EconomicPotentialTable, usize)]) -> Result<Self> {
        let (first, _) = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("mixture of zero tables".into()))?;
        let total: usize = parts.iter().map(|(_, n)| n).sum();
        let mut theta = vec![0.0; first.theta.len()];
        for (table, n) in parts {
            if table.grid != first.grid {
                return Err(Error::InvalidArgument("mixture over different grids".into()));
            }
            for (acc, v) in theta.iter_mut().zip(&table.theta) {
                *acc += v * *n as f64 / total as f64;
            }
        }
        Self::new(first.month, first.grid, theta)
    }
}

/// Θ(r) over `grid` for a given sample set.
pub fn economic_potential(
    samples: &[SystemSample],
    grid: &DiscountGrid,
    month: MonthIndex,
) -> Result<EconomicPotentialTable> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("economic potential needs at least one sample".into()));
    }
    let years = samples[0].lifetime_years;
    let table = DiscountTable::new(grid, years);
    let counts = samples
        .par_iter()
        .try_fold(
            || vec![0u64; grid.len()],
            |mut counts, sample| {
                table.count_positive(&build_profile(sample)?, &mut counts)?;
                Ok(counts)
            },
        )
        .try_reduce(|| vec![0u64; grid.len()], |a, b| Ok(add_counts(a, b)))?;
    EconomicPotentialTable::from_counts(month, *grid, &counts, samples.len())
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

/// Draws `n` systems for `month` and tallies Θ without materialising the
/// sample vector. Identical to `economic_potential(sample_population(..))`.
pub fn economic_potential_for_month(
    specs: &ParameterSet,
    market: &MarketSeries,
    month: MonthIndex,
    n: usize,
    seed: u64,
    grid: &DiscountGrid,
) -> Result<EconomicPotentialTable> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let inputs = market.at(month)?;
    let streams = StreamSource::new(seed);
    let table = DiscountTable::new(grid, crate::sampling::LIFETIME_YEARS);
    let counts = (0..n as u64)
        .into_par_iter()
        .try_fold(
            || vec![0u64; grid.len()],
            |mut counts, i| {
                let sample = draw_sample(specs, &inputs, &streams, i)?;
                table.count_positive(&build_profile(&sample)?, &mut counts)?;
                Ok::<_, Error>(counts)
            },
        )
        .try_reduce(|| vec![0u64; grid.len()], |a, b| Ok(add_counts(a, b)))?;
    EconomicPotentialTable::from_counts(month, *grid, &counts, n)
}

/// Mass per grid cell: `Θ(r_k) - Θ(r_k + Δr)`, reported at the lower edge.
pub fn irr_density(table: &EconomicPotentialTable) -> Vec<(f64, f64)> {
    table
        .theta
        .windows(2)
        .enumerate()
        .map(|(k, w)| (table.grid.rate(k), w[0] - w[1]))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanIrr {
    pub mean: f64,
    /// `Θ(r_min) - Θ(r_max)`: share of systems whose IRR lies on the grid.
    pub captured_mass: f64,
}

impl MeanIrr {
    pub fn is_flagged(&self) -> bool {
        self.captured_mass < CAPTURED_MASS_WARN
    }
}

/// Stepwise `Σ r (Θ(r) - Θ(r + Δr))`.
pub fn mean_irr(table: &EconomicPotentialTable) -> MeanIrr {
    let mean = irr_density(table).iter().map(|(r, mass)| r * mass).sum();
    let captured_mass = table.theta[0] - table.theta[table.theta.len() - 1];
    let result = MeanIrr { mean, captured_mass };
    if result.is_flagged() {
        log::warn!(
            "{}: only {:.4} of IRR mass lies inside [{}, {}]",
            table.month,
            captured_mass,
            table.grid.r_min(),
            table.grid.r_max()
        );
    }
    result
}

/// Mean IRR per month plus the economic-potential tables it came from.
#[derive(Clone, Debug)]
pub struct IrrSeries {
    pub mean_irr: MonthlyTimeSeries,
    pub captured_mass: MonthlyTimeSeries,
    pub tables: Vec<EconomicPotentialTable>,
}

pub fn mean_irr_series(
    specs: &ParameterSet,
    market: &MarketSeries,
    range: MonthRange,
    n: usize,
    seed: u64,
    grid: &DiscountGrid,
) -> Result<IrrSeries> {
    let tables = range
        .months()
        .map(|month| economic_potential_for_month(specs, market, month, n, seed, grid))
        .collect::<Result<Vec<_>>>()?;
    let stats: Vec<MeanIrr> = tables.iter().map(mean_irr).collect();
    Ok(IrrSeries {
        mean_irr: MonthlyTimeSeries::new(range.start, stats.iter().map(|s| s.mean).collect(), Unit::Fraction)?,
        captured_mass: MonthlyTimeSeries::new(
            range.start,
            stats.iter().map(|s| s.captured_mass).collect(),
            Unit::Fraction,
        )?,
        tables,
    })
}
