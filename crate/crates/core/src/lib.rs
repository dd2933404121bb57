//! Residential PV uptake model.
//!
//! Candidate rooftop systems are drawn per installation month and valued by
//! NPV over a discount-rate grid. The share of profitable systems yields a
//! mean IRR, which is turned into a risk-adjusted exponential utility and
//! then into a prospect-theory utility that reacts to announced changes in
//! profitability. Both utilities are scaled to observed installation counts
//! and scored by Pearson correlation.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cashflow;
pub mod cli;
pub mod error;
pub mod export;
pub mod irr;
pub mod sampling;
pub mod scenario;
pub mod timeseries;
pub mod uptake;

pub use error::{Error, Result};
