//! Plot-ready CSV outputs. Floats use Rust's shortest round-trip format, so
//! identical results always produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{FitReport, SweepResult};
use crate::error::{Error, Result};
use crate::irr::{irr_density, IrrSeries};
use crate::timeseries::MonthlyTimeSeries;
use crate::uptake::UptakeResult;

pub const MEAN_IRR_FILE: &str = "mean_irr.csv";
pub const DENSITY_FILE: &str = "irr_density.csv";
pub const UPTAKE_FILE: &str = "uptake.csv";
pub const UPTAKE_EXPONENTIAL_FILE: &str = "uptake_exponential.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.csv";
pub const MANIFEST_FILE: &str = "run_manifest.txt";

pub fn sweep_file_name(parameter: &str) -> String {
    format!("sweep_{parameter}.csv")
}

fn write_with(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_mean_irr(path: impl AsRef<Path>, irr: &IrrSeries) -> Result<()> {
    write_with(path.as_ref(), |out| {
        writeln!(out, "month,mean_irr,captured_mass")?;
        for ((month, mean), captured) in irr.mean_irr.iter().zip(irr.captured_mass.values()) {
            writeln!(out, "{month},{mean},{captured}")?;
        }
        Ok(())
    })
}

pub fn write_density(path: impl AsRef<Path>, irr: &IrrSeries) -> Result<()> {
    write_with(path.as_ref(), |out| {
        writeln!(out, "month,r,mass")?;
        for table in &irr.tables {
            for (r, mass) in irr_density(table) {
                writeln!(out, "{},{r},{mass}", table.month)?;
            }
        }
        Ok(())
    })
}

pub fn write_uptake(path: impl AsRef<Path>, result: &UptakeResult, observed: &MonthlyTimeSeries) -> Result<()> {
    result.d_model.ensure_same_range(observed, "uptake export")?;
    write_with(path.as_ref(), |out| {
        writeln!(out, "month,pi,u,U,d_model,d_observed")?;
        let rows = result
            .pi
            .iter()
            .zip(result.u.values())
            .zip(result.utility.values())
            .zip(result.d_model.values())
            .zip(observed.values());
        for (((((month, pi), u), big_u), d), obs) in rows {
            writeln!(out, "{month},{pi},{u},{big_u},{d},{obs}")?;
        }
        Ok(())
    })
}

pub fn write_fit_report(path: impl AsRef<Path>, reports: &[FitReport]) -> Result<()> {
    write_with(path.as_ref(), |out| {
        writeln!(out, "model,scale,pearson_r,significant,total_modeled,total_observed")?;
        for r in reports {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.model,
                opt(r.scale),
                r.pearson_r,
                r.significant,
                opt(r.total_modeled),
                r.total_observed
            )?;
        }
        Ok(())
    })
}

pub fn write_sweep(path: impl AsRef<Path>, sweep: &SweepResult) -> Result<()> {
    write_with(path.as_ref(), |out| {
        writeln!(out, "param_value,month,d_model")?;
        for point in &sweep.points {
            for (month, d) in point.result.d_model.iter() {
                writeln!(out, "{},{month},{d}", point.value)?;
            }
        }
        Ok(())
    })
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_with(path.as_ref(), |out| out.write_all(text.as_bytes()))
}
