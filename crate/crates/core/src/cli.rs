//! Command-line driver: `simulate`, `sweep` and `validate`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{run_scenario, sensitivity_sweep, ScenarioResult, SweepParameter};
use crate::error::{Error, Result};
use crate::export;
use crate::scenario::{load_specs, parse_grid, ScenarioConfig, ScenarioInputs, DEFAULT_SAMPLES};
use crate::timeseries::{MonthIndex, MonthRange};
use crate::uptake::BehavioralParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pv-uptake", version, about = "Monte Carlo PV profitability and prospect-theory uptake model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate mean IRR and both uptake models, and score them against observed deployment.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the per-month IRR density.
        #[arg(long)]
        density: bool,
    },
    /// Re-run the prospect model over a list of values of one behavioural parameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// One of alpha, lambda, kappa.
        #[arg(long)]
        param: String,
        /// Comma-separated, strictly increasing values.
        #[arg(long)]
        values: String,
    },
    /// Check that every input file loads, aligns and covers the run range.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Directory holding the input CSV files [default: data/germany].
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// First month (YYYY-MM); defaults to the start of common coverage.
    #[arg(long)]
    pub start: Option<MonthIndex>,
    /// Last month (YYYY-MM); defaults to the end of common coverage.
    #[arg(long)]
    pub end: Option<MonthIndex>,
    /// Monte Carlo samples per month.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Discount grid as rmin,rmax,step.
    #[arg(long)]
    pub grid: Option<String>,
    /// Worker threads; 0 uses every core. Does not affect results.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Replay settings from a run manifest; explicit flags still win.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl CommonArgs {
    pub fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.manifest {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                ScenarioConfig::from_manifest(&text)?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(d) = &self.data {
            cfg.data_dir = d.clone();
        }
        if self.manifest.is_none() {
            cfg.specs = load_specs(&cfg.data_dir)?;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if self.start.is_some() {
            cfg.start = self.start;
        }
        if self.end.is_some() {
            cfg.end = self.end;
        }
        if let Some(n) = self.samples {
            cfg.n_samples = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(g) = &self.grid {
            cfg.grid = parse_grid(g)?;
        }
        cfg.params = BehavioralParams::new(
            self.kappa.unwrap_or(cfg.params.kappa),
            self.alpha.unwrap_or(cfg.params.alpha),
            self.lambda.unwrap_or(cfg.params.lambda),
        )?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Invariant(format!("cannot start thread pool: {e}")))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("unparsable sweep value {v:?}")))
        })
        .collect()
}

/// Writes every simulate output for `result` into `cfg.out_dir`.
pub fn write_simulation(cfg: &ScenarioConfig, range: MonthRange, result: &ScenarioResult, observed: &ScenarioInputs, density: bool) -> Result<()> {
    let out = &cfg.out_dir;
    create_dir(out)?;
    let observed = observed.observed.slice(range)?;
    export::write_mean_irr(out.join(export::MEAN_IRR_FILE), &result.irr)?;
    export::write_uptake(out.join(export::UPTAKE_FILE), &result.prospect, &observed)?;
    export::write_uptake(out.join(export::UPTAKE_EXPONENTIAL_FILE), &result.exponential, &observed)?;
    export::write_fit_report(out.join(export::FIT_REPORT_FILE), &result.reports)?;
    if density {
        export::write_density(out.join(export::DENSITY_FILE), &result.irr)?;
    }
    export::write_text(out.join(export::MANIFEST_FILE), &cfg.to_manifest(range))
}

fn simulate(common: &CommonArgs, density: bool, stdout: &mut dyn Write) -> Result<()> {
    let cfg = common.config()?;
    let (inputs, _) = ScenarioInputs::load(&cfg.data_dir)?;
    let range = cfg.resolve_range(inputs.range)?;
    if cfg.n_samples != DEFAULT_SAMPLES {
        let _ = writeln!(stdout, "note: running with samples={} (default {DEFAULT_SAMPLES})", cfg.n_samples);
    }
    let result = common.thread_pool()?.install(|| run_scenario(&cfg, &inputs))?;
    write_simulation(&cfg, range, &result, &inputs, density)?;

    let flagged = result.irr.captured_mass.values().iter().filter(|&&m| m < crate::irr::CAPTURED_MASS_WARN).count();
    if flagged > 0 {
        let _ = writeln!(stdout, "warning: {flagged} month(s) have IRR mass outside the discount grid");
    }
    let _ = writeln!(stdout, "range {range}, {} months, {} samples/month, seed {}", range.len(), cfg.n_samples, cfg.seed);
    for r in &result.reports {
        let scale = r.scale.map(|s| format!("{s:.1}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            stdout,
            "{:<18} r = {:.4}  significant = {:<5}  scale = {scale}",
            r.model, r.pearson_r, r.significant
        );
    }
    let _ = writeln!(stdout, "outputs written to {}", cfg.out_dir.display());
    Ok(())
}

fn sweep(common: &CommonArgs, param: &str, values: &str, stdout: &mut dyn Write) -> Result<()> {
    let parameter: SweepParameter = param.parse()?;
    let values = parse_values(values)?;
    let cfg = common.config()?;
    let (inputs, _) = ScenarioInputs::load(&cfg.data_dir)?;
    let range = cfg.resolve_range(inputs.range)?;
    let result = common
        .thread_pool()?
        .install(|| sensitivity_sweep(&cfg, &inputs, parameter, &values))?;
    create_dir(&cfg.out_dir)?;
    let file = export::sweep_file_name(parameter.name());
    export::write_sweep(cfg.out_dir.join(&file), &result)?;
    let listed: Vec<String> = values.iter().map(f64::to_string).collect();
    let manifest = format!("# sweep {}={}\n{}", parameter, listed.join(","), cfg.to_manifest(range));
    export::write_text(cfg.out_dir.join(format!("sweep_{}_manifest.txt", parameter.name())), &manifest)?;
    for point in &result.points {
        let r = point.pearson_r.map(|r| format!("{r:.4}")).unwrap_or_else(|| "undefined".into());
        let _ = writeln!(stdout, "{parameter} = {:<8} r = {r}  scale = {:.1}", point.value, point.result.scale);
    }
    let _ = writeln!(stdout, "wrote {}", cfg.out_dir.join(file).display());
    Ok(())
}

fn validate(common: &CommonArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = common.config()?;
    if !cfg.data_dir.is_dir() {
        return Err(Error::Io {
            path: cfg.data_dir.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        });
    }
    let (inputs, coverage) = ScenarioInputs::load(&cfg.data_dir)?;
    for c in &coverage {
        let _ = writeln!(stdout, "{:<26} {}  {:>4} months  {}", c.file, c.range, c.range.len(), c.unit);
    }
    let range = cfg.resolve_range(inputs.range)?;
    let _ = writeln!(stdout, "common coverage {}; run range {range} ({} months)", inputs.range, range.len());
    let _ = writeln!(stdout, "ok");
    Ok(())
}

/// Executes a parsed command, writing progress to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate { common, density } => simulate(common, *density, stdout),
        Command::Sweep { common, param, values } => sweep(common, param, values, stdout),
        Command::Validate { common } => validate(common, stdout),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_INTERNAL
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
