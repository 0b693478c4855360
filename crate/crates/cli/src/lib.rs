//! Configuration-driven front end for the `davydov` binary: single runs,
//! sweeps, spectrum comparison and the canned table/figure reproductions.

pub mod config;
pub mod error;
pub mod runner;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use davydov::spectrum::{compare, write_peak_report, DEFAULT_PEAK_THRESHOLD};
use davydov::{Method, SpectrumResult};

pub use config::RunConfig;
pub use error::CliError;
pub use sweep::Scale;

#[derive(Debug, Parser)]
#[command(name = "davydov", version, about = "Qubit emission spectra: multi-D1 dynamics, TRWA and RWA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; every key is optional.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `run.output_dir`.
    #[arg(long, global = true, value_name = "PATH")]
    pub output_dir: Option<PathBuf>,
    /// Comma-separated subset of multid1, trwa, rwa.
    #[arg(long, global = true, value_name = "NAME[,NAME...]", value_delimiter = ',', value_parser = parse_method)]
    pub method: Vec<Method>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Preset size for `table1` and `figures`.
    #[arg(long, global = true, value_enum)]
    pub scale: Option<Scale>,
    /// Overrides `ansatz.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured methods once.
    Run,
    /// Run the `[sweep]` grid of the configuration.
    Sweep,
    /// Peak positions and widths of spectrum CSV files.
    Compare {
        #[arg(required = true, value_name = "SPECTRUM_CSV")]
        files: Vec<PathBuf>,
        /// Peaks are local maxima above this fraction of the global maximum.
        #[arg(long, default_value_t = DEFAULT_PEAK_THRESHOLD)]
        threshold: f64,
    },
    /// Maximal deviation over the twelve reference cells.
    Table1,
    /// Spectra of all methods over the reference cells, with peak tables.
    Figures,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: davydov::Error| e.to_string())
}

impl Cli {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.output_dir {
            cfg.run.output_dir = d.clone();
        }
        if !self.method.is_empty() {
            cfg.run.methods = self.method.clone();
        }
        if let Some(s) = self.seed {
            cfg.ansatz.seed = s;
        }
        Ok(cfg)
    }

    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn scale(&self) -> Result<Scale, CliError> {
        self.scale
            .ok_or_else(|| CliError::Validation("--scale {desk|paper} is required".into()))
    }
}

/// Execute a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run => {
            let cfg = cli.config()?;
            let report = runner::run(&cfg, &cfg.run.output_dir)?;
            print_run(&report);
            report.failure().map_or(Ok(()), Err)
        }
        Command::Sweep => {
            let cfg = cli.config()?;
            let report = sweep::sweep(&cfg, &cfg.run.output_dir, cli.jobs())?;
            finish_sweep(&report, &cfg.run.output_dir)
        }
        Command::Table1 => {
            let mut cfg = cli.config()?;
            if cli.method.is_empty() {
                cfg.run.methods = vec![Method::MultiD1];
            }
            let cfg = sweep::table1_config(&cfg, cli.scale()?);
            let report = sweep::sweep(&cfg, &cfg.run.output_dir, cli.jobs())?;
            finish_sweep(&report, &cfg.run.output_dir)
        }
        Command::Figures => {
            let cfg = cli.config()?;
            let report = sweep::figures(&cfg, cli.scale()?, &cfg.run.output_dir, cli.jobs())?;
            finish_sweep(&report, &cfg.run.output_dir)
        }
        Command::Compare { files, threshold } => {
            let out = cli.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            compare_files(files, *threshold, &out)
        }
    }
}

fn print_run(report: &runner::RunReport) {
    for o in &report.manifest.outcomes {
        match (&o.error, &o.dynamics) {
            (Some(e), _) => println!("{:8} FAILED {e}", o.method.name()),
            (None, Some(d)) => println!(
                "{:8} sigma2_max={:.3e} accepted={} peaks={}",
                o.method.name(),
                d.sigma2_max,
                d.accepted,
                format_peaks(&o.peaks)
            ),
            (None, None) => println!("{:8} peaks={}", o.method.name(), format_peaks(&o.peaks)),
        }
    }
    println!("output: {}", report.dir.display());
}

fn format_peaks(peaks: &[davydov::Peak]) -> String {
    let parts: Vec<String> = peaks
        .iter()
        .map(|p| match p.fwhm() {
            Some(w) => format!("{:.4}(fwhm {:.4})", p.position, w),
            None => format!("{:.4}", p.position),
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn finish_sweep(report: &sweep::SweepReport, dir: &Path) -> Result<(), CliError> {
    let table = std::fs::read_to_string(dir.join("table.csv"))?;
    print!("{table}");
    let failed: Vec<String> = report
        .points
        .iter()
        .filter(|p| p.failed())
        .map(|p| sweep::point_label(&p.point))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("failed points: {}", failed.join(", "))))
    }
}

pub fn compare_files(files: &[PathBuf], threshold: f64, out: &Path) -> Result<(), CliError> {
    let spectra = files
        .iter()
        .map(|f| Ok((f.display().to_string(), SpectrumResult::read_csv(f)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let reports = compare(&spectra, threshold)?;
    std::fs::create_dir_all(out)?;
    for r in &reports {
        if r.peaks.is_empty() {
            eprintln!("warning: {} has no peaks above {threshold} of its maximum", r.label);
        }
        println!("{} ({}): {}", r.label, r.method, format_peaks(&r.peaks));
    }
    write_peak_report(&reports, &out.join("compare.csv"))?;
    Ok(())
}

/// Parse arguments, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
