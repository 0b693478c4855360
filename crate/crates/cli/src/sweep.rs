//! Parameter sweeps on a bounded worker pool, and the canned
//! `table1` / `figures` reproductions built on them.

use std::fs;
use std::path::{Path, PathBuf};

use davydov::spectrum::{write_peak_report, PeakReport};
use davydov::Method;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MultiplicityOverride, RunConfig, SweepPoint, SweepSpec};
use crate::error::CliError;
use crate::runner::{self, RunReport};

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub dir: PathBuf,
    /// `Err` if the point could not run at all.
    pub report: Result<RunReport, String>,
}

impl PointResult {
    pub fn sigma2_max(&self) -> Option<f64> {
        self.report.as_ref().ok()?.manifest.sigma2_max
    }

    pub fn failed(&self) -> bool {
        match &self.report {
            Ok(r) => r.failure().is_some(),
            Err(_) => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub points: Vec<PointResult>,
}

pub fn point_label(p: &SweepPoint) -> String {
    format!("lc{}_a{}", p.lambda_c, p.alpha)
}

/// Run every point of the sweep in `base.sweep` concurrently on `jobs`
/// workers. The multi-D1 method is always included since the table needs
/// the deviation. Failed points are recorded and the sweep carries on.
pub fn sweep(base: &RunConfig, dir: &Path, jobs: usize) -> Result<SweepReport, CliError> {
    base.validate()?;
    let spec = base
        .sweep
        .clone()
        .ok_or_else(|| CliError::Validation("sweep: the configuration has no [sweep] section".into()))?;
    if jobs == 0 {
        return Err(CliError::Validation("--jobs must be >= 1".into()));
    }
    let mut point_base = base.clone();
    if !point_base.run.methods.contains(&Method::MultiD1) {
        point_base.run.methods.insert(0, Method::MultiD1);
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join(runner::CONFIG_FILE), base.to_toml())?;
    let points = spec.points(base.ansatz.multiplicity);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {jobs} workers: {e}")))?;
    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let pdir = dir.join("points").join(point_label(p));
                let cfg = point_base.with_point(p);
                PointResult {
                    point: *p,
                    report: runner::run(&cfg, &pdir).map_err(|e| e.to_string()),
                    dir: pdir,
                }
            })
            .collect()
    });
    let report = SweepReport { spec, points: results };
    write_table(&report, &dir.join("table.csv"))?;
    write_long_table(&report, &dir.join("sweep.csv"))?;
    Ok(report)
}

fn cell(r: &PointResult) -> String {
    match r.sigma2_max() {
        Some(v) if !r.failed() => format!("{v:.4} [{}]", r.point.multiplicity),
        Some(v) => format!("{v:.4} [{}] failed", r.point.multiplicity),
        None => format!("failed [{}]", r.point.multiplicity),
    }
}

/// Rows `lambda_c`, columns `alpha`, cells `sigma2_max [M]`.
pub fn write_table(report: &SweepReport, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["lambda_c".to_string()];
    header.extend(report.spec.alpha.iter().map(|a| format!("alpha={a}")));
    w.write_record(&header)?;
    let n_alpha = report.spec.alpha.len();
    for (i, lc) in report.spec.lambda_c.iter().enumerate() {
        let mut row = vec![lc.to_string()];
        row.extend(report.points[i * n_alpha..(i + 1) * n_alpha].iter().map(cell));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LongRow {
    lambda_c: f64,
    alpha: f64,
    multiplicity: usize,
    sigma2_max: Option<f64>,
    accepted: Option<bool>,
    norm_drift: Option<f64>,
    energy_drift: Option<f64>,
    parity_drift: Option<f64>,
    spectrum_drift: Option<f64>,
    status: String,
}

/// One line per point with the full diagnostics.
pub fn write_long_table(report: &SweepReport, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.points {
        let dyn_ = r
            .report
            .as_ref()
            .ok()
            .and_then(|rep| rep.outcome(Method::MultiD1))
            .and_then(|o| o.dynamics.clone());
        let status = match &r.report {
            Err(e) => format!("error: {e}"),
            Ok(rep) => match rep.failure() {
                Some(e) => format!("failed: {e}"),
                None => "ok".into(),
            },
        };
        w.serialize(LongRow {
            lambda_c: r.point.lambda_c,
            alpha: r.point.alpha,
            multiplicity: r.point.multiplicity,
            sigma2_max: dyn_.as_ref().map(|d| d.sigma2_max),
            accepted: dyn_.as_ref().map(|d| d.accepted),
            norm_drift: dyn_.as_ref().map(|d| d.norm_drift),
            energy_drift: dyn_.as_ref().map(|d| d.energy_drift),
            parity_drift: dyn_.as_ref().map(|d| d.parity_drift),
            spectrum_drift: dyn_.as_ref().and_then(|d| d.spectrum_drift),
            status,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Nb = 100, t_f = 100: minutes on a laptop.
    Desk,
    /// Nb = 500, t_f = 300.
    Paper,
}

pub const TABLE_LAMBDA_C: [f64; 4] = [0.0, 0.1, 0.3, 0.5];
pub const TABLE_ALPHA: [f64; 3] = [0.05, 0.1, 0.2];
/// Multiplicity per cell, rows as `TABLE_LAMBDA_C`, columns as `TABLE_ALPHA`.
pub const TABLE_MULTIPLICITY: [[usize; 3]; 4] = [[3, 6, 10], [3, 6, 12], [4, 6, 12], [4, 10, 12]];

/// The deviation table: resonant cavity, twelve `(lambda_c, alpha)` cells.
pub fn table1_config(base: &RunConfig, scale: Scale) -> RunConfig {
    let mut c = base.clone();
    c.model.omega_c = c.model.omega0;
    let (nb, tf) = match scale {
        Scale::Desk => (100, 100.0),
        Scale::Paper => (500, 300.0),
    };
    c.bath.n_modes = nb;
    c.integrator.t_final = tf;
    let mut overrides = Vec::new();
    for (i, &lambda_c) in TABLE_LAMBDA_C.iter().enumerate() {
        for (j, &alpha) in TABLE_ALPHA.iter().enumerate() {
            overrides.push(MultiplicityOverride {
                lambda_c,
                alpha,
                multiplicity: TABLE_MULTIPLICITY[i][j],
            });
        }
    }
    c.sweep = Some(SweepSpec {
        lambda_c: TABLE_LAMBDA_C.to_vec(),
        alpha: TABLE_ALPHA.to_vec(),
        overrides,
    });
    c
}

/// Spectra of the three methods over the same twelve cells; one peak table
/// per cavity coupling, named `figure_<n>_peaks.csv` in `lambda_c` order.
pub fn figures(base: &RunConfig, scale: Scale, dir: &Path, jobs: usize) -> Result<SweepReport, CliError> {
    let cfg = table1_config(base, scale);
    let report = sweep(&cfg, dir, jobs)?;
    let n_alpha = report.spec.alpha.len();
    for (i, _) in report.spec.lambda_c.iter().enumerate() {
        let mut reports = Vec::new();
        for r in &report.points[i * n_alpha..(i + 1) * n_alpha] {
            let Ok(rep) = &r.report else { continue };
            for o in rep.manifest.outcomes.iter().filter(|o| o.ok()) {
                reports.push(PeakReport {
                    label: format!("alpha={}", r.point.alpha),
                    method: o.method,
                    peaks: o.peaks.clone(),
                });
            }
        }
        write_peak_report(&reports, &dir.join(format!("figure_{}_peaks.csv", i + 1)))?;
    }
    Ok(report)
}
