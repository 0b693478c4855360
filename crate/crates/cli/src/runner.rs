//! Single runs: execute the requested methods and write every artifact plus
//! a manifest from which the run can be repeated.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use davydov::spectrum::write_peak_report;
use davydov::{
    initial_state, propagate, rwa_spectrum, trwa_spectrum, Error, Evaluation, Method, Peak,
    PeakReport, SpectrumResult, System, TrajectoryRecord,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{self, RunConfig};
use crate::error::CliError;

/// Runs with a larger maximal deviation are flagged as not accepted.
pub const ACCEPTANCE_SIGMA2: f64 = 1e-2;

pub const TRAJECTORY_HEADER: [&str; 8] =
    ["t", "norm", "energy", "sigma_x", "sigma_y", "sigma_z", "parity", "sigma2"];

/// Git-style object hash: SHA-256 of `blob <len>\0<content>`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub sigma2_max: f64,
    pub accepted: bool,
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub parity_drift: f64,
    pub spectrum_drift: Option<f64>,
    pub final_time: f64,
}

impl DynamicsSummary {
    fn of(rec: &TrajectoryRecord) -> Self {
        let (norm_drift, energy_drift, parity_drift) = rec.conservation_drift();
        Self {
            sigma2_max: rec.sigma2_max,
            accepted: rec.sigma2_max < ACCEPTANCE_SIGMA2,
            norm_drift,
            energy_drift,
            parity_drift,
            spectrum_drift: rec.spectrum_drift,
            final_time: rec.final_state.time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    /// `None` on success.
    pub error: Option<String>,
    /// Whether the failure was numerical (exit 2) rather than a bad input.
    pub numerical_failure: bool,
    pub spectrum_file: Option<String>,
    pub peaks: Vec<Peak>,
    pub dynamics: Option<DynamicsSummary>,
}

impl MethodOutcome {
    fn new(method: Method) -> Self {
        Self {
            method,
            error: None,
            numerical_failure: false,
            spectrum_file: None,
            peaks: Vec::new(),
            dynamics: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: usize,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    /// Hash of the resolved configuration (output directory excluded).
    pub run_id: String,
    pub config: RunConfig,
    pub outcomes: Vec<MethodOutcome>,
    pub sigma2_max: Option<f64>,
    pub artifacts: Vec<Artifact>,
    /// Hash over the sorted artifact list, like a git tree.
    pub content_hash: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunReport {
    pub fn outcome(&self, m: Method) -> Option<&MethodOutcome> {
        self.manifest.outcomes.iter().find(|o| o.method == m)
    }

    /// The failure a process should exit with, if any method failed.
    pub fn failure(&self) -> Option<CliError> {
        let failed: Vec<&MethodOutcome> = self.manifest.outcomes.iter().filter(|o| !o.ok()).collect();
        if failed.is_empty() {
            return None;
        }
        let msg = failed
            .iter()
            .map(|o| format!("{}: {}", o.method, o.error.as_deref().unwrap_or("")))
            .collect::<Vec<_>>()
            .join("\n");
        Some(if failed.iter().any(|o| o.numerical_failure) {
            CliError::Numerical(msg)
        } else {
            CliError::Validation(msg)
        })
    }
}

pub fn run_id(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.run.output_dir = PathBuf::new();
    content_hash(c.to_toml().as_bytes())[..16].to_string()
}

pub fn spectrum_file(m: Method) -> String {
    format!("spectrum_{}.csv", m.name())
}

pub fn write_trajectory(rec: &TrajectoryRecord, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for ((t, o), s2) in rec.times.iter().zip(&rec.observables).zip(&rec.sigma2) {
        w.serialize((t, o.norm, o.energy, o.sigma_x, o.sigma_y, o.sigma_z, o.parity, s2))?;
    }
    w.flush()?;
    Ok(())
}

/// Write the spectrum and fill in the outcome's file and peaks.
fn store_spectrum(
    mut s: SpectrumResult,
    id: &str,
    dir: &Path,
    cfg: &RunConfig,
    outcome: &mut MethodOutcome,
) -> Result<(), CliError> {
    s.metadata.run_id = Some(id.to_string());
    let name = spectrum_file(outcome.method);
    s.write_csv(&dir.join(&name))?;
    outcome.peaks = s.peaks(cfg.spectrum.peak_threshold);
    outcome.spectrum_file = Some(name);
    Ok(())
}

fn run_multid1(cfg: &RunConfig, id: &str, dir: &Path, outcome: &mut MethodOutcome) -> Result<(), CliError> {
    let params = cfg.params();
    let bath = cfg.bath()?;
    let sys = System::new(&params, &bath);
    let s0 = initial_state(cfg.ansatz.multiplicity, &bath, cfg.ansatz.noise_scale, cfg.ansatz.seed)?;
    match propagate(&s0, &sys, &cfg.propagate_options()) {
        Ok(rec) => {
            write_trajectory(&rec, &dir.join("trajectory.csv"))?;
            fs::write(dir.join("state_final.json"), rec.final_state.to_json()?)?;
            outcome.dynamics = Some(DynamicsSummary::of(&rec));
            let s = SpectrumResult::from_trajectory(&rec, &bath, &params)?;
            store_spectrum(s, id, dir, cfg, outcome)
        }
        Err(Error::Aborted { time, cause, partial }) => {
            // keep what was computed
            write_trajectory(&partial, &dir.join("trajectory.csv"))?;
            fs::write(dir.join("state_final.json"), partial.final_state.to_json()?)?;
            outcome.dynamics = Some(DynamicsSummary::of(&partial));
            Err(CliError::Numerical(format!("propagation aborted at t = {time}: {cause}")))
        }
        Err(e) => Err(e.into()),
    }
}

fn run_analytic(cfg: &RunConfig, id: &str, dir: &Path, outcome: &mut MethodOutcome) -> Result<(), CliError> {
    let params = cfg.params();
    let grid;
    let bath;
    let eval = match cfg.spectrum.evaluation {
        config::Evaluation::Continuum => {
            grid = cfg.continuum_grid();
            Evaluation::Continuum(&grid)
        }
        config::Evaluation::PerMode => {
            grid = cfg.continuum_grid();
            Evaluation::PerMode {
                grid: &grid,
                n_modes: cfg.bath.n_modes,
                omega_max: cfg.bath.omega_max,
            }
        }
        config::Evaluation::Discrete => {
            bath = cfg.bath()?;
            Evaluation::Discrete(&bath)
        }
    };
    let s = match outcome.method {
        Method::Trwa => trwa_spectrum(&params, eval)?,
        Method::Rwa => rwa_spectrum(&params, eval)?,
        Method::MultiD1 => unreachable!("dynamics handled separately"),
    };
    store_spectrum(s, id, dir, cfg, outcome)
}

/// Execute `cfg` into `dir`. Configuration errors return `Err`; failures of
/// individual methods are recorded in the manifest and do not stop the others.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunReport, CliError> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let id = run_id(cfg);
    let mut methods: Vec<Method> = Vec::new();
    for &m in &cfg.run.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let mut outcomes = Vec::new();
    for &m in &methods {
        let started = Instant::now();
        let mut outcome = MethodOutcome::new(m);
        let result = match m {
            Method::MultiD1 => run_multid1(cfg, &id, dir, &mut outcome),
            _ => run_analytic(cfg, &id, dir, &mut outcome),
        };
        if let Err(e) = result {
            outcome.numerical_failure = matches!(e, CliError::Numerical(_));
            outcome.error = Some(e.to_string());
            eprintln!("[{id}] {m}: FAILED: {e}");
        } else {
            eprintln!("[{id}] {m}: done in {:.1?}", started.elapsed());
        }
        outcomes.push(outcome);
    }
    if outcomes.iter().any(|o| !o.peaks.is_empty()) {
        let reports: Vec<PeakReport> = outcomes
            .iter()
            .filter(|o| o.ok())
            .map(|o| PeakReport {
                label: o.method.name().to_string(),
                method: o.method,
                peaks: o.peaks.clone(),
            })
            .collect();
        write_peak_report(&reports, &dir.join("peaks.csv"))?;
    }
    let config_text = cfg.to_toml();
    fs::write(dir.join(CONFIG_FILE), &config_text)?;
    let manifest = finish_manifest(cfg, id, outcomes, dir)?;
    Ok(RunReport {
        dir: dir.to_path_buf(),
        manifest,
    })
}

fn finish_manifest(
    cfg: &RunConfig,
    run_id: String,
    outcomes: Vec<MethodOutcome>,
    dir: &Path,
) -> Result<Manifest, CliError> {
    let mut artifacts = Vec::new();
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE)
        .collect();
    names.sort();
    for name in names {
        let bytes = fs::read(dir.join(&name))?;
        artifacts.push(Artifact {
            hash: content_hash(&bytes),
            bytes: bytes.len(),
            path: name,
        });
    }
    let tree: String = artifacts.iter().map(|a| format!("{} {}\n", a.hash, a.path)).collect();
    let sigma2_max = outcomes
        .iter()
        .find_map(|o| o.dynamics.as_ref().map(|d| d.sigma2_max));
    let manifest = Manifest {
        tool: format!("davydov {}", env!("CARGO_PKG_VERSION")),
        run_id,
        config: cfg.clone(),
        outcomes,
        sigma2_max,
        artifacts,
        content_hash: content_hash(tree.as_bytes()),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_git_object_format() {
        // `git hash-object --object-format=sha256` of an empty blob
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_eq!(
            content_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn run_id_ignores_output_dir() {
        let mut a = RunConfig::default();
        let b = a.clone();
        a.run.output_dir = "elsewhere".into();
        assert_eq!(run_id(&a), run_id(&b));
        a.model.alpha = 0.2;
        assert_ne!(run_id(&a), run_id(&b));
    }
}
