//! Run configuration: TOML with one section per concern, every key optional.
//!
//! ```toml
//! model.lambda_c = 0.1
//! model.alpha = 0.05
//! ansatz.multiplicity = 3
//! integrator.dt = 0.01
//! run.methods = ["multid1", "trwa"]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use davydov::analytic::default_grid;
use davydov::dynamics::{PropagateOptions, DEFAULT_REGULARIZATION};
use davydov::spectrum::DEFAULT_PEAK_THRESHOLD;
use davydov::{discretize_bath, DiscretizedBath, Method, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub omega0: f64,
    pub omega_c: f64,
    pub lambda_c: f64,
    pub alpha: f64,
    pub omega_cut: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            omega0: p.omega0,
            omega_c: p.omega_c,
            lambda_c: p.lambda_c,
            alpha: p.alpha,
            omega_cut: p.omega_cut,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    pub n_modes: usize,
    pub omega_max: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            n_modes: 500,
            omega_max: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzSection {
    pub multiplicity: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self {
            multiplicity: 6,
            noise_scale: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_final: f64,
    /// Relative to the mean diagonal of the tangent metric.
    pub regularization_eps: f64,
    /// Time between recorded observables.
    pub output_interval: f64,
    /// Extra full photon-number snapshots (at most 10).
    pub checkpoints: Vec<f64>,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 300.0,
            regularization_eps: DEFAULT_REGULARIZATION,
            output_interval: 0.1,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    /// Uniform grid on `(0, omega_max]`, photon numbers per bath mode of
    /// the configured bath, on the same scale as the variational spectrum.
    PerMode,
    /// The same grid, photon numbers per unit frequency.
    Continuum,
    /// The discretized bath modes, as the variational run sees them.
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub evaluation: Evaluation,
    pub omega_max: f64,
    pub points: usize,
    pub peak_threshold: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            evaluation: Evaluation::PerMode,
            omega_max: 3.0,
            points: 2000,
            peak_threshold: DEFAULT_PEAK_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub methods: Vec<Method>,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            output_dir: PathBuf::from("output"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplicityOverride {
    pub lambda_c: f64,
    pub alpha: f64,
    pub multiplicity: usize,
}

/// A grid of `(lambda_c, alpha)` points, optionally with per-point `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub lambda_c: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub overrides: Vec<MultiplicityOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda_c: f64,
    pub alpha: f64,
    pub multiplicity: usize,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl SweepSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.lambda_c.is_empty() {
            errs.push("sweep.lambda_c: needs at least one value".into());
        }
        if self.alpha.is_empty() {
            errs.push("sweep.alpha: needs at least one value".into());
        }
        for (i, o) in self.overrides.iter().enumerate() {
            let listed = self.lambda_c.iter().any(|&l| same(l, o.lambda_c))
                && self.alpha.iter().any(|&a| same(a, o.alpha));
            if !listed {
                errs.push(format!(
                    "sweep.overrides[{i}]: ({}, {}) is not a point of the sweep",
                    o.lambda_c, o.alpha
                ));
            }
            if o.multiplicity == 0 {
                errs.push(format!("sweep.overrides[{i}].multiplicity: must be >= 1"));
            }
        }
        errs
    }

    /// Row-major over `lambda_c`, then `alpha`.
    pub fn points(&self, default_multiplicity: usize) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &lambda_c in &self.lambda_c {
            for &alpha in &self.alpha {
                let multiplicity = self
                    .overrides
                    .iter()
                    .find(|o| same(o.lambda_c, lambda_c) && same(o.alpha, alpha))
                    .map_or(default_multiplicity, |o| o.multiplicity);
                out.push(SweepPoint {
                    lambda_c,
                    alpha,
                    multiplicity,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub bath: BathSection,
    pub ansatz: AnsatzSection,
    pub integrator: IntegratorSection,
    pub spectrum: SpectrumSection,
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            omega0: self.model.omega0,
            omega_c: self.model.omega_c,
            lambda_c: self.model.lambda_c,
            alpha: self.model.alpha,
            omega_cut: self.model.omega_cut,
        }
    }

    pub fn bath(&self) -> Result<DiscretizedBath, CliError> {
        Ok(discretize_bath(&self.params(), self.bath.n_modes, self.bath.omega_max)?)
    }

    pub fn output_stride(&self) -> usize {
        ((self.integrator.output_interval / self.integrator.dt).round() as usize).max(1)
    }

    pub fn propagate_options(&self) -> PropagateOptions {
        PropagateOptions {
            t_final: self.integrator.t_final,
            dt: self.integrator.dt,
            output_stride: self.output_stride(),
            regularization_eps: self.integrator.regularization_eps,
            checkpoints: self.integrator.checkpoints.clone(),
        }
    }

    pub fn continuum_grid(&self) -> Vec<f64> {
        default_grid(self.spectrum.omega_max, self.spectrum.points)
    }

    pub fn with_point(&self, p: &SweepPoint) -> RunConfig {
        let mut c = self.clone();
        c.model.lambda_c = p.lambda_c;
        c.model.alpha = p.alpha;
        c.ansatz.multiplicity = p.multiplicity;
        c.sweep = None;
        c
    }

    /// Every problem found, one `section.key: reason` line each.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, key: &str, why: &str| {
            if !ok {
                errs.push(format!("{key}: {why}"));
            }
        };
        let m = &self.model;
        check(m.omega0 > 0.0 && m.omega0.is_finite(), "model.omega0", "must be > 0");
        check(m.omega_c > 0.0 && m.omega_c.is_finite(), "model.omega_c", "must be > 0");
        check(m.lambda_c >= 0.0 && m.lambda_c.is_finite(), "model.lambda_c", "must be >= 0");
        check(m.alpha >= 0.0 && m.alpha.is_finite(), "model.alpha", "must be >= 0");
        check(m.omega_cut > 0.0 && m.omega_cut.is_finite(), "model.omega_cut", "must be > 0");
        check(self.bath.n_modes >= 1, "bath.n_modes", "must be >= 1");
        check(self.bath.omega_max > 0.0 && self.bath.omega_max.is_finite(), "bath.omega_max", "must be > 0");
        check(self.ansatz.multiplicity >= 1, "ansatz.multiplicity", "must be >= 1");
        check(self.ansatz.noise_scale >= 0.0 && self.ansatz.noise_scale.is_finite(), "ansatz.noise_scale", "must be >= 0");
        let it = &self.integrator;
        check(it.dt > 0.0 && it.dt.is_finite(), "integrator.dt", "must be > 0");
        check(it.t_final > 0.0 && it.t_final.is_finite(), "integrator.t_final", "must be > 0");
        check(it.t_final >= it.dt, "integrator.t_final", "must be at least one step");
        check(it.regularization_eps >= 0.0, "integrator.regularization_eps", "must be >= 0");
        check(it.output_interval >= it.dt, "integrator.output_interval", "must be >= integrator.dt");
        check(it.checkpoints.len() <= 10, "integrator.checkpoints", "at most 10 entries");
        check(
            it.checkpoints.iter().all(|&t| (0.0..=it.t_final).contains(&t)),
            "integrator.checkpoints",
            "must lie in [0, t_final]",
        );
        let s = &self.spectrum;
        check(s.omega_max > 0.0 && s.omega_max.is_finite(), "spectrum.omega_max", "must be > 0");
        check(
            s.evaluation != Evaluation::PerMode || s.omega_max <= self.bath.omega_max,
            "spectrum.omega_max",
            "must not exceed bath.omega_max with per-mode evaluation",
        );
        check(s.points >= 3, "spectrum.points", "must be >= 3");
        check((0.0..1.0).contains(&s.peak_threshold), "spectrum.peak_threshold", "must lie in [0, 1)");
        check(!self.run.methods.is_empty(), "run.methods", "needs at least one method");
        if let Some(sw) = &self.sweep {
            errs.extend(sw.validate());
            for (i, &a) in sw.alpha.iter().enumerate() {
                if !(a >= 0.0) {
                    errs.push(format!("sweep.alpha[{i}]: must be >= 0"));
                }
            }
            for (i, &l) in sw.lambda_c.iter().enumerate() {
                if !(l >= 0.0) {
                    errs.push(format!("sweep.lambda_c[{i}]: must be >= 0"));
                }
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let errs = self.problems();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errs.join("\n")))
        }
    }
}
