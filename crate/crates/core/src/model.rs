//! Physical parameters, the Ohmic spectral density and its discretization.
//!
//! All energies are in units of the bare qubit frequency, so `omega0` is
//! normally 1 and times are measured in inverse qubit frequencies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the qubit + cavity + reservoir model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub omega_c: f64,
    pub lambda_c: f64,
    pub alpha: f64,
    pub omega_cut: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            omega_c: 1.0,
            lambda_c: 0.0,
            alpha: 0.1,
            omega_cut: 5.0,
        }
    }
}

impl ModelParams {
    pub fn new(omega_c: f64, lambda_c: f64, alpha: f64, omega_cut: f64) -> Result<Self> {
        let p = Self {
            omega0: 1.0,
            omega_c,
            lambda_c,
            alpha,
            omega_cut,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")))
            }
        };
        positive("omega0", self.omega0)?;
        positive("omega_c", self.omega_c)?;
        positive("omega_cut", self.omega_cut)?;
        nonneg("lambda_c", self.lambda_c)?;
        nonneg("alpha", self.alpha)?;
        Ok(())
    }

    /// `J(w) = 2 alpha w exp(-w / omega_cut)` without domain checks.
    #[inline]
    pub(crate) fn ohmic(&self, omega: f64) -> f64 {
        2.0 * self.alpha * omega * (-omega / self.omega_cut).exp()
    }
}

/// Ohmic spectral density `J(w) = 2 alpha w exp(-w / omega_cut)`.
pub fn spectral_density(omega: f64, params: &ModelParams) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!(
            "spectral density needs omega >= 0, got {omega}"
        )));
    }
    Ok(params.ohmic(omega))
}

/// Reservoir modes obtained from an equal-weight discretization of `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub n_modes: usize,
    pub omega_max: f64,
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

/// Discretize the Ohmic density on `(0, omega_max]` into `n_modes` modes.
///
/// Mode `k` (1-based) sits at `-wc ln[1 - (k/N)(1 - e^{-wmax/wc})]`, so each
/// mode carries the same weight of the measure `exp(-w/wc) dw` and the
/// last mode lands on `omega_max`. Couplings are
/// `sqrt(2 alpha w_k wc (1 - e^{-wmax/wc}) / N)`.
pub fn discretize_bath(
    params: &ModelParams,
    n_modes: usize,
    omega_max: f64,
) -> Result<DiscretizedBath> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("bath needs at least one mode".into()));
    }
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega_max must be > 0, got {omega_max}"
        )));
    }
    params.validate()?;
    let wc = params.omega_cut;
    // 1 - exp(-wmax/wc), computed without cancellation for small ratios
    let weight = -(-omega_max / wc).exp_m1();
    let nb = n_modes as f64;
    let frequencies: Vec<f64> = (1..=n_modes)
        .map(|k| -wc * (-(k as f64 / nb) * weight).ln_1p())
        .collect();
    let couplings = frequencies
        .iter()
        .map(|&w| (2.0 * params.alpha * w * wc * weight / nb).sqrt())
        .collect();
    Ok(DiscretizedBath {
        n_modes,
        omega_max,
        frequencies,
        couplings,
    })
}

impl DiscretizedBath {
    /// Sum of squared couplings, the discrete counterpart of `int J`.
    pub fn coupling_weight(&self) -> f64 {
        self.couplings.iter().map(|l| l * l).sum()
    }
}

/// Closed form of `int_0^wmax J(w) dw` for the Ohmic density.
pub fn integrated_density(params: &ModelParams, omega_max: f64) -> f64 {
    let wc = params.omega_cut;
    let r = omega_max / wc;
    2.0 * params.alpha * wc * wc * (1.0 - (-r).exp() * (1.0 + r))
}

/// Bosonic modes seen by the qubit: the cavity first, then the reservoir.
///
/// The Hamiltonian is
/// `H = (w0/2) sz + sum_j w_j b_j^+ b_j + (1/2) sx sum_j c_j (b_j^+ + b_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub omega0: f64,
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl System {
    pub fn new(params: &ModelParams, bath: &DiscretizedBath) -> Self {
        let mut frequencies = Vec::with_capacity(bath.n_modes + 1);
        let mut couplings = Vec::with_capacity(bath.n_modes + 1);
        frequencies.push(params.omega_c);
        couplings.push(params.lambda_c);
        frequencies.extend_from_slice(&bath.frequencies);
        couplings.extend_from_slice(&bath.couplings);
        Self {
            omega0: params.omega0,
            frequencies,
            couplings,
        }
    }

    /// Arbitrary mode set, e.g. a handful of modes for exact comparisons.
    pub fn from_modes(omega0: f64, frequencies: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() != couplings.len() {
            return Err(Error::InvalidParameter(
                "mode frequencies and couplings must be non-empty and of equal length".into(),
            ));
        }
        Ok(Self {
            omega0,
            frequencies,
            couplings,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }
}
