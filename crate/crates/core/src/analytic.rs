//! Closed-form steady-state emission spectra: the transformed rotating-wave
//! approximation (TRWA) and the plain RWA, their level shifts and rates,
//! and Markovian polariton poles.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscretizedBath, ModelParams};
use crate::quad;
use crate::spectrum::{Method, SpectrumMetadata, SpectrumResult};

/// Upper end of the singularity-subtracted part of level-shift integrals;
/// the remainder is integrated separately out to infinity.
pub const PV_SPLIT: f64 = 40.0;

const PV_REL_TOL: f64 = 1e-12;

/// `P int_0^inf h(x) / (omega - x) dx` by singularity subtraction.
///
/// On `[0, X]` the regular integrand `[h(x) - h(omega)] / (omega - x)` is
/// integrated on both sides of `omega` and `h(omega) ln(omega / (X - omega))`
/// added; the tail `[X, inf)` has no pole.
pub fn principal_value<H: Fn(f64) -> f64>(h: H, omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("level shift needs omega > 0, got {omega}")));
    }
    let upper = PV_SPLIT.max(2.0 * omega);
    let h0 = h(omega);
    let regular = |x: f64| (h(x) - h0) / (omega - x);
    let left = quad::integrate(regular, 0.0, omega, 0.0, PV_REL_TOL);
    let right = quad::integrate(regular, omega, upper, 0.0, PV_REL_TOL);
    let log_term = h0 * (omega / (upper - omega)).ln();
    let tail = quad::integrate_to_infinity(|x| h(x) / (omega - x), upper, 0.0, PV_REL_TOL);
    Ok(left + right + log_term + tail)
}

/// Ohmic reservoir integral `int_0^inf J(x) / (x + eta w0)^2 dx`.
fn reorganization_integral(params: &ModelParams, eta: f64) -> f64 {
    let shift = eta * params.omega0;
    let f = |x: f64| params.ohmic(x) / ((x + shift) * (x + shift));
    // the integrand peaks near x = eta w0; split there
    let knee = shift.max(1e-12);
    quad::integrate(f, 0.0, knee, 0.0, 1e-13) + quad::integrate_to_infinity(f, knee, 0.0, 1e-13)
}

/// Right-hand side of the self-consistency condition for `eta`.
pub fn eta_rhs(params: &ModelParams, eta: f64) -> f64 {
    let cav = params.lambda_c / (params.omega_c + eta * params.omega0);
    (-0.5 * cav * cav - 0.5 * reorganization_integral(params, eta)).exp()
}

const ETA_TOL: f64 = 1e-10;

/// Self-consistent renormalization `eta` of the qubit frequency.
///
/// Damped fixed-point iteration from `eta = 1`, falling back to bisection
/// on `eta - rhs(eta)` over `(0, 1]` if it stalls.
pub fn solve_eta(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if params.lambda_c == 0.0 && params.alpha == 0.0 {
        return Ok(1.0);
    }
    let g = |eta: f64| eta - eta_rhs(params, eta);
    let mut eta = 1.0;
    for _ in 0..500 {
        let next = 0.5 * eta + 0.5 * eta_rhs(params, eta);
        if (next - eta).abs() < 0.1 * ETA_TOL {
            eta = next;
            break;
        }
        eta = next;
    }
    if g(eta).abs() < ETA_TOL {
        return Ok(eta);
    }
    let (mut lo, mut hi) = (1e-12, 1.0);
    let (glo, ghi) = (g(lo), g(hi));
    if glo * ghi > 0.0 {
        return Err(Error::NoConvergence {
            iterations: 500,
            residual: g(eta).abs(),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) == (glo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let eta = 0.5 * (lo + hi);
    let residual = g(eta).abs();
    if residual < ETA_TOL {
        Ok(eta)
    } else {
        Err(Error::NoConvergence { iterations: 700, residual })
    }
}

/// Renormalized quantities of the TRWA treatment at fixed `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrwaQuantities {
    pub params: ModelParams,
    pub eta: f64,
    pub lambda_tilde_c: f64,
}

impl TrwaQuantities {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self::with_eta(params, solve_eta(params)?))
    }

    pub fn with_eta(params: &ModelParams, eta: f64) -> Self {
        let e = eta * params.omega0;
        Self {
            params: *params,
            eta,
            lambda_tilde_c: e * params.lambda_c / (e + params.omega_c),
        }
    }

    /// `(eta w0 / (eta w0 + w))^2`.
    pub fn renormalization(&self, omega: f64) -> f64 {
        let e = self.eta * self.params.omega0;
        let r = e / (e + omega);
        r * r
    }

    /// Displacement parameter `xi = w / (eta w0 + w)` of a mode at `omega`.
    pub fn displacement_parameter(&self, omega: f64) -> f64 {
        omega / (self.eta * self.params.omega0 + omega)
    }

    /// Renormalized coupling `eta w0 lambda / (eta w0 + w)`.
    pub fn renormalized_coupling(&self, coupling: f64, omega: f64) -> f64 {
        let e = self.eta * self.params.omega0;
        e * coupling / (e + omega)
    }

    pub fn shift(&self, omega: f64) -> Result<f64> {
        trwa_shift(omega, &self.params, self.eta)
    }

    pub fn rate(&self, omega: f64) -> f64 {
        trwa_rate(omega, &self.params, self.eta)
    }
}

/// TRWA level shift `P int (eta w0/(eta w0 + x))^2 J(x) / (omega - x) dx`.
pub fn trwa_shift(omega: f64, params: &ModelParams, eta: f64) -> Result<f64> {
    let q = TrwaQuantities::with_eta(params, eta);
    principal_value(|x| q.renormalization(x) * params.ohmic(x), omega)
}

/// TRWA rate `pi (eta w0/(eta w0 + omega))^2 J(omega)`.
pub fn trwa_rate(omega: f64, params: &ModelParams, eta: f64) -> f64 {
    if !(omega >= 0.0) {
        return 0.0;
    }
    let q = TrwaQuantities::with_eta(params, eta);
    std::f64::consts::PI * q.renormalization(omega) * params.ohmic(omega)
}

/// RWA level shift `P int J(x) / (4 (omega - x)) dx`.
pub fn rwa_shift(omega: f64, params: &ModelParams) -> Result<f64> {
    Ok(0.25 * principal_value(|x| params.ohmic(x), omega)?)
}

/// RWA rate `(pi / 4) J(omega)`.
pub fn rwa_rate(omega: f64, params: &ModelParams) -> f64 {
    if !(omega >= 0.0) {
        return 0.0;
    }
    0.25 * std::f64::consts::PI * params.ohmic(omega)
}

/// Where the reservoir modes of a spectrum come from.
#[derive(Debug, Clone, Copy)]
pub enum Evaluation<'a> {
    /// The discrete modes of a bath: `N(w_k)` uses the discrete `lambda_k`.
    Discrete(&'a DiscretizedBath),
    /// A frequency grid with `lambda_k^2 -> J(w) dw`: values are photon
    /// numbers per unit frequency.
    Continuum(&'a [f64]),
    /// A frequency grid with `lambda_k^2 -> J(w) s(w)`, `s` the local mode
    /// spacing of an `n_modes`-mode bath on `(0, omega_max]`. Values are
    /// photon numbers per bath mode and coincide with `Discrete` at the
    /// mode frequencies, so they overlay the multi-D1 spectrum.
    PerMode {
        grid: &'a [f64],
        n_modes: usize,
        omega_max: f64,
    },
}

impl Evaluation<'_> {
    fn points(&self, params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>, &'static str)> {
        if let Evaluation::PerMode { grid, n_modes, omega_max } = self {
            if *n_modes == 0 || !(*omega_max > 0.0) {
                return Err(Error::InvalidParameter("per-mode measure needs n_modes >= 1 and omega_max > 0".into()));
            }
            if grid.iter().any(|&w| w > *omega_max) {
                return Err(Error::Domain(format!("per-mode grid extends past omega_max = {omega_max}")));
            }
        }
        Ok(match self {
            Evaluation::Discrete(b) => (
                b.frequencies.clone(),
                b.couplings.iter().map(|l| l * l).collect(),
                "discrete",
            ),
            Evaluation::Continuum(grid) => (
                grid.to_vec(),
                grid.iter().map(|&w| params.ohmic(w)).collect(),
                "per-unit-frequency",
            ),
            Evaluation::PerMode { grid, n_modes, omega_max } => (
                grid.to_vec(),
                grid.iter()
                    .map(|&w| params.ohmic(w) * mode_spacing(w, params.omega_cut, *n_modes, *omega_max))
                    .collect(),
                "per-mode",
            ),
        })
    }
}

/// `dw/dk` of the equal-weight discretization at frequency `w`.
pub fn mode_spacing(omega: f64, omega_cut: f64, n_modes: usize, omega_max: f64) -> f64 {
    let weight = -(-omega_max / omega_cut).exp_m1();
    omega_cut * weight / n_modes as f64 * (omega / omega_cut).exp()
}

/// Ingredients of the single-excitation resolvent amplitude.
///
/// `N(w) = lambda^2 |F(w)|^2` with
/// `F = ratio [d + corr_c] / (d (w - e - shift + i rate) - lc^2) + corr_k`,
/// `d = w - w_c`.
#[derive(Debug, Clone, Copy)]
pub struct ResolventTerms {
    /// Renormalized qubit frequency `e`.
    pub qubit_frequency: f64,
    /// Renormalized-to-bare reservoir coupling ratio.
    pub coupling_ratio: f64,
    /// Renormalized cavity coupling `lc`.
    pub cavity_coupling: f64,
    pub shift: f64,
    pub rate: f64,
    /// `lc^2 / (2 eta w0)` in the numerator, zero in the RWA limit.
    pub cavity_correction: f64,
    /// `1 / (2 (w + eta w0))`, zero in the RWA limit.
    pub reservoir_correction: f64,
}

impl ResolventTerms {
    pub fn amplitude(&self, omega: f64, omega_c: f64) -> C64 {
        let q = C64::new(omega - self.qubit_frequency - self.shift, self.rate);
        let first = if self.cavity_coupling == 0.0 {
            C64::new(self.coupling_ratio, 0.0) / q
        } else {
            let d = omega - omega_c;
            let lc2 = self.cavity_coupling * self.cavity_coupling;
            self.coupling_ratio * (d + self.cavity_correction) / (d * q - lc2)
        };
        first + self.reservoir_correction
    }
}

fn trwa_terms(q: &TrwaQuantities, omega: f64) -> Result<ResolventTerms> {
    let e = q.eta * q.params.omega0;
    Ok(ResolventTerms {
        qubit_frequency: e,
        coupling_ratio: e / (e + omega),
        cavity_coupling: q.lambda_tilde_c,
        shift: q.shift(omega)?,
        rate: q.rate(omega),
        cavity_correction: q.lambda_tilde_c * q.lambda_tilde_c / (2.0 * e),
        reservoir_correction: 0.5 / (omega + e),
    })
}

/// TRWA terms after the reduction to the RWA: `eta -> 1`, renormalized
/// couplings `-> lambda / 2` and the two small corrections dropped.
fn reduced_trwa_terms(params: &ModelParams, omega: f64) -> Result<ResolventTerms> {
    Ok(ResolventTerms {
        qubit_frequency: params.omega0,
        coupling_ratio: 0.5,
        cavity_coupling: 0.5 * params.lambda_c,
        shift: principal_value(|x| 0.25 * params.ohmic(x), omega)?,
        rate: 0.25 * std::f64::consts::PI * params.ohmic(omega),
        cavity_correction: 0.0,
        reservoir_correction: 0.0,
    })
}

fn check_grid(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() || freqs.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Domain("spectrum grid must be non-empty and positive".into()));
    }
    if freqs.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Domain("spectrum grid must be strictly increasing".into()));
    }
    Ok(())
}

/// TRWA emission spectrum.
pub fn trwa_spectrum(params: &ModelParams, eval: Evaluation) -> Result<SpectrumResult> {
    let q = TrwaQuantities::new(params)?;
    let (freqs, weights, measure) = eval.points(params)?;
    check_grid(&freqs)?;
    let values = freqs
        .par_iter()
        .zip(&weights)
        .map(|(&w, &l2)| Ok(l2 * trwa_terms(&q, w)?.amplitude(w, params.omega_c).norm_sqr()))
        .collect::<Result<Vec<_>>>()?;
    let mut meta = SpectrumMetadata::new(Method::Trwa, params, measure);
    meta.eta = Some(q.eta);
    Ok(SpectrumResult::new(freqs, values, meta))
}

/// The TRWA evaluator with the RWA substitutions applied.
pub fn reduced_trwa_spectrum(params: &ModelParams, eval: Evaluation) -> Result<SpectrumResult> {
    params.validate()?;
    let (freqs, weights, measure) = eval.points(params)?;
    check_grid(&freqs)?;
    let values = freqs
        .par_iter()
        .zip(&weights)
        .map(|(&w, &l2)| {
            if params.lambda_c > 0.0 && w == params.omega_c {
                return Ok(0.0);
            }
            Ok(l2 * reduced_trwa_terms(params, w)?.amplitude(w, params.omega_c).norm_sqr())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult::new(freqs, values, SpectrumMetadata::new(Method::Rwa, params, measure)))
}

/// RWA emission spectrum
/// `(l^2/4) / ([w - w0 - D(w) - (lc^2/4)/(w - wc)]^2 + G(w)^2)`.
pub fn rwa_spectrum(params: &ModelParams, eval: Evaluation) -> Result<SpectrumResult> {
    params.validate()?;
    let (freqs, weights, measure) = eval.points(params)?;
    check_grid(&freqs)?;
    let values = freqs
        .par_iter()
        .zip(&weights)
        .map(|(&w, &l2)| {
            let mut detuning = w - params.omega0 - rwa_shift(w, params)?;
            if params.lambda_c > 0.0 {
                let d = w - params.omega_c;
                if d == 0.0 {
                    return Ok(0.0);
                }
                detuning -= 0.25 * params.lambda_c * params.lambda_c / d;
            }
            let rate = rwa_rate(w, params);
            Ok(0.25 * l2 / (detuning * detuning + rate * rate))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult::new(freqs, values, SpectrumMetadata::new(Method::Rwa, params, measure)))
}

/// Uniform grid of `n` points on `(0, omega_hi]`.
pub fn default_grid(omega_hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| omega_hi * i as f64 / n as f64).collect()
}

/// Complex energies of the two polaritons; `Im < 0` is minus the half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaritonPoles {
    /// Sorted by real part.
    pub poles: [C64; 2],
}

impl PolaritonPoles {
    /// Full widths at half maximum, `-2 Im`.
    pub fn widths(&self) -> [f64; 2] {
        [-2.0 * self.poles[0].im, -2.0 * self.poles[1].im]
    }
}

/// Markovian polariton poles: roots of
/// `(w - wc)(w - eta w0 - D(wr) + i G(wr)) - lc^2 = 0` with the shift and
/// rate frozen at `wr = eta w0 + D(eta w0)`.
pub fn polariton_poles(params: &ModelParams) -> Result<PolaritonPoles> {
    if !(params.lambda_c > 0.0) {
        return Err(Error::InvalidParameter("polariton poles need lambda_c > 0".into()));
    }
    let q = TrwaQuantities::new(params)?;
    let e = q.eta * params.omega0;
    let reference = e + q.shift(e)?;
    if !(reference > 0.0) {
        return Err(Error::Domain(format!(
            "renormalized qubit frequency {reference} is not positive"
        )));
    }
    let qubit = C64::new(e + q.shift(reference)?, -q.rate(reference));
    Ok(poles_of(C64::new(params.omega_c, 0.0), qubit, q.lambda_tilde_c))
}

/// Roots of `(w - a)(w - b) = g^2`.
pub fn poles_of(a: C64, b: C64, g: f64) -> PolaritonPoles {
    let mean = 0.5 * (a + b);
    let half = 0.5 * (a - b);
    let root = (half * half + g * g).sqrt();
    let mut poles = [mean - root, mean + root];
    if poles[0].re > poles[1].re {
        poles.swap(0, 1);
    }
    PolaritonPoles { poles }
}
