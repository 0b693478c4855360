//! Python module `davydov_py`: model parameters, bath discretization,
//! multi-D1 propagation and the analytic spectra.
//!
//! Sequences cross the boundary as plain lists of floats.

use davydov::{
    analytic, DiscretizedBath, Error, Evaluation, ModelParams, MultiD1State, PropagateOptions,
    SpectrumResult, System, TrajectoryRecord,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Domain(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "ModelParams", module = "davydov_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyModelParams {
    pub inner: ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (omega_c=1.0, lambda_c=0.0, alpha=0.1, omega_cut=5.0, omega0=1.0))]
    fn new(omega_c: f64, lambda_c: f64, alpha: f64, omega_cut: f64, omega0: f64) -> PyResult<Self> {
        let inner = ModelParams { omega0, omega_c, lambda_c, alpha, omega_cut };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.inner.omega0
    }
    #[getter]
    fn omega_c(&self) -> f64 {
        self.inner.omega_c
    }
    #[getter]
    fn lambda_c(&self) -> f64 {
        self.inner.lambda_c
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn omega_cut(&self) -> f64 {
        self.inner.omega_cut
    }

    /// Ohmic spectral density J(omega).
    fn spectral_density(&self, omega: f64) -> PyResult<f64> {
        davydov::spectral_density(omega, &self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParams(omega_c={}, lambda_c={}, alpha={}, omega_cut={}, omega0={})",
            p.omega_c, p.lambda_c, p.alpha, p.omega_cut, p.omega0
        )
    }
}

#[pyclass(name = "Bath", module = "davydov_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyBath {
    pub inner: DiscretizedBath,
}

#[pymethods]
impl PyBath {
    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes
    }
    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies.clone()
    }
    #[getter]
    fn couplings(&self) -> Vec<f64> {
        self.inner.couplings.clone()
    }
}

#[pyfunction]
#[pyo3(signature = (params, n_modes=500, omega_max=20.0))]
fn discretize_bath(params: PyRef<'_, PyModelParams>, n_modes: usize, omega_max: f64) -> PyResult<PyBath> {
    let inner = davydov::discretize_bath(&params.inner, n_modes, omega_max).map_err(to_py)?;
    Ok(PyBath { inner })
}

#[pyclass(name = "State", module = "davydov_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyState {
    pub inner: MultiD1State,
}

#[pymethods]
impl PyState {
    #[getter]
    fn multiplicity(&self) -> usize {
        self.inner.multiplicity
    }
    /// Cavity plus reservoir modes.
    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes
    }
    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    fn norm(&self) -> PyResult<f64> {
        self.inner.norm().map_err(to_py)
    }

    /// `(sigma_x, sigma_y, sigma_z)`.
    fn qubit_observables(&self) -> PyResult<(f64, f64, f64)> {
        self.inner.qubit_observables().map_err(to_py)
    }

    /// Mean photon number of every mode, cavity first.
    fn photon_numbers(&self) -> PyResult<Vec<f64>> {
        self.inner.photon_numbers().map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        MultiD1State::from_json(text).map(|inner| Self { inner }).map_err(to_py)
    }
}

/// Qubit excited, cavity and reservoir in vacuum, spread over `multiplicity`
/// components by seeded noise.
#[pyfunction]
#[pyo3(signature = (multiplicity, bath, noise_scale=1.0, seed=0))]
fn initial_state(multiplicity: usize, bath: PyRef<'_, PyBath>, noise_scale: f64, seed: u64) -> PyResult<PyState> {
    davydov::initial_state(multiplicity, &bath.inner, noise_scale, seed)
        .map(|inner| PyState { inner })
        .map_err(to_py)
}

#[pyclass(name = "Trajectory", module = "davydov_py")]
pub struct PyTrajectory {
    inner: TrajectoryRecord,
    bath: DiscretizedBath,
    params: ModelParams,
}

impl PyTrajectory {
    fn column(&self, f: impl Fn(&davydov::ObservableSet) -> f64) -> Vec<f64> {
        self.inner.observables.iter().map(f).collect()
    }
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }
    #[getter]
    fn norm(&self) -> Vec<f64> {
        self.column(|o| o.norm)
    }
    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.column(|o| o.energy)
    }
    #[getter]
    fn sigma_x(&self) -> Vec<f64> {
        self.column(|o| o.sigma_x)
    }
    #[getter]
    fn sigma_y(&self) -> Vec<f64> {
        self.column(|o| o.sigma_y)
    }
    #[getter]
    fn sigma_z(&self) -> Vec<f64> {
        self.column(|o| o.sigma_z)
    }
    #[getter]
    fn parity(&self) -> Vec<f64> {
        self.column(|o| o.parity)
    }
    #[getter]
    fn sigma2(&self) -> Vec<f64> {
        self.inner.sigma2.clone()
    }
    /// Maximum deviation over every step.
    #[getter]
    fn sigma2_max(&self) -> f64 {
        self.inner.sigma2_max
    }
    #[getter]
    fn final_state(&self) -> PyState {
        PyState { inner: self.inner.final_state.clone() }
    }

    /// Reservoir photon numbers at the final time against mode frequency.
    fn spectrum(&self) -> PyResult<PySpectrum> {
        SpectrumResult::from_trajectory(&self.inner, &self.bath, &self.params)
            .map(|inner| PySpectrum { inner })
            .map_err(to_py)
    }

    /// `(norm, energy, parity)` drifts relative to the start.
    fn conservation_drift(&self) -> (f64, f64, f64) {
        self.inner.conservation_drift()
    }
}

/// Fixed-step RK4 from `state` to `t_final`. The interpreter lock is
/// released while integrating.
#[pyfunction]
#[pyo3(signature = (state, params, bath, t_final, dt=0.01, output_stride=10, regularization_eps=1e-8))]
#[allow(clippy::too_many_arguments)]
fn propagate(
    py: Python<'_>,
    state: PyRef<'_, PyState>,
    params: PyRef<'_, PyModelParams>,
    bath: PyRef<'_, PyBath>,
    t_final: f64,
    dt: f64,
    output_stride: usize,
    regularization_eps: f64,
) -> PyResult<PyTrajectory> {
    let (s0, p, b) = (state.inner.clone(), params.inner, bath.inner.clone());
    let opts = PropagateOptions {
        t_final,
        dt,
        output_stride,
        regularization_eps,
        checkpoints: Vec::new(),
    };
    let rec = py
        .detach(|| {
            let sys = System::new(&p, &b);
            davydov::propagate(&s0, &sys, &opts)
        })
        .map_err(to_py)?;
    Ok(PyTrajectory { inner: rec, bath: b, params: p })
}

#[pyclass(name = "Spectrum", module = "davydov_py")]
pub struct PySpectrum {
    inner: SpectrumResult,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies.clone()
    }
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method().name()
    }

    /// Local maxima above `threshold` times the global maximum, as dicts
    /// with `position`, `height` and `fwhm` (None if unresolved).
    #[pyo3(signature = (threshold=0.05))]
    fn peaks<'py>(&self, py: Python<'py>, threshold: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .peaks(threshold)
            .into_iter()
            .map(|pk| {
                let d = PyDict::new(py);
                d.set_item("position", pk.position)?;
                d.set_item("height", pk.height)?;
                d.set_item("fwhm", pk.fwhm())?;
                Ok(d)
            })
            .collect()
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.write_csv(&path).map_err(to_py)
    }
}

/// A frequency grid (per unit frequency), a bath (its modes) or both (the
/// grid, per mode of the bath).
fn analytic_spectrum(
    params: &ModelParams,
    omega: Option<Vec<f64>>,
    bath: Option<PyRef<'_, PyBath>>,
    f: fn(&ModelParams, Evaluation) -> davydov::Result<SpectrumResult>,
) -> PyResult<PySpectrum> {
    let inner = match (omega, bath) {
        (Some(grid), None) => f(params, Evaluation::Continuum(&grid)),
        (None, Some(b)) => f(params, Evaluation::Discrete(&b.inner)),
        (None, None) => f(params, Evaluation::Continuum(&analytic::default_grid(3.0, 2000))),
        (Some(grid), Some(b)) => f(
            params,
            Evaluation::PerMode {
                grid: &grid,
                n_modes: b.inner.n_modes,
                omega_max: b.inner.omega_max,
            },
        ),
    }
    .map_err(to_py)?;
    Ok(PySpectrum { inner })
}

#[pyfunction]
#[pyo3(signature = (params, omega=None, bath=None))]
fn trwa_spectrum(
    params: PyRef<'_, PyModelParams>,
    omega: Option<Vec<f64>>,
    bath: Option<PyRef<'_, PyBath>>,
) -> PyResult<PySpectrum> {
    analytic_spectrum(&params.inner, omega, bath, davydov::trwa_spectrum)
}

#[pyfunction]
#[pyo3(signature = (params, omega=None, bath=None))]
fn rwa_spectrum(
    params: PyRef<'_, PyModelParams>,
    omega: Option<Vec<f64>>,
    bath: Option<PyRef<'_, PyBath>>,
) -> PyResult<PySpectrum> {
    analytic_spectrum(&params.inner, omega, bath, davydov::rwa_spectrum)
}

/// Self-consistent renormalization factor of the transformed Hamiltonian.
#[pyfunction]
fn solve_eta(params: PyRef<'_, PyModelParams>) -> PyResult<f64> {
    davydov::solve_eta(&params.inner).map_err(to_py)
}

/// Complex polariton energies, sorted by real part.
#[pyfunction]
fn polariton_poles(params: PyRef<'_, PyModelParams>) -> PyResult<Vec<(f64, f64)>> {
    let p = davydov::polariton_poles(&params.inner).map_err(to_py)?;
    Ok(p.poles.iter().map(|z| (z.re, z.im)).collect())
}

#[pymodule]
pub fn davydov_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyBath>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(discretize_bath, m)?)?;
    m.add_function(wrap_pyfunction!(initial_state, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(trwa_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(rwa_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(solve_eta, m)?)?;
    m.add_function(wrap_pyfunction!(polariton_poles, m)?)?;
    Ok(())
}
