//! Spontaneous emission of a qubit coupled to a lossless cavity mode and an
//! Ohmic reservoir, computed three ways: multi-D1 variational dynamics, the
//! transformed rotating-wave approximation and the plain RWA.

pub mod analytic;
pub mod ansatz;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod quad;
pub mod spectrum;

pub use analytic::{
    polariton_poles, reduced_trwa_spectrum, rwa_rate, rwa_shift, rwa_spectrum, solve_eta, trwa_rate,
    trwa_shift, trwa_spectrum, Evaluation, PolaritonPoles, TrwaQuantities,
};
pub use ansatz::{coherent_overlap, initial_state, Branch, MultiD1State, ObservableSet};
pub use dynamics::{
    assemble_eom, deviation, propagate, step_rk4, Derivative, EomSolveReport, PropagateOptions,
    TrajectoryRecord,
};
pub use error::{Error, Result};
pub use model::{discretize_bath, spectral_density, DiscretizedBath, ModelParams, System};

pub use spectrum::{compare, find_peaks, Method, Peak, PeakReport, SpectrumMetadata, SpectrumResult};

pub use num_complex::Complex64;
