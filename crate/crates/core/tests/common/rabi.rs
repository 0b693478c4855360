//! The single-mode Rabi instance used for integrator checks.

#![allow(dead_code)]

use davydov::{Complex64 as C64, MultiD1State, System};

pub fn rabi_system() -> System {
    System::from_modes(1.0, vec![1.0], vec![0.4]).unwrap()
}

/// M = 6 on the Rabi model with every component well populated and well
/// separated, so the Gram matrix stays far from singular.
pub fn spread_rabi_state() -> MultiD1State {
    let mut s = MultiD1State::initial(6, 1, 1.0, 11).unwrap();
    for n in 1..6 {
        let phase = C64::from_polar(1.0, n as f64);
        s.plus.amplitudes[n] = 0.05 * phase;
        s.minus.amplitudes[n] = 0.05 * phase.conj();
        s.plus.row_mut(n)[0] = C64::from_polar(0.3, 1.1 * n as f64);
        s.minus.row_mut(n)[0] = C64::from_polar(0.3, -0.7 * n as f64);
    }
    s
}

