//! Coherent-state expectation values against dense Fock-space evaluation.

mod common;

use common::fock::FockSpace;
use davydov::ansatz::gram_matrices;
use davydov::{Complex64 as C64, MultiD1State, System};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(m: usize, nm: usize, scale: f64, seed: u64) -> MultiD1State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = MultiD1State::zeros(m, nm);
    for br in [&mut s.plus, &mut s.minus] {
        for a in br.amplitudes.iter_mut() {
            *a = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        for z in br.displacements.iter_mut() {
            *z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale;
        }
    }
    s
}

fn two_mode_system() -> System {
    System::from_modes(1.0, vec![1.0, 0.6], vec![0.4, 0.3]).unwrap()
}

#[test]
fn norm_matches_fock() {
    let space = FockSpace::new(2, 10);
    for seed in 0..5 {
        let s = random_state(2, 2, 0.8, seed);
        let psi = space.state_vector(&s);
        let n = s.norm().unwrap();
        assert!((n - space.norm(&psi)).abs() < 1e-8 * n, "seed {seed}");
    }
}

#[test]
fn photon_numbers_match_fock() {
    let space = FockSpace::new(2, 10);
    for seed in 10..15 {
        let s = random_state(2, 2, 0.8, seed);
        let psi = space.state_vector(&s);
        let all = s.photon_numbers().unwrap();
        for j in 0..2 {
            let exact = space.photon_number(&psi, j);
            assert!((s.photon_number(j).unwrap() - exact).abs() < 1e-8);
            assert!((all[j] - exact).abs() < 1e-8);
        }
    }
}

#[test]
fn qubit_observables_match_fock() {
    let space = FockSpace::new(2, 10);
    for seed in 20..25 {
        let s = random_state(2, 2, 0.8, seed);
        let psi = space.state_vector(&s);
        let (sx, sy, sz) = s.qubit_observables().unwrap();
        let (ex, ey) = space.sigma_xy(&psi);
        assert!((sx - ex).abs() < 1e-8, "sx {sx} vs {ex}");
        assert!((sy - ey).abs() < 1e-8, "sy {sy} vs {ey}");
        assert!((sz - space.sigma_z(&psi)).abs() < 1e-8);
        assert!(sx * sx + sy * sy + sz * sz <= 1.0 + 1e-9);
        assert!((s.parity_expectation().unwrap() - space.parity(&psi)).abs() < 1e-8);
    }
}

#[test]
fn energy_matches_fock() {
    let space = FockSpace::new(2, 10);
    let sys = two_mode_system();
    let h = space.hamiltonian(&sys);
    for seed in 30..35 {
        let s = random_state(2, 2, 0.6, seed);
        let psi = space.state_vector(&s);
        let e = s.energy(&sys).unwrap();
        assert!((e - space.energy(&h, &psi)).abs() < 1e-8, "seed {seed}");
    }
}

#[test]
fn h_squared_matches_fock() {
    // M = 1 on cavity + one bath mode, then M = 3 on three modes
    let space = FockSpace::new(2, 12);
    let sys = two_mode_system();
    let h = space.hamiltonian(&sys);
    for seed in 40..45 {
        let s = random_state(1, 2, 0.6, seed);
        let psi = space.state_vector(&s);
        let h2 = s.h_squared(&sys).unwrap();
        assert!((h2 - space.energy_squared(&h, &psi)).abs() < 1e-6, "seed {seed}");
    }
    let space = FockSpace::new(3, 10);
    let sys = System::from_modes(1.0, vec![1.0, 0.6, 1.7], vec![0.4, 0.3, 0.5]).unwrap();
    let h = space.hamiltonian(&sys);
    let s = random_state(3, 3, 0.4, 99);
    let psi = space.state_vector(&s);
    assert!((s.h_squared(&sys).unwrap() - space.energy_squared(&h, &psi)).abs() < 1e-6);
    assert!((s.energy(&sys).unwrap() - space.energy(&h, &psi)).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_matrices_are_positive_semidefinite(seed in any::<u64>(), m in 1usize..5, scale in 0.0f64..2.0) {
        let s = random_state(m, 3, scale, seed);
        for g in gram_matrices(&s) {
            let herm = (&g - g.adjoint()).norm();
            prop_assert!(herm < 1e-12);
            let eig = g.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&e| e > -1e-10));
        }
    }

    #[test]
    fn variance_and_photons_nonnegative(seed in any::<u64>(), m in 1usize..4) {
        let s = random_state(m, 3, 0.9, seed);
        let sys = System::from_modes(1.0, vec![1.0, 0.6, 1.7], vec![0.4, 0.3, 0.5]).unwrap();
        let e = s.energy(&sys).unwrap();
        let h2 = s.h_squared(&sys).unwrap();
        prop_assert!(h2 - e * e >= -1e-9);
        prop_assert!(s.photon_numbers().unwrap().iter().all(|&n| n >= 0.0));
        let (sx, sy, sz) = s.qubit_observables().unwrap();
        prop_assert!(sx * sx + sy * sy + sz * sz <= 1.0 + 1e-9);
    }
}
