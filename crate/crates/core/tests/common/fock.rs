//! Brute-force reference: the qubit and a few truncated Fock modes as dense
//! matrices. Independent of the coherent-state algebra under test.

#![allow(dead_code)]

use davydov::{Complex64 as C64, MultiD1State, System};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub struct FockSpace {
    pub n_modes: usize,
    pub cutoff: usize,
    pub mode_dim: usize,
}

impl FockSpace {
    pub fn new(n_modes: usize, cutoff: usize) -> Self {
        let mode_dim = (cutoff + 1).pow(n_modes as u32);
        Self { n_modes, cutoff, mode_dim }
    }

    /// Spin index 0 is the excited state, 1 the ground state.
    pub fn dim(&self) -> usize {
        2 * self.mode_dim
    }

    pub fn occupations(&self, mut idx: usize) -> Vec<usize> {
        let mut occ = vec![0; self.n_modes];
        for j in (0..self.n_modes).rev() {
            occ[j] = idx % (self.cutoff + 1);
            idx /= self.cutoff + 1;
        }
        occ
    }

    fn index(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * (self.cutoff + 1) + n)
    }

    fn coherent(&self, z: &[C64]) -> Vec<C64> {
        let norm: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let pref = (-0.5 * norm).exp();
        (0..self.mode_dim)
            .map(|i| {
                let occ = self.occupations(i);
                let mut amp = C64::new(pref, 0.0);
                for (j, &n) in occ.iter().enumerate() {
                    let fact: f64 = (1..=n).map(|k| k as f64).product();
                    amp *= z[j].powu(n as u32) / fact.sqrt();
                }
                amp
            })
            .collect()
    }

    pub fn state_vector(&self, s: &MultiD1State) -> DVector<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = DVector::zeros(self.dim());
        for (br, sign) in [(&s.plus, 1.0), (&s.minus, -1.0)] {
            for n in 0..s.multiplicity {
                let coh = self.coherent(br.row(n));
                let a = br.amplitudes[n] * h;
                for (i, c) in coh.iter().enumerate() {
                    psi[i] += a * c;
                    psi[self.mode_dim + i] += a * c * sign;
                }
            }
        }
        psi
    }

    /// Real symmetric Hamiltonian of the qubit + modes.
    pub fn hamiltonian(&self, sys: &System) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for i in 0..self.mode_dim {
            let occ = self.occupations(i);
            let bos: f64 = occ.iter().zip(&sys.frequencies).map(|(&n, w)| n as f64 * w).sum();
            h[(i, i)] = 0.5 * sys.omega0 + bos;
            h[(self.mode_dim + i, self.mode_dim + i)] = -0.5 * sys.omega0 + bos;
            // sx (c/2)(b + b^+): couples e <-> g and n <-> n+1
            for j in 0..self.n_modes {
                if occ[j] < self.cutoff {
                    let mut up = occ.clone();
                    up[j] += 1;
                    let k = self.index(&up);
                    let v = 0.5 * sys.couplings[j] * ((occ[j] + 1) as f64).sqrt();
                    for (a, b) in [(i, self.mode_dim + k), (self.mode_dim + i, k)] {
                        h[(a, b)] += v;
                        h[(b, a)] += v;
                    }
                }
            }
        }
        h
    }

    pub fn expect_diag(&self, psi: &DVector<C64>, f: impl Fn(usize, &[usize]) -> f64) -> f64 {
        (0..self.dim())
            .map(|i| {
                let occ = self.occupations(i % self.mode_dim);
                psi[i].norm_sqr() * f(i / self.mode_dim, &occ)
            })
            .sum()
    }

    pub fn norm(&self, psi: &DVector<C64>) -> f64 {
        psi.norm_squared()
    }

    pub fn sigma_z(&self, psi: &DVector<C64>) -> f64 {
        self.expect_diag(psi, |spin, _| if spin == 0 { 1.0 } else { -1.0 }) / self.norm(psi)
    }

    pub fn photon_number(&self, psi: &DVector<C64>, j: usize) -> f64 {
        self.expect_diag(psi, |_, occ| occ[j] as f64) / self.norm(psi)
    }

    pub fn parity(&self, psi: &DVector<C64>) -> f64 {
        self.expect_diag(psi, |spin, occ| {
            let n: usize = occ.iter().sum();
            let s = if spin == 0 { 1.0 } else { -1.0 };
            if n % 2 == 0 { s } else { -s }
        }) / self.norm(psi)
    }

    /// (<sx>, <sy>) from the e/g coherences.
    pub fn sigma_xy(&self, psi: &DVector<C64>) -> (f64, f64) {
        let mut c = C64::new(0.0, 0.0);
        for i in 0..self.mode_dim {
            c += psi[i].conj() * psi[self.mode_dim + i];
        }
        // sx = |e><g| + |g><e|, sy = -i|e><g| + i|g><e|
        let n = self.norm(psi);
        (2.0 * c.re / n, 2.0 * c.im / n)
    }

    pub fn apply(&self, h: &DMatrix<f64>, psi: &DVector<C64>) -> DVector<C64> {
        let hc = h.map(|v| C64::new(v, 0.0));
        hc * psi
    }

    pub fn energy(&self, h: &DMatrix<f64>, psi: &DVector<C64>) -> f64 {
        (psi.dotc(&self.apply(h, psi))).re / self.norm(psi)
    }

    pub fn energy_squared(&self, h: &DMatrix<f64>, psi: &DVector<C64>) -> f64 {
        self.apply(h, psi).norm_squared() / self.norm(psi)
    }
}

/// Exact propagation inside one parity sector via full diagonalization.
pub struct ExactPropagator {
    indices: Vec<usize>,
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
    dim: usize,
}

impl ExactPropagator {
    pub fn new(space: &FockSpace, sys: &System, parity: f64) -> Self {
        let indices: Vec<usize> = (0..space.dim())
            .filter(|&i| {
                let occ = space.occupations(i % space.mode_dim);
                let n: usize = occ.iter().sum();
                let s = if i < space.mode_dim { 1.0 } else { -1.0 };
                let p = if n % 2 == 0 { s } else { -s };
                p == parity
            })
            .collect();
        let full = space.hamiltonian(sys);
        let k = indices.len();
        let block = DMatrix::from_fn(k, k, |a, b| full[(indices[a], indices[b])]);
        Self { indices, eig: block.symmetric_eigen(), dim: space.dim() }
    }

    pub fn evolve(&self, psi0: &DVector<C64>, t: f64) -> DVector<C64> {
        let k = self.indices.len();
        let v = &self.eig.eigenvectors;
        let local = DVector::from_fn(k, |a, _| psi0[self.indices[a]]);
        // coefficients in the eigenbasis
        let coeff = DVector::from_fn(k, |m, _| {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..k {
                acc += local[a] * v[(a, m)];
            }
            acc * C64::from_polar(1.0, -self.eig.eigenvalues[m] * t)
        });
        let mut out = DVector::zeros(self.dim);
        for a in 0..k {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..k {
                acc += coeff[m] * v[(a, m)];
            }
            out[self.indices[a]] = acc;
        }
        out
    }
}
