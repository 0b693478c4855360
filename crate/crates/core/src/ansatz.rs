//! The multi-D1 trial state and its expectation values.
//!
//! The state is
//! `|D> = sum_n A_n |+>|f_n> + B_n |->|g_n>`
//! where `|+->` are the eigenstates of `sx` and `|f_n>`, `|g_n>` are
//! normalized multimode coherent states over the cavity (mode 0) and the
//! reservoir modes. Every matrix element reduces to coherent-state algebra:
//! `<x|y> = exp(x*.y - |x|^2/2 - |y|^2/2)`, `<x|b_j|y> = y_j <x|y>`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscretizedBath, System};

/// Negative photon numbers or variances down to this size are rounding.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

/// Amplitudes and displacements attached to one `sx` eigenstate.
///
/// `displacements` is row-major: component `n` owns
/// `displacements[n * n_modes..(n + 1) * n_modes]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub amplitudes: Vec<C64>,
    pub displacements: Vec<C64>,
}

impl Branch {
    fn zeros(m: usize, n_modes: usize) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); m],
            displacements: vec![C64::new(0.0, 0.0); m * n_modes],
        }
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[C64] {
        let w = self.displacements.len() / self.amplitudes.len();
        &self.displacements[n * w..(n + 1) * w]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize) -> &mut [C64] {
        let w = self.displacements.len() / self.amplitudes.len();
        &mut self.displacements[n * w..(n + 1) * w]
    }

    /// `self + h * other`
    pub(crate) fn axpy(&self, h: f64, other: &Branch) -> Branch {
        let add = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x + y * h).collect();
        Branch {
            amplitudes: add(&self.amplitudes, &other.amplitudes),
            displacements: add(&self.displacements, &other.displacements),
        }
    }

    pub(crate) fn scale(&mut self, s: f64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        self.displacements.iter_mut().for_each(|a| *a *= s);
    }
}

/// Multi-D1 variational state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiD1State {
    pub multiplicity: usize,
    /// Cavity plus reservoir modes.
    pub n_modes: usize,
    pub time: f64,
    /// Components on `|+>`: amplitudes `A_n`, displacements `f_nj`.
    pub plus: Branch,
    /// Components on `|->`: amplitudes `B_n`, displacements `g_nj`.
    pub minus: Branch,
}

/// Qubit-side expectation values plus norm, energy and parity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_z: f64,
    pub excited_population: f64,
    pub norm: f64,
    pub energy: f64,
    pub parity: f64,
}

/// Overlap of two normalized multimode coherent states.
pub fn coherent_overlap(d1: &[C64], d2: &[C64]) -> C64 {
    assert_eq!(d1.len(), d2.len(), "displacement lengths differ");
    let mut e = C64::new(0.0, 0.0);
    for (a, b) in d1.iter().zip(d2) {
        e += a.conj() * b - 0.5 * (a.norm_sqr() + b.norm_sqr());
    }
    e.exp()
}

impl MultiD1State {
    /// All amplitudes and displacements zero.
    pub fn zeros(multiplicity: usize, n_modes: usize) -> Self {
        Self {
            multiplicity,
            n_modes,
            time: 0.0,
            plus: Branch::zeros(multiplicity, n_modes),
            minus: Branch::zeros(multiplicity, n_modes),
        }
    }

    /// `|e>|0_c>|0>` with `multiplicity - 1` weakly populated extra
    /// components, seeded deterministically.
    ///
    /// Extra components get amplitudes of modulus at most `1e-7 * noise_scale`
    /// and displacements of modulus at most `1e-4 * noise_scale`. Without
    /// them the coherent-state Gram matrix is exactly singular at `t = 0`.
    pub fn initial(multiplicity: usize, n_modes: usize, noise_scale: f64, seed: u64) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::InvalidParameter("multiplicity must be >= 1".into()));
        }
        if n_modes == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        let mut s = Self::zeros(multiplicity, n_modes);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        s.plus.amplitudes[0] = C64::new(h, 0.0);
        s.minus.amplitudes[0] = C64::new(h, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |bound: f64| {
            let r: f64 = rng.random::<f64>() * bound;
            let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            C64::from_polar(r, phi)
        };
        for branch in [&mut s.plus, &mut s.minus] {
            for n in 1..multiplicity {
                branch.amplitudes[n] = draw(1e-7 * noise_scale);
                for z in branch.row_mut(n) {
                    *z = draw(1e-4 * noise_scale);
                }
            }
        }
        let norm = s.norm()?;
        let inv = norm.sqrt().recip();
        s.plus.amplitudes.iter_mut().for_each(|a| *a *= inv);
        s.minus.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(s)
    }

    /// Qubit in the excited state, all modes in vacuum, single component.
    pub fn excited(n_modes: usize) -> Self {
        Self::initial(1, n_modes, 0.0, 0).expect("single component state is valid")
    }

    /// Qubit in the ground state, all modes in vacuum.
    pub fn ground(n_modes: usize) -> Self {
        let mut s = Self::excited(n_modes);
        s.minus.amplitudes[0] = -s.minus.amplitudes[0];
        s
    }

    fn check_mode(&self, j: usize) -> Result<()> {
        if j >= self.n_modes {
            return Err(Error::InvalidParameter(format!(
                "mode index {j} out of range (have {} modes)",
                self.n_modes
            )));
        }
        Ok(())
    }

    /// `<D|D>`.
    pub fn norm(&self) -> Result<f64> {
        let mut acc = C64::new(0.0, 0.0);
        let mut mag = 0.0;
        for br in [&self.plus, &self.minus] {
            for l in 0..self.multiplicity {
                for n in 0..self.multiplicity {
                    let t = br.amplitudes[l].conj()
                        * br.amplitudes[n]
                        * coherent_overlap(br.row(l), br.row(n));
                    acc += t;
                    mag += t.norm();
                }
            }
        }
        if acc.im.abs() > 1e-12 * mag.max(1e-300) {
            return Err(Error::Consistency(format!("norm has imaginary part {}", acc.im)));
        }
        if !(acc.re > 0.0) {
            return Err(Error::Consistency(format!("norm is not positive: {}", acc.re)));
        }
        Ok(acc.re)
    }

    /// `<b_j^+ b_j>` for mode `j` (0 is the cavity).
    pub fn photon_number(&self, j: usize) -> Result<f64> {
        self.check_mode(j)?;
        let norm = self.norm()?;
        let mut acc = C64::new(0.0, 0.0);
        for br in [&self.plus, &self.minus] {
            let overlaps = gram(br, br);
            for l in 0..self.multiplicity {
                for n in 0..self.multiplicity {
                    acc += br.amplitudes[l].conj()
                        * br.row(l)[j].conj()
                        * overlaps[(l, n)]
                        * br.row(n)[j]
                        * br.amplitudes[n];
                }
            }
        }
        clamp_nonnegative(acc.re / norm, "photon number")
    }

    /// Photon numbers of all modes in one pass.
    pub fn photon_numbers(&self) -> Result<Vec<f64>> {
        let norm = self.norm()?;
        let mut acc = vec![C64::new(0.0, 0.0); self.n_modes];
        for br in [&self.plus, &self.minus] {
            let overlaps = gram(br, br);
            for l in 0..self.multiplicity {
                for n in 0..self.multiplicity {
                    let w = br.amplitudes[l].conj() * overlaps[(l, n)] * br.amplitudes[n];
                    for ((a, x), y) in acc.iter_mut().zip(br.row(l)).zip(br.row(n)) {
                        *a += w * x.conj() * y;
                    }
                }
            }
        }
        acc.into_iter()
            .map(|a| clamp_nonnegative(a.re / norm, "photon number"))
            .collect()
    }

    /// `<sx>`, `<sy>`, `<sz>` and the excited-state population.
    ///
    /// `sz` and `sy` swap `|+>` and `|->`, so they only see the cross
    /// overlaps `<f_l|g_n>`.
    pub fn qubit_observables(&self) -> Result<(f64, f64, f64)> {
        let norm = self.norm()?;
        let pop = |br: &Branch| -> f64 {
            let s = gram(br, br);
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..self.multiplicity {
                for n in 0..self.multiplicity {
                    acc += br.amplitudes[l].conj() * br.amplitudes[n] * s[(l, n)];
                }
            }
            acc.re
        };
        let sx = (pop(&self.plus) - pop(&self.minus)) / norm;
        let cross = self.cross_amplitude(false);
        let sz = 2.0 * cross.re / norm;
        let sy = -2.0 * cross.im / norm;
        Ok((sx, sy, sz))
    }

    /// `sum_ln A_l* B_n <f_l|g_n>`, or with `g_n -> -g_n` when `flip` is set.
    fn cross_amplitude(&self, flip: bool) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        let mut flipped = vec![C64::new(0.0, 0.0); self.n_modes];
        for n in 0..self.multiplicity {
            for (d, g) in flipped.iter_mut().zip(self.minus.row(n)) {
                *d = g * sign;
            }
            for l in 0..self.multiplicity {
                acc += self.plus.amplitudes[l].conj()
                    * self.minus.amplitudes[n]
                    * coherent_overlap(self.plus.row(l), &flipped);
            }
        }
        acc
    }

    /// `<sz exp(i pi sum_j b_j^+ b_j)>`; the photon parity maps `|d>` to `|-d>`.
    pub fn parity_expectation(&self) -> Result<f64> {
        let norm = self.norm()?;
        Ok(2.0 * self.cross_amplitude(true).re / norm)
    }

    /// `<H>`.
    pub fn energy(&self, sys: &System) -> Result<f64> {
        self.check_system(sys)?;
        let norm = self.norm()?;
        let mut acc = 0.0;
        for (br, sign) in [(&self.plus, 1.0), (&self.minus, -1.0)] {
            let p = PairSums::new(br, br, sys, false);
            let mut e = C64::new(0.0, 0.0);
            for l in 0..self.multiplicity {
                for n in 0..self.multiplicity {
                    e += br.amplitudes[l].conj() * br.amplitudes[n] * p.s[(l, n)] * p.bath_energy(l, n, sign);
                }
            }
            acc += e.re;
        }
        acc += sys.omega0 * self.cross_amplitude(false).re;
        Ok(acc / norm)
    }

    /// `<H^2>`, assembled from per-pair mode sums in `O(M^2 N)`.
    pub fn h_squared(&self, sys: &System) -> Result<f64> {
        self.check_system(sys)?;
        let norm = self.norm()?;
        let quarter_w0 = 0.25 * sys.omega0 * sys.omega0;
        let mut acc = 0.0;
        for (br, sign) in [(&self.plus, 1.0), (&self.minus, -1.0)] {
            let p = PairSums::new(br, br, sys, true);
            let mut e = C64::new(0.0, 0.0);
            for l in 0..self.multiplicity {
                for n in 0..self.multiplicity {
                    let h2 = p.bath_energy_squared(l, n, sign) + quarter_w0;
                    e += br.amplitudes[l].conj() * br.amplitudes[n] * p.s[(l, n)] * h2;
                }
            }
            acc += e.re;
        }
        // cross terms: (w0/2) <f_l|h_+ + h_-|g_n> = w0 <f_l|N|g_n>
        let p = PairSums::new(&self.plus, &self.minus, sys, false);
        let mut cross = C64::new(0.0, 0.0);
        for l in 0..self.multiplicity {
            for n in 0..self.multiplicity {
                cross += self.plus.amplitudes[l].conj()
                    * self.minus.amplitudes[n]
                    * p.s[(l, n)]
                    * p.wdot[(l, n)];
            }
        }
        acc += 2.0 * sys.omega0 * cross.re;
        let h2 = acc / norm;
        let e = self.energy(sys)?;
        let var = h2 - e * e;
        if var < -1e-9 * h2.abs().max(1.0) {
            return Err(Error::Consistency(format!("negative energy variance {var:e}")));
        }
        Ok(h2)
    }

    /// Qubit observables together with norm, energy and parity.
    pub fn observables(&self, sys: &System) -> Result<ObservableSet> {
        let (sigma_x, sigma_y, sigma_z) = self.qubit_observables()?;
        Ok(ObservableSet {
            sigma_x,
            sigma_y,
            sigma_z,
            excited_population: 0.5 * (1.0 + sigma_z),
            norm: self.norm()?,
            energy: self.energy(sys)?,
            parity: self.parity_expectation()?,
        })
    }

    fn check_system(&self, sys: &System) -> Result<()> {
        if sys.n_modes() != self.n_modes {
            return Err(Error::InvalidParameter(format!(
                "state has {} modes but the system has {}",
                self.n_modes,
                sys.n_modes()
            )));
        }
        Ok(())
    }

    /// Self-describing JSON snapshot; complex numbers are `[re, im]` pairs.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        let m = s.multiplicity;
        let ok = m >= 1
            && s.n_modes >= 1
            && [&s.plus, &s.minus].iter().all(|b| {
                b.amplitudes.len() == m && b.displacements.len() == m * s.n_modes
            });
        if !ok {
            return Err(Error::InvalidParameter("snapshot dimensions are inconsistent".into()));
        }
        Ok(s)
    }
}

/// Spec-level constructor: `|e>|0_c>|0>` over the cavity plus `bath`.
pub fn initial_state(
    multiplicity: usize,
    bath: &DiscretizedBath,
    noise_scale: f64,
    seed: u64,
) -> Result<MultiD1State> {
    MultiD1State::initial(multiplicity, bath.n_modes + 1, noise_scale, seed)
}

pub(crate) fn clamp_nonnegative(v: f64, what: &str) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!("{what} is negative: {v:e}")))
    }
}

/// Overlap matrices `S^(f,f)` and `S^(g,g)` of the two branches.
pub fn gram_matrices(state: &MultiD1State) -> [DMatrix<C64>; 2] {
    [gram(&state.plus, &state.plus), gram(&state.minus, &state.minus)]
}

/// Overlap matrix `S_ln = <x_l|y_n>`.
pub(crate) fn gram(x: &Branch, y: &Branch) -> DMatrix<C64> {
    let m = x.amplitudes.len();
    DMatrix::from_fn(m, y.amplitudes.len(), |l, n| coherent_overlap(x.row(l), y.row(n)))
}

/// Mode sums between the bra components `x_l` and ket components `y_n`.
///
/// With `u = x_l*`, `v = y_n`, `c` the couplings and `w` the frequencies:
/// `dot = sum u v`, `wdot = sum w u v`, `cbra = sum c u`, `cket = sum c v`
/// and, for `<H^2>`, `w2dot = sum w^2 u v`, `cwbra`, `cwket`.
pub(crate) struct PairSums {
    pub s: DMatrix<C64>,
    pub dot: DMatrix<C64>,
    pub wdot: DMatrix<C64>,
    pub w2dot: Option<DMatrix<C64>>,
    pub cbra: Vec<C64>,
    pub cket: Vec<C64>,
    pub cwbra: Vec<C64>,
    pub cwket: Vec<C64>,
    pub c2: f64,
}

impl PairSums {
    pub fn new(x: &Branch, y: &Branch, sys: &System, second_order: bool) -> Self {
        let m = x.amplitudes.len();
        let w = &sys.frequencies;
        let c = &sys.couplings;
        let mut dot = DMatrix::zeros(m, m);
        let mut wdot = DMatrix::zeros(m, m);
        let mut w2dot = second_order.then(|| DMatrix::zeros(m, m));
        for l in 0..m {
            let xl = x.row(l);
            for n in 0..m {
                let yn = y.row(n);
                let (mut d, mut wd, mut w2d) = (C64::default(), C64::default(), C64::default());
                for j in 0..w.len() {
                    let t = xl[j].conj() * yn[j];
                    d += t;
                    wd += t * w[j];
                    if second_order {
                        w2d += t * (w[j] * w[j]);
                    }
                }
                dot[(l, n)] = d;
                wdot[(l, n)] = wd;
                if let Some(m2) = w2dot.as_mut() {
                    m2[(l, n)] = w2d;
                }
            }
        }
        let norms_x: Vec<f64> = (0..m).map(|l| sq_norm(x.row(l))).collect();
        let norms_y: Vec<f64> = (0..m).map(|n| sq_norm(y.row(n))).collect();
        let s = DMatrix::from_fn(m, m, |l, n| (dot[(l, n)] - 0.5 * (norms_x[l] + norms_y[n])).exp());
        let weighted = |b: &Branch, conj: bool, f: &dyn Fn(usize) -> f64| -> Vec<C64> {
            (0..m)
                .map(|n| {
                    b.row(n)
                        .iter()
                        .enumerate()
                        .map(|(j, z)| if conj { z.conj() } else { *z } * f(j))
                        .sum()
                })
                .collect()
        };
        let cj = |j: usize| c[j];
        let cwj = |j: usize| c[j] * w[j];
        Self {
            s,
            dot,
            wdot,
            w2dot,
            cbra: weighted(x, true, &cj),
            cket: weighted(y, false, &cj),
            cwbra: if second_order { weighted(x, true, &cwj) } else { Vec::new() },
            cwket: if second_order { weighted(y, false, &cwj) } else { Vec::new() },
            c2: c.iter().map(|v| v * v).sum(),
        }
    }

    /// `<x_l|h_s|y_n> / <x_l|y_n>` with
    /// `h_s = sum_j w_j b_j^+ b_j + (s/2) sum_j c_j (b_j + b_j^+)`.
    #[inline]
    pub fn bath_energy(&self, l: usize, n: usize, sign: f64) -> C64 {
        self.wdot[(l, n)] + 0.5 * sign * (self.cbra[l] + self.cket[n])
    }

    /// `<x_l|h_s^2|y_n> / <x_l|y_n>`, from normal ordering:
    /// `E^2 + sum w^2 u v + (s/2) sum c w (u + v) + (1/4) sum c^2`.
    #[inline]
    pub fn bath_energy_squared(&self, l: usize, n: usize, sign: f64) -> C64 {
        let e = self.bath_energy(l, n, sign);
        let w2 = self.w2dot.as_ref().expect("second-order sums requested")[(l, n)];
        e * e + w2 + 0.5 * sign * (self.cwbra[l] + self.cwket[n]) + 0.25 * self.c2
    }
}

#[inline]
pub(crate) fn sq_norm(z: &[C64]) -> f64 {
    z.iter().map(|v| v.norm_sqr()).sum()
}
