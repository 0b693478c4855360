//! Dirac-Frenkel equations of motion for the multi-D1 state, RK4
//! propagation and the deviation `sigma^2(t)`.
//!
//! The state is linear in `A_n`, `B_n` once the Gaussian prefactor of each
//! coherent state is absorbed, which makes it holomorphic in the parameters.
//! Stationarity `<dD/dtheta*|i d_t - H|D> = 0` then becomes the linear
//! system `L theta' = -i <dD/dtheta*|H|D>` with `L` the Gram matrix of the
//! tangent vectors
//!
//! ```text
//! |s_n>|z_n>              (amplitude direction, unknown alpha_n)
//! A_n |s_n> b_j^+ |z_n>   (displacement direction, unknown z'_nj)
//! ```
//!
//! where `alpha_n = A'_n - A_n Re(z_n* . z'_n)` accounts for the moving
//! normalization. `L` is block diagonal in the two `sx` branches. Inside a
//! branch the displacement block is `G (x) 1 + low rank`, with
//! `G_cn = A_c* A_n <z_c|z_n>`, so the solve reduces exactly to a dense
//! `M + M^2` system independent of the number of modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ansatz::{clamp_nonnegative, Branch, MultiD1State, ObservableSet, PairSums};
use crate::error::{Error, Result};
use crate::model::System;

/// Default Tikhonov shift, relative to the mean diagonal of `L`.
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

/// Time derivatives of all variational parameters, same layout as the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub plus: Branch,
    pub minus: Branch,
}

#[derive(Debug, Clone)]
pub struct EomSolveReport {
    pub derivative: Derivative,
    /// Largest condition number among the regularized Hermitian blocks
    /// (`S + eps` and `G + eps`) of both branches.
    pub gram_condition: f64,
    /// Absolute shift added to the diagonal of `L`.
    pub regularization_used: f64,
}

/// One branch of the equations: amplitudes and displacements on `|s>` plus
/// the opposite branch it couples to through `w0 sz / 2`.
struct BranchView<'a> {
    this: &'a Branch,
    other: &'a Branch,
    sign: f64,
}

/// Right-hand side `h = <dD/dtheta*|H|D>` of one branch.
struct Rhs {
    amp: Vec<C64>,
    /// `M x n_modes`, row-major like the displacements.
    disp: DMatrix<C64>,
}

fn displacement_matrix(b: &Branch, n_modes: usize) -> DMatrix<C64> {
    DMatrix::from_row_slice(b.amplitudes.len(), n_modes, &b.displacements)
}

fn branch_rhs(v: &BranchView, sys: &System, same: &PairSums, cross: &PairSums) -> Rhs {
    let m = v.this.amplitudes.len();
    let nm = sys.n_modes();
    let a = &v.this.amplitudes;
    let abar = &v.other.amplitudes;
    let half_w0 = 0.5 * sys.omega0;
    // weights of <s z_c| h_s |s z_n> and <s z_c| (w0/2) |-s zbar_n>
    let mut we = DMatrix::zeros(m, m);
    let mut ws = DMatrix::zeros(m, m);
    let mut wx = DMatrix::zeros(m, m);
    let mut amp = vec![C64::default(); m];
    for c in 0..m {
        for n in 0..m {
            let s = a[n] * same.s[(c, n)];
            let e = same.bath_energy(c, n, v.sign);
            ws[(c, n)] = s;
            we[(c, n)] = s * e;
            wx[(c, n)] = abar[n] * cross.s[(c, n)] * half_w0;
            amp[c] += s * e + wx[(c, n)];
        }
    }
    let z = displacement_matrix(v.this, nm);
    let zbar = displacement_matrix(v.other, nm);
    let mut disp = &we * &z + &wx * &zbar;
    let sz = &ws * &z;
    for c in 0..m {
        let wsum: C64 = ws.row(c).iter().sum();
        let ac = a[c].conj();
        for i in 0..nm {
            let val = disp[(c, i)]
                + sz[(c, i)] * sys.frequencies[i]
                + wsum * (0.5 * v.sign * sys.couplings[i]);
            disp[(c, i)] = ac * val;
        }
    }
    Rhs { amp, disp }
}

fn hermitian_condition(m: &DMatrix<C64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e.abs()), hi.max(e.abs())));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Solve one branch of `(L + eps) x = -i h` via the reduced system in
/// `(alpha, Q)`, `Q_cn = sum_j z_cj* z'_nj`.
///
/// Returns `(alpha, z', condition)`.
fn solve_branch(
    v: &BranchView,
    same: &PairSums,
    rhs: &Rhs,
    eps: f64,
    n_modes: usize,
) -> Result<(Vec<C64>, DMatrix<C64>, f64)> {
    let m = v.this.amplitudes.len();
    let a = &v.this.amplitudes;
    let s = &same.s;
    let y = &same.dot;
    let neg_i = C64::new(0.0, -1.0);
    let ra: Vec<C64> = rhs.amp.iter().map(|h| neg_i * h).collect();
    let rz = rhs.disp.map(|h| neg_i * h);

    let eye = DMatrix::<C64>::identity(m, m) * C64::new(eps, 0.0);
    let g = DMatrix::from_fn(m, m, |c, n| a[c].conj() * a[n] * s[(c, n)]) + &eye;
    let s_reg = s + &eye;
    let condition = hermitian_condition(&g).max(hermitian_condition(&s_reg));
    let ginv = g
        .clone()
        .cholesky()
        .map(|ch| ch.inverse())
        .or_else(|| g.clone().try_inverse())
        .ok_or_else(|| Error::Solver("regularized displacement Gram matrix is singular".into()))?;
    // F = Ginv diag(A*) S
    let as_mat = DMatrix::from_fn(m, m, |e, n| a[e].conj() * s[(e, n)]);
    let f = &ginv * &as_mat;
    let z = displacement_matrix(v.this, n_modes);
    let zc = z.map(|v| v.conj());
    // R0_cm = sum_j z_cj* rz_mj ; RHS of the Q equations is R0 Ginv^T
    let r0 = &zc * rz.transpose();
    let q_rhs = &r0 * ginv.transpose();

    let dim = m + m * m;
    let qidx = |c: usize, d: usize| m + c * m + d;
    let mut sys_mat = DMatrix::<C64>::zeros(dim, dim);
    let mut b = DVector::<C64>::zeros(dim);
    // amplitude rows: sum_n S_cn (alpha_n + A_n Q_cn) + eps alpha_c = ra_c
    for c in 0..m {
        for n in 0..m {
            sys_mat[(c, n)] += s_reg[(c, n)];
            sys_mat[(c, qidx(c, n))] += s[(c, n)] * a[n];
        }
        b[c] = ra[c];
    }
    // Q rows: Q_cd + sum_n Y_cn F_dn alpha_n + sum_{e,n} Ginv_de Y_cn G_en Q_en = (R0 Ginv^T)_cd
    let g0 = &g - &eye;
    for c in 0..m {
        for d in 0..m {
            let row = qidx(c, d);
            sys_mat[(row, row)] += C64::new(1.0, 0.0);
            for n in 0..m {
                let ycn = y[(c, n)];
                sys_mat[(row, n)] += ycn * f[(d, n)];
                for e in 0..m {
                    sys_mat[(row, qidx(e, n))] += ginv[(d, e)] * ycn * g0[(e, n)];
                }
            }
            b[row] = q_rhs[(c, d)];
        }
    }
    let sol = sys_mat
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Solver("reduced equations of motion are singular".into()))?;
    let alpha: Vec<C64> = (0..m).map(|c| sol[c]).collect();
    // K_cn = A_c* S_cn (alpha_n + A_n Q_cn); z' = Ginv (rz - K z)
    let k = DMatrix::from_fn(m, m, |c, n| {
        a[c].conj() * s[(c, n)] * (alpha[n] + a[n] * sol[qidx(c, n)])
    });
    let zdot = &ginv * (rz - k * z);
    if alpha.iter().chain(zdot.iter()).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Solver("equations of motion produced non-finite derivatives".into()));
    }
    Ok((alpha, zdot, condition))
}

fn mean_diagonal(state: &MultiD1State) -> f64 {
    let m = state.multiplicity;
    let nm = state.n_modes as f64;
    let mut sum = 2.0 * m as f64;
    for br in [&state.plus, &state.minus] {
        for n in 0..m {
            let z2: f64 = br.row(n).iter().map(|z| z.norm_sqr()).sum();
            sum += br.amplitudes[n].norm_sqr() * (nm + z2);
        }
    }
    sum / (2.0 * m as f64 * (1.0 + nm))
}

/// Per-branch solution in the tangent-space variables `(alpha, z')`.
struct TangentSolution {
    alpha: [Vec<C64>; 2],
    zdot: [DMatrix<C64>; 2],
    condition: f64,
    eps: f64,
}

fn solve_tangent(state: &MultiD1State, sys: &System, eps_rel: f64) -> Result<TangentSolution> {
    if !(eps_rel >= 0.0) {
        return Err(Error::InvalidParameter(format!("regularization must be >= 0, got {eps_rel}")));
    }
    if sys.n_modes() != state.n_modes {
        return Err(Error::InvalidParameter("state and system mode counts differ".into()));
    }
    let eps = eps_rel * mean_diagonal(state);
    let views = [
        BranchView { this: &state.plus, other: &state.minus, sign: 1.0 },
        BranchView { this: &state.minus, other: &state.plus, sign: -1.0 },
    ];
    let solve = |v: &BranchView| {
        let same = PairSums::new(v.this, v.this, sys, false);
        let cross = PairSums::new(v.this, v.other, sys, false);
        let rhs = branch_rhs(v, sys, &same, &cross);
        solve_branch(v, &same, &rhs, eps, state.n_modes)
    };
    // the two spin branches decouple
    let (r0, r1) = rayon::join(|| solve(&views[0]), || solve(&views[1]));
    let ((a0, z0, c0), (a1, z1, c1)) = (r0?, r1?);
    Ok(TangentSolution {
        alpha: [a0, a1],
        zdot: [z0, z1],
        condition: c0.max(c1),
        eps,
    })
}

fn to_parameter_derivative(br: &Branch, alpha: &[C64], zdot: &DMatrix<C64>) -> Branch {
    let m = alpha.len();
    let nm = zdot.ncols();
    let mut out = Branch {
        amplitudes: vec![C64::default(); m],
        displacements: vec![C64::default(); m * nm],
    };
    for n in 0..m {
        let z = br.row(n);
        let mut re_dot = 0.0;
        for j in 0..nm {
            let zd = zdot[(n, j)];
            re_dot += (z[j].conj() * zd).re;
            out.displacements[n * nm + j] = zd;
        }
        out.amplitudes[n] = alpha[n] + br.amplitudes[n] * re_dot;
    }
    out
}

fn to_tangent(br: &Branch, d: &Branch) -> (Vec<C64>, DMatrix<C64>) {
    let m = br.amplitudes.len();
    let nm = br.displacements.len() / m;
    let zdot = DMatrix::from_row_slice(m, nm, &d.displacements);
    let alpha = (0..m)
        .map(|n| {
            let re_dot: f64 = br.row(n).iter().zip(d.row(n)).map(|(z, zd)| (z.conj() * zd).re).sum();
            d.amplitudes[n] - br.amplitudes[n] * re_dot
        })
        .collect();
    (alpha, zdot)
}

/// Assemble and solve the Dirac-Frenkel equations at `state`.
///
/// `regularization_eps` is relative to the mean diagonal of `L`.
pub fn assemble_eom(state: &MultiD1State, sys: &System, regularization_eps: f64) -> Result<EomSolveReport> {
    let t = solve_tangent(state, sys, regularization_eps)?;
    Ok(EomSolveReport {
        derivative: Derivative {
            plus: to_parameter_derivative(&state.plus, &t.alpha[0], &t.zdot[0]),
            minus: to_parameter_derivative(&state.minus, &t.alpha[1], &t.zdot[1]),
        },
        gram_condition: t.condition,
        regularization_used: t.eps,
    })
}

/// `<Dot D|Dot D>` restricted to one branch: `x^+ L x` for the tangent
/// vector `x = (alpha, z')`.
fn branch_tangent_norm(br: &Branch, alpha: &[C64], zdot: &DMatrix<C64>, same: &PairSums) -> f64 {
    let m = alpha.len();
    let a = &br.amplitudes;
    let nm = zdot.ncols();
    let z = DMatrix::from_row_slice(m, nm, &br.displacements);
    let zc = z.map(|v| v.conj());
    let zdc = zdot.map(|v| v.conj());
    let d1 = &zc * zdot.transpose(); // sum_j z_cj* z'_nj
    let d2 = &zdc * z.transpose(); // sum_j z'_cj* z_nj
    let d3 = &zdc * zdot.transpose();
    let mut acc = C64::default();
    for c in 0..m {
        for n in 0..m {
            let t = alpha[c].conj() * alpha[n]
                + alpha[c].conj() * a[n] * d1[(c, n)]
                + a[c].conj() * alpha[n] * d2[(c, n)]
                + a[c].conj() * a[n] * (d3[(c, n)] + d2[(c, n)] * d1[(c, n)]);
            acc += same.s[(c, n)] * t;
        }
    }
    acc.re
}

/// Squared residual `|(i d_t - H)|D>|^2 / (w0^2 <D|D>)` for the given
/// parameter derivatives.
///
/// Evaluated as `<H^2> + <Dot D|Dot D> - 2 Im <Dot D|H|D>`, which reduces to
/// `<H^2> - <Dot D|Dot D>` when the derivatives solve the unregularized
/// equations exactly and stays non-negative otherwise.
pub fn deviation(state: &MultiD1State, derivative: &Derivative, sys: &System) -> Result<f64> {
    let norm = state.norm()?;
    let h2 = state.h_squared(sys)? * norm;
    let mut tangent = 0.0;
    let mut overlap_h = 0.0;
    let views = [
        BranchView { this: &state.plus, other: &state.minus, sign: 1.0 },
        BranchView { this: &state.minus, other: &state.plus, sign: -1.0 },
    ];
    for (v, d) in views.iter().zip([&derivative.plus, &derivative.minus]) {
        let same = PairSums::new(v.this, v.this, sys, false);
        let cross = PairSums::new(v.this, v.other, sys, false);
        let rhs = branch_rhs(v, sys, &same, &cross);
        let (alpha, zdot) = to_tangent(v.this, d);
        tangent += branch_tangent_norm(v.this, &alpha, &zdot, &same);
        let mut xh = C64::default();
        for (x, h) in alpha.iter().zip(&rhs.amp) {
            xh += x.conj() * h;
        }
        for (x, h) in zdot.iter().zip(rhs.disp.iter()) {
            xh += x.conj() * h;
        }
        overlap_h += xh.im;
    }
    let sigma2 = (h2 + tangent - 2.0 * overlap_h) / (sys.omega0 * sys.omega0 * norm);
    if sigma2 < -1e-6 {
        return Err(Error::Consistency(format!("deviation is negative: {sigma2:e}")));
    }
    Ok(clamp_nonnegative(sigma2, "deviation").unwrap_or(0.0))
}

/// The paper-style form `(<H^2> - <Dot D|Dot D>) / w0^2`, normalized.
pub fn deviation_from_tangent_norm(state: &MultiD1State, derivative: &Derivative, sys: &System) -> Result<f64> {
    let norm = state.norm()?;
    let h2 = state.h_squared(sys)?;
    let mut tangent = 0.0;
    for (br, d) in [(&state.plus, &derivative.plus), (&state.minus, &derivative.minus)] {
        let same = PairSums::new(br, br, sys, false);
        let (alpha, zdot) = to_tangent(br, d);
        tangent += branch_tangent_norm(br, &alpha, &zdot, &same);
    }
    Ok((h2 - tangent / norm) / (sys.omega0 * sys.omega0))
}

/// `Re <D|Dot D>`, half the rate of change of the norm.
pub fn norm_rate(state: &MultiD1State, derivative: &Derivative) -> f64 {
    let mut acc = C64::default();
    for (br, d) in [(&state.plus, &derivative.plus), (&state.minus, &derivative.minus)] {
        let m = br.amplitudes.len();
        let (alpha, zdot) = to_tangent(br, d);
        for c in 0..m {
            for n in 0..m {
                let s = crate::ansatz::coherent_overlap(br.row(c), br.row(n));
                let zz: C64 = br.row(c).iter().enumerate().map(|(j, z)| z.conj() * zdot[(n, j)]).sum();
                acc += br.amplitudes[c].conj() * s * (alpha[n] + br.amplitudes[n] * zz);
            }
        }
    }
    acc.re
}

/// Dense `L` and `r = -i h` over all tangent directions, ordered
/// `[alpha_+ (M), z'_+ (M x N), alpha_- (M), z'_- (M x N)]`.
///
/// Quadratic in the number of modes; meant for diagnostics on small
/// systems.
pub fn assemble_dense(state: &MultiD1State, sys: &System) -> Result<(DMatrix<C64>, DVector<C64>)> {
    let m = state.multiplicity;
    let nm = state.n_modes;
    let block = m * (1 + nm);
    let mut l = DMatrix::zeros(2 * block, 2 * block);
    let mut r = DVector::zeros(2 * block);
    let views = [
        BranchView { this: &state.plus, other: &state.minus, sign: 1.0 },
        BranchView { this: &state.minus, other: &state.plus, sign: -1.0 },
    ];
    let neg_i = C64::new(0.0, -1.0);
    for (bi, v) in views.iter().enumerate() {
        let off = bi * block;
        let same = PairSums::new(v.this, v.this, sys, false);
        let cross = PairSums::new(v.this, v.other, sys, false);
        let rhs = branch_rhs(v, sys, &same, &cross);
        let a = &v.this.amplitudes;
        let zi = |c: usize, i: usize| off + m + c * nm + i;
        for c in 0..m {
            r[off + c] = neg_i * rhs.amp[c];
            for i in 0..nm {
                r[zi(c, i)] = neg_i * rhs.disp[(c, i)];
            }
            let zc = v.this.row(c);
            for n in 0..m {
                let s = same.s[(c, n)];
                let zn = v.this.row(n);
                l[(off + c, off + n)] = s;
                for j in 0..nm {
                    l[(off + c, zi(n, j))] = s * a[n] * zc[j].conj();
                    l[(zi(c, j), off + n)] = a[c].conj() * s * zn[j];
                }
                let g = a[c].conj() * a[n] * s;
                for i in 0..nm {
                    for j in 0..nm {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        l[(zi(c, i), zi(n, j))] = g * (zc[j].conj() * zn[i] + delta);
                    }
                }
            }
        }
    }
    Ok((l, r))
}

/// Flatten a derivative in the tangent variables, in `assemble_dense` order.
pub fn tangent_vector(state: &MultiD1State, derivative: &Derivative) -> DVector<C64> {
    let mut out = Vec::new();
    for (br, d) in [(&state.plus, &derivative.plus), (&state.minus, &derivative.minus)] {
        let (alpha, zdot) = to_tangent(br, d);
        out.extend(alpha);
        for c in 0..zdot.nrows() {
            out.extend(zdot.row(c).iter().copied());
        }
    }
    DVector::from_vec(out)
}

impl MultiD1State {
    /// `self + h * d`, time untouched.
    pub fn advanced(&self, d: &Derivative, h: f64) -> MultiD1State {
        MultiD1State {
            multiplicity: self.multiplicity,
            n_modes: self.n_modes,
            time: self.time,
            plus: self.plus.axpy(h, &d.plus),
            minus: self.minus.axpy(h, &d.minus),
        }
    }
}

impl Derivative {
    fn combine(parts: &[(&Derivative, f64)]) -> Derivative {
        let mut acc = parts[0].0.clone();
        acc.plus.scale(parts[0].1);
        acc.minus.scale(parts[0].1);
        for (d, w) in &parts[1..] {
            acc.plus = acc.plus.axpy(*w, &d.plus);
            acc.minus = acc.minus.axpy(*w, &d.minus);
        }
        acc
    }
}

/// One classic four-stage Runge-Kutta step; also returns the first-stage
/// report so callers can evaluate the deviation at the step start.
pub fn step_rk4_with_report(
    state: &MultiD1State,
    dt: f64,
    sys: &System,
    eps: f64,
) -> Result<(MultiD1State, EomSolveReport)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let k1 = assemble_eom(state, sys, eps)?;
    let k2 = assemble_eom(&state.advanced(&k1.derivative, 0.5 * dt), sys, eps)?;
    let k3 = assemble_eom(&state.advanced(&k2.derivative, 0.5 * dt), sys, eps)?;
    let k4 = assemble_eom(&state.advanced(&k3.derivative, dt), sys, eps)?;
    let slope = Derivative::combine(&[
        (&k1.derivative, 1.0 / 6.0),
        (&k2.derivative, 1.0 / 3.0),
        (&k3.derivative, 1.0 / 3.0),
        (&k4.derivative, 1.0 / 6.0),
    ]);
    let mut next = state.advanced(&slope, dt);
    next.time = state.time + dt;
    Ok((next, k1))
}

pub fn step_rk4(state: &MultiD1State, dt: f64, sys: &System, eps: f64) -> Result<MultiD1State> {
    step_rk4_with_report(state, dt, sys, eps).map(|(s, _)| s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagateOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Record observables every this many steps.
    pub output_stride: usize,
    pub regularization_eps: f64,
    /// Times at which full photon-number snapshots are taken (at most 10);
    /// the final time is always included.
    pub checkpoints: Vec<f64>,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            t_final: 300.0,
            dt: 0.01,
            output_stride: 10,
            regularization_eps: DEFAULT_REGULARIZATION,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhotonSnapshot {
    pub time: f64,
    /// Cavity first, then the reservoir modes.
    pub photon_numbers: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub observables: Vec<ObservableSet>,
    pub sigma2: Vec<f64>,
    /// Maximum of `sigma^2` over every integration step, not just the
    /// recorded ones.
    pub sigma2_max: f64,
    pub photon_numbers: Vec<PhotonSnapshot>,
    pub final_state: MultiD1State,
    /// Relative L1 change of the reservoir spectrum over the last tenth of
    /// the run; `None` if no snapshot was taken there.
    pub spectrum_drift: Option<f64>,
}

impl TrajectoryRecord {
    /// Reservoir part of the last photon-number snapshot.
    pub fn emission_spectrum(&self) -> Option<&[f64]> {
        self.photon_numbers.last().map(|s| &s.photon_numbers[1..])
    }

    /// Largest deviations of norm, energy and parity from their initial values.
    pub fn conservation_drift(&self) -> (f64, f64, f64) {
        let Some(first) = self.observables.first() else {
            return (0.0, 0.0, 0.0);
        };
        self.observables.iter().fold((0.0, 0.0, 0.0), |(n, e, p), o| {
            (
                f64::max(n, (o.norm - first.norm).abs()),
                f64::max(e, (o.energy - first.energy).abs()),
                f64::max(p, (o.parity - first.parity).abs()),
            )
        })
    }
}

/// Integrate from `initial` to `t_final` with fixed-step RK4.
///
/// A solver failure aborts the run; the error carries everything recorded
/// up to that point.
pub fn propagate(initial: &MultiD1State, sys: &System, opts: &PropagateOptions) -> Result<TrajectoryRecord> {
    if !(opts.t_final > 0.0 && opts.dt > 0.0) {
        return Err(Error::InvalidParameter("t_final and dt must be > 0".into()));
    }
    if opts.output_stride == 0 {
        return Err(Error::InvalidParameter("output_stride must be >= 1".into()));
    }
    if opts.checkpoints.len() > 10 {
        return Err(Error::InvalidParameter("at most 10 checkpoints".into()));
    }
    let n_steps = (opts.t_final / opts.dt).round() as usize;
    let t0 = initial.time;
    let step_of = |t: f64| (((t - t0) / opts.dt).round().max(0.0) as usize).min(n_steps);
    let mut snapshot_steps: Vec<usize> = opts.checkpoints.iter().map(|&t| step_of(t)).collect();
    // for the steady-state diagnostic
    let drift_step = step_of(t0 + 0.9 * opts.t_final);
    snapshot_steps.push(drift_step);
    snapshot_steps.push(n_steps);
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();

    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        observables: Vec::new(),
        sigma2: Vec::new(),
        sigma2_max: 0.0,
        photon_numbers: Vec::new(),
        final_state: initial.clone(),
        spectrum_drift: None,
    };
    let mut state = initial.clone();
    let mut drift_reference: Option<Vec<f64>> = None;
    let abort = |rec: &mut TrajectoryRecord, state: &MultiD1State, cause: Error| {
        rec.final_state = state.clone();
        Error::Aborted {
            time: state.time,
            cause: Box::new(cause),
            partial: Box::new(rec.clone()),
        }
    };
    for step in 0..=n_steps {
        let report = if step < n_steps {
            match step_rk4_with_report(&state, opts.dt, sys, opts.regularization_eps) {
                Ok((next, k1)) => Some((next, k1)),
                Err(e) => return Err(abort(&mut rec, &state, e)),
            }
        } else {
            None
        };
        let k1 = match &report {
            Some((_, k1)) => k1.derivative.clone(),
            None => match assemble_eom(&state, sys, opts.regularization_eps) {
                Ok(r) => r.derivative,
                Err(e) => return Err(abort(&mut rec, &state, e)),
            },
        };
        let sigma2 = match deviation(&state, &k1, sys) {
            Ok(v) => v,
            Err(e) => return Err(abort(&mut rec, &state, e)),
        };
        rec.sigma2_max = rec.sigma2_max.max(sigma2);
        if step % opts.output_stride == 0 || step == n_steps {
            match state.observables(sys) {
                Ok(o) => {
                    rec.times.push(state.time);
                    rec.observables.push(o);
                    rec.sigma2.push(sigma2);
                }
                Err(e) => return Err(abort(&mut rec, &state, e)),
            }
        }
        if snapshot_steps.binary_search(&step).is_ok() {
            let numbers = match state.photon_numbers() {
                Ok(n) => n,
                Err(e) => return Err(abort(&mut rec, &state, e)),
            };
            if step == drift_step {
                drift_reference = Some(numbers.clone());
            }
            if step == n_steps {
                if let Some(prev) = &drift_reference {
                    let diff: f64 = prev[1..].iter().zip(&numbers[1..]).map(|(a, b)| (a - b).abs()).sum();
                    let total: f64 = numbers[1..].iter().sum();
                    rec.spectrum_drift = Some(if total > 0.0 { diff / total } else { 0.0 });
                }
            }
            rec.photon_numbers.push(PhotonSnapshot {
                time: state.time,
                photon_numbers: numbers,
            });
        }
        if let Some((next, _)) = report {
            state = next;
        }
    }
    rec.final_state = state;
    Ok(rec)
}
