mod common;

use common::pv;
use davydov::analytic::{
    default_grid, eta_rhs, mode_spacing, principal_value, reduced_trwa_spectrum, TrwaQuantities,
};
use davydov::spectrum::DEFAULT_PEAK_THRESHOLD;
use davydov::{
    discretize_bath, polariton_poles, rwa_rate, rwa_shift, rwa_spectrum, solve_eta, trwa_rate,
    trwa_shift, trwa_spectrum, Evaluation, ModelParams,
};
use proptest::prelude::*;

fn params(lc: f64, alpha: f64) -> ModelParams {
    ModelParams::new(1.0, lc, alpha, 5.0).unwrap()
}

/// Plain bisection on `eta - rhs(eta)` with the reservoir integral done by
/// the test-side Simpson rule.
fn eta_by_bisection(p: &ModelParams) -> f64 {
    let rhs = |eta: f64| {
        let reservoir = pv::adaptive_simpson(
            |x| pv::ohmic(p.alpha, p.omega_cut, x) / ((x + eta) * (x + eta)),
            0.0,
            400.0,
            1e-13,
        );
        let cav = p.lambda_c / (p.omega_c + eta);
        (-0.5 * cav * cav - 0.5 * reservoir).exp()
    };
    let (mut lo, mut hi) = (1e-9, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid - rhs(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn eta_matches_bisection_oracle() {
    for (lc, a) in [(0.0, 0.1), (0.5, 0.2), (0.1, 0.05), (0.3, 0.1)] {
        let p = params(lc, a);
        let eta = solve_eta(&p).unwrap();
        let oracle = eta_by_bisection(&p);
        assert!((eta - oracle).abs() < 1e-9, "lc={lc} a={a}: {eta} vs {oracle}");
        assert!((eta - eta_rhs(&p, eta)).abs() < 1e-10);
    }
}

#[test]
fn eta_decreases_with_either_coupling() {
    let couplings = [0.0, 0.1, 0.3, 0.5];
    let alphas = [0.0, 0.05, 0.1, 0.2];
    for &a in &alphas {
        let etas: Vec<f64> = couplings.iter().map(|&lc| solve_eta(&params(lc, a)).unwrap()).collect();
        assert!(etas.windows(2).all(|w| w[1] < w[0]), "alpha={a}: {etas:?}");
    }
    for &lc in &couplings {
        let etas: Vec<f64> = alphas.iter().map(|&a| solve_eta(&params(lc, a)).unwrap()).collect();
        assert!(etas.windows(2).all(|w| w[1] < w[0]), "lc={lc}: {etas:?}");
    }
}

#[test]
fn eta_residual_changes_sign_once() {
    for (lc, a) in [(0.0, 0.05), (0.1, 0.1), (0.5, 0.2), (0.5, 0.3)] {
        let p = params(lc, a);
        let signs: Vec<bool> = (1..=400)
            .map(|i| {
                let eta = i as f64 / 400.0;
                eta - eta_rhs(&p, eta) > 0.0
            })
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1, "lc={lc} a={a}");
    }
}

#[test]
fn level_shift_matches_closed_form() {
    // J/(w - x) kernel: alpha * 2 * [ -c + w e^{-w/c} Ei(w/c) ]
    for omega in [0.1, 0.5, 1.0, 1.7, 3.0, 12.0, 55.0] {
        let p = params(0.0, 0.1);
        let exact = 2.0 * p.alpha * pv::ohmic_kernel_closed_form(omega, p.omega_cut);
        let ours = 4.0 * rwa_shift(omega, &p).unwrap();
        assert!(
            (ours - exact).abs() <= 1e-9 * exact.abs(),
            "omega={omega}: {ours} vs {exact}"
        );
    }
}

#[test]
fn trwa_shift_matches_exclusion_oracle() {
    for (omega, eta) in [(0.3, 0.9), (0.92, 0.92), (1.0, 0.8), (2.5, 0.95)] {
        let p = params(0.0, 0.1);
        let h = |x: f64| (eta / (eta + x)).powi(2) * pv::ohmic(p.alpha, p.omega_cut, x);
        let oracle = pv::principal_value(h, omega, 1e-3, 400.0);
        let ours = trwa_shift(omega, &p, eta).unwrap();
        assert!((ours - oracle).abs() <= 1e-6 * oracle.abs(), "{ours} vs {oracle}");
    }
}

#[test]
fn pv_tail_beyond_forty_is_not_negligible() {
    // the part of the Ohmic kernel integral past 8 cutoffs is ~3e-4 relative,
    // so the evaluator has to keep it
    let p = params(0.0, 0.1);
    let full = principal_value(|x| pv::ohmic(p.alpha, p.omega_cut, x), 1.0).unwrap();
    let tail = pv::adaptive_simpson(|x| pv::ohmic(p.alpha, p.omega_cut, x) / (1.0 - x), 40.0, 400.0, 1e-15);
    assert!(tail.abs() / full.abs() > 1e-5);
    let exact = 2.0 * p.alpha * pv::ohmic_kernel_closed_form(1.0, p.omega_cut);
    assert!((full - exact).abs() < 1e-10 * exact.abs());
}

#[test]
fn renormalized_rate_equals_rwa_rate_at_renormalized_frequency() {
    for a in [0.05, 0.1, 0.2] {
        let p = params(0.0, a);
        let eta = solve_eta(&p).unwrap();
        let (t, r) = (trwa_rate(eta, &p, eta), rwa_rate(eta, &p));
        assert!((t - r).abs() <= 1e-14 * r);
    }
}

#[test]
fn shift_ordering_near_bare_frequency() {
    for a in [0.05, 0.1, 0.2] {
        let p = params(0.0, a);
        let eta = solve_eta(&p).unwrap();
        for omega in [0.9, 1.0, 1.1] {
            let tilde = trwa_shift(omega, &p, eta).unwrap();
            let bare = rwa_shift(omega, &p).unwrap();
            assert!(0.0 > tilde && tilde > bare, "a={a} w={omega}: {tilde} {bare}");
        }
    }
}

#[test]
fn reduced_trwa_reproduces_rwa() {
    let grid = default_grid(3.0, 2000);
    for (lc, a) in [(0.0, 0.1), (0.1, 0.05), (0.3, 0.2), (0.5, 0.1)] {
        let p = params(lc, a);
        let native = rwa_spectrum(&p, Evaluation::Continuum(&grid)).unwrap();
        let reduced = reduced_trwa_spectrum(&p, Evaluation::Continuum(&grid)).unwrap();
        for (x, y) in native.values.iter().zip(&reduced.values) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(*y), "{x} vs {y}");
        }
    }
}

#[test]
fn discrete_and_continuum_measures_agree_on_mode_density() {
    // on the discretized bath lambda_k^2 = J(w_k) dw_k, so the ratio of the two
    // evaluations is the local mode spacing
    let p = params(0.1, 0.1);
    let bath = discretize_bath(&p, 500, 20.0).unwrap();
    let disc = trwa_spectrum(&p, Evaluation::Discrete(&bath)).unwrap();
    let cont = trwa_spectrum(&p, Evaluation::Continuum(&bath.frequencies)).unwrap();
    let spacing = |w: f64| {
        let c = p.omega_cut;
        c * (1.0 - (-20.0 / c).exp()) / 500.0 * (w / c).exp()
    };
    for k in (0..500).step_by(37) {
        let w = bath.frequencies[k];
        if cont.values[k] > 0.0 {
            let ratio = disc.values[k] / cont.values[k];
            assert!((ratio / spacing(w) - 1.0).abs() < 1e-12, "k={k}");
        }
    }
    assert_eq!(disc.metadata.measure, "discrete");
    assert_eq!(cont.metadata.measure, "per-unit-frequency");
}

#[test]
fn per_mode_measure_interpolates_the_discrete_spectrum() {
    let p = params(0.3, 0.1);
    let bath = discretize_bath(&p, 500, 20.0).unwrap();
    let eval = Evaluation::PerMode { grid: &bath.frequencies, n_modes: 500, omega_max: 20.0 };
    for (disc, fine) in [
        (trwa_spectrum(&p, Evaluation::Discrete(&bath)).unwrap(), trwa_spectrum(&p, eval).unwrap()),
        (rwa_spectrum(&p, Evaluation::Discrete(&bath)).unwrap(), rwa_spectrum(&p, eval).unwrap()),
    ] {
        for (a, b) in disc.values.iter().zip(&fine.values) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs {b}");
        }
        assert_eq!(fine.metadata.measure, "per-mode");
    }
    // the local spacing against actual neighbouring modes
    for k in [10, 100, 300] {
        let (lo, hi) = (bath.frequencies[k], bath.frequencies[k + 1]);
        let s = mode_spacing(0.5 * (lo + hi), p.omega_cut, 500, 20.0);
        assert!(((hi - lo) / s - 1.0).abs() < 1e-4);
    }
    let beyond = default_grid(25.0, 100);
    assert!(trwa_spectrum(&p, Evaluation::PerMode { grid: &beyond, n_modes: 500, omega_max: 20.0 }).is_err());
}

#[test]
fn two_lines_with_broad_low_frequency_peak() {
    let grid = default_grid(3.0, 2000);
    for a in [0.05, 0.1, 0.2] {
        let s = trwa_spectrum(&params(0.1, a), Evaluation::Continuum(&grid)).unwrap();
        let peaks = s.peaks(DEFAULT_PEAK_THRESHOLD);
        assert_eq!(peaks.len(), 2, "alpha={a}");
        assert!(peaks[0].fwhm().unwrap() > peaks[1].fwhm().unwrap());
    }
}

#[test]
fn rwa_peak_below_trwa_peak_without_cavity() {
    let grid = default_grid(3.0, 2000);
    for a in [0.05, 0.1, 0.2] {
        let p = params(0.0, a);
        let t = trwa_spectrum(&p, Evaluation::Continuum(&grid)).unwrap().peaks(0.05);
        let r = rwa_spectrum(&p, Evaluation::Continuum(&grid)).unwrap().peaks(0.05);
        assert_eq!((t.len(), r.len()), (1, 1));
        assert!(r[0].position < t[0].position && t[0].position < 1.0);
    }
}

#[test]
fn poles_track_the_broad_line_and_equalize() {
    let grid = default_grid(3.0, 20000);
    let ratio = |lc: f64| {
        let poles = polariton_poles(&params(lc, 0.1)).unwrap();
        let [w0, w1] = poles.widths();
        (w0, w0 / w1)
    };
    let (broad, weak) = ratio(0.1);
    let (_, strong) = ratio(0.5);
    assert!(weak > 5.0, "pole widths should differ markedly: {weak}");
    assert!(strong < 2.5 && strong < weak / 3.0);
    // the narrow line sits next to the spectral zero at the cavity frequency,
    // so only the broad one is compared with the measured width
    let s = trwa_spectrum(&params(0.1, 0.1), Evaluation::Continuum(&grid)).unwrap();
    let fitted = s.peaks(0.05)[0].fwhm().unwrap();
    assert!((broad - fitted).abs() < 0.3 * fitted, "{broad} vs {fitted}");
}

#[test]
fn quantities_follow_the_definitions() {
    let p = params(0.3, 0.1);
    let q = TrwaQuantities::new(&p).unwrap();
    let e = q.eta;
    assert!((q.lambda_tilde_c - e * 0.3 / (e + 1.0)).abs() < 1e-15);
    assert!((q.displacement_parameter(2.0) - 2.0 / (e + 2.0)).abs() < 1e-15);
    assert!((q.renormalization(e) - 0.25).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectra_are_nonnegative(lc in 0.0f64..0.6, a in 0.0f64..0.3, wc in 0.5f64..1.5) {
        let p = ModelParams::new(wc, lc, a, 5.0).unwrap();
        let grid = default_grid(3.0, 300);
        for s in [
            trwa_spectrum(&p, Evaluation::Continuum(&grid)).unwrap(),
            rwa_spectrum(&p, Evaluation::Continuum(&grid)).unwrap(),
        ] {
            prop_assert!(s.values.iter().all(|v| *v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn trwa_vanishes_at_cavity_frequency(lc in 0.01f64..0.6, a in 0.0f64..0.3, wc in 0.3f64..2.5) {
        let p = ModelParams::new(wc, lc, a, 5.0).unwrap();
        let grid = [0.5 * wc, wc, 1.2 * wc];
        let s = trwa_spectrum(&p, Evaluation::Continuum(&grid)).unwrap();
        let scale = s.values[0].max(s.values[2]);
        prop_assert!(s.values[1] <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn shift_linear_in_alpha(omega in 0.05f64..3.0, a in 0.01f64..0.3, eta in 0.5f64..1.0) {
        let one = trwa_shift(omega, &params(0.0, a), eta).unwrap();
        let two = trwa_shift(omega, &params(0.0, 2.0 * a), eta).unwrap();
        prop_assert!((two / one - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rates_nonnegative(omega in 0.0f64..50.0, a in 0.0f64..0.5, eta in 0.1f64..1.0) {
        prop_assert!(trwa_rate(omega, &params(0.0, a), eta) >= 0.0);
        prop_assert!(rwa_rate(omega, &params(0.0, a)) >= 0.0);
    }
}
