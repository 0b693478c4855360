//! Adaptive Gauss-Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod rule on `[a, b]`: `(estimate, error estimate)`.
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        // Gauss nodes are the odd Kronrod nodes
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol` or relative
/// tolerance `rel_tol`, bisecting the worst interval first.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut segs = vec![{
        let (v, e) = kronrod(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
    // sum small to large
    let mut vals: Vec<f64> = segs.iter().map(|s| s.2).collect();
    vals.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    vals.iter().sum()
}

/// `int_a^inf f` via `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            let x = a + t / u;
            let v = f(x) / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exponentials() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14);
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let v = integrate(|x| (-x).exp(), 0.0, 30.0, 1e-14, 1e-13);
        assert!((v - (1.0 - (-30.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite() {
        let v = integrate_to_infinity(|x| x * (-x / 5.0).exp(), 0.0, 1e-13, 1e-12);
        assert!((v - 25.0).abs() < 1e-9);
        let v = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0, 1e-13, 1e-12);
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn peaked_integrand() {
        let eps: f64 = 1e-3;
        let v = integrate(|x| eps / (x * x + eps * eps), -1.0, 1.0, 1e-13, 1e-12);
        assert!((v - 2.0 * (1.0 / eps).atan()).abs() < 1e-9);
    }
}
