//! Principal values by symmetric exclusion, with an adaptive Simpson rule
//! written here so that nothing is shared with the library quadrature.

#![allow(dead_code)]

pub fn ohmic(alpha: f64, omega_cut: f64, x: f64) -> f64 {
    2.0 * alpha * x * (-x / omega_cut).exp()
}

fn simpson_step(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    (a, fa): (f64, f64),
    (b, fb): (f64, f64),
    (m, fm): (f64, f64),
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_step(a, fa, m, fm, flm);
    let right = simpson_step(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, (a, fa), (m, fm), (lm, flm), left, 0.5 * tol, depth - 1)
        + recurse(f, (m, fm), (b, fb), (rm, frm), right, 0.5 * tol, depth - 1)
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson_step(a, fa, b, fb, fm);
    recurse(&f, (a, fa), (b, fb), (m, fm), whole, tol, 48)
}

/// Integral of `h(x) / (omega - x)` over `[0, upper]` with `(omega - d, omega + d)`
/// cut out.
pub fn excluded<H: Fn(f64) -> f64>(h: &H, omega: f64, d: f64, upper: f64) -> f64 {
    let f = |x: f64| h(x) / (omega - x);
    let tol = 1e-13;
    let mut total = adaptive_simpson(f, 0.0, omega - d, tol);
    // graded pieces to the right of the hole
    let mut lo = omega + d;
    let mut width = d;
    while lo < upper {
        let hi = (lo + 10.0 * width).min(upper);
        total += adaptive_simpson(f, lo, hi, tol);
        width *= 10.0;
        lo = hi;
    }
    total
}

/// Symmetric exclusion extrapolated in the hole size: the leading error is
/// linear in `delta`, so `2 E(delta/2) - E(delta)` cancels it.
pub fn principal_value<H: Fn(f64) -> f64>(h: H, omega: f64, delta: f64, upper: f64) -> f64 {
    2.0 * excluded(&h, omega, 0.5 * delta, upper) - excluded(&h, omega, delta, upper)
}

/// Exponential integral `Ei(x)` for `0 < x < 40` by its power series.
pub fn ei(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..400 {
        term *= x / n as f64;
        let add = term / n as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    EULER + x.ln() + sum
}

/// `P int_0^inf x e^{-x/c} / (omega - x) dx = -c + omega e^{-omega/c} Ei(omega/c)`.
pub fn ohmic_kernel_closed_form(omega: f64, omega_cut: f64) -> f64 {
    -omega_cut + omega * (-omega / omega_cut).exp() * ei(omega / omega_cut)
}
