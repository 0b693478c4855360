//! Peak positions and widths of the closed-form spectra.
//!
//! usage: line_shapes [ALPHA] [LAMBDA_C...]
//!
//! Spectra are per bath mode of the 500-mode bath; set `PER_FREQUENCY=1`
//! for photon numbers per unit frequency.

use davydov::analytic::{default_grid, rwa_shift, trwa_shift};
use davydov::spectrum::DEFAULT_PEAK_THRESHOLD;
use davydov::{polariton_poles, rwa_spectrum, solve_eta, trwa_spectrum, Evaluation, ModelParams};

fn main() -> davydov::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let alpha = args.first().copied().unwrap_or(0.1);
    let couplings = if args.len() > 1 { args[1..].to_vec() } else { vec![0.0, 0.1, 0.3, 0.5] };
    let grid = default_grid(3.0, 2000);
    let eval = if std::env::var_os("PER_FREQUENCY").is_some() {
        Evaluation::Continuum(&grid)
    } else {
        Evaluation::PerMode { grid: &grid, n_modes: 500, omega_max: 20.0 }
    };
    for lc in couplings {
        let p = ModelParams::new(1.0, lc, alpha, 5.0)?;
        let eta = solve_eta(&p)?;
        println!(
            "lambda_c={lc} alpha={alpha} eta={eta:.6} shift_trwa(1)={:.5} shift_rwa(1)={:.5}",
            trwa_shift(1.0, &p, eta)?,
            rwa_shift(1.0, &p)?
        );
        for s in [
            trwa_spectrum(&p, eval)?,
            rwa_spectrum(&p, eval)?,
        ] {
            for pk in s.peaks(DEFAULT_PEAK_THRESHOLD) {
                println!(
                    "  {:5} peak {:.4} height {:.4e} fwhm {:?} (left {:?}, right {:?})",
                    s.method().name(),
                    pk.position,
                    pk.height,
                    pk.fwhm(),
                    pk.left_half_width,
                    pk.right_half_width
                );
            }
        }
        if lc > 0.0 {
            let poles = polariton_poles(&p)?;
            println!("  poles {:?} widths {:?}", poles.poles, poles.widths());
        }
    }
    Ok(())
}
