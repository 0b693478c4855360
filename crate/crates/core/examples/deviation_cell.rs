//! Propagate one (lambda_c, alpha, M) cell and print the deviation maximum.
//!
//! Usage: `deviation_cell LAMBDA_C ALPHA M [NB] [T_F] [DT] [SEED]`
//!
//! With `DUMP=path` the final spectrum is written next to the TRWA values
//! on the same modes.

use std::time::Instant;

use davydov::dynamics::{propagate, PropagateOptions};
use davydov::{discretize_bath, initial_state, trwa_spectrum, Evaluation, ModelParams, SpectrumResult, System};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let get = |i: usize, d: f64| args.get(i).map(|s| s.parse::<f64>()).transpose().map(|v| v.unwrap_or(d));
    let lambda_c = get(0, 0.0)?;
    let alpha = get(1, 0.05)?;
    let m = get(2, 3.0)? as usize;
    let nb = get(3, 500.0)? as usize;
    let t_final = get(4, 300.0)?;
    let dt = get(5, 0.01)?;
    let seed = get(6, 1.0)? as u64;
    let params = ModelParams::new(1.0, lambda_c, alpha, 5.0)?;
    let bath = discretize_bath(&params, nb, 20.0)?;
    let sys = System::new(&params, &bath);
    let s0 = initial_state(m, &bath, 1.0, seed)?;
    let opts = PropagateOptions { t_final, dt, output_stride: 1000, ..Default::default() };
    let start = Instant::now();
    let rec = propagate(&s0, &sys, &opts)?;
    for (t, (o, s2)) in rec.times.iter().zip(rec.observables.iter().zip(&rec.sigma2)) {
        println!("t={t:7.2} sz={:+.5} norm-1={:+.2e} E={:.6} P={:.6} sigma2={s2:.3e}", o.sigma_z, o.norm - 1.0, o.energy, o.parity);
    }
    let (dn, de, dp) = rec.conservation_drift();
    println!(
        "sigma2_max={:.5} drift(norm,energy,parity)=({dn:.1e},{de:.1e},{dp:.1e}) spectrum_drift={:?} elapsed={:.1?}",
        rec.sigma2_max,
        rec.spectrum_drift,
        start.elapsed()
    );
    if let Some(path) = std::env::var_os("DUMP") {
        let ours = SpectrumResult::from_trajectory(&rec, &bath, &params)?;
        let trwa = trwa_spectrum(&params, Evaluation::Discrete(&bath))?;
        let mut out = String::from("omega,multid1,trwa\n");
        for ((w, a), b) in ours.frequencies.iter().zip(&ours.values).zip(&trwa.values) {
            out += &format!("{w},{a},{b}\n");
        }
        std::fs::write(path, out)?;
    }
    Ok(())
}
