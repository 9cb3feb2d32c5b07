//! Photon-counting simulation checked against the closed forms.
//!
//! Run with `cargo run --release --example monte_carlo_check`.
//! `TBNRF_THREADS` caps the worker count; results do not depend on it.

use tbnrf::montecarlo::{estimate_nrf_with, Workers};
use tbnrf::nrf::nrf_noisy_lossy;
use tbnrf::{NoiseModel, TwbParams};

fn main() -> tbnrf::Result<()> {
    let workers = Workers::from_env()?;
    let shots = 1_000_000;
    println!("{} shots per row, {} threads", shots, workers.threads());
    println!("{:<4} {:<14} {:>9} {:>9} {:>9} {:>7}", "t", "noise", "R", "r_hat", "std_err", "z");
    for t in [0.4, 1.0] {
        let p = TwbParams::symmetric(1.0, 100.0, 0.17, t);
        for noise in [
            NoiseModel::None,
            NoiseModel::Coherent { mean: 1.0 },
            NoiseModel::MultiThermal { mean: 1.0, modes: 1.0 },
            NoiseModel::Fock { photon_number: 6, detection_efficiency: 0.17 },
        ] {
            let r = nrf_noisy_lossy(&p, &noise)?;
            let est = estimate_nrf_with(&p, &noise, shots, 2024, workers)?;
            let z = (est.r_hat - r) / est.std_err;
            println!(
                "{t:<4} {:<14} {r:>9.5} {:>9.5} {:>9.5} {z:>7.2}",
                noise.name(),
                est.r_hat,
                est.std_err
            );
        }
    }
    Ok(())
}
