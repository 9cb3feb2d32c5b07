//! Photon-number laws of the noise sources and what a detector sees of them.
//!
//! Run with `cargo run --example photon_statistics`.

use tbnrf::photon_stats::{bernoulli_detected_moments, multithermal_pmf, noise_moments};
use tbnrf::{MomentPair, NoiseModel};

fn main() -> tbnrf::Result<()> {
    println!("multimode thermal pmf, mean 4 spread over mu modes");
    println!("{:>4} {:>12} {:>12} {:>12}", "n", "mu=1", "mu=4", "mu=100");
    for n in 0..=10 {
        let row: Vec<f64> = [1.0, 4.0, 100.0]
            .iter()
            .map(|&mu| multithermal_pmf(n, 4.0 / mu, mu))
            .collect::<tbnrf::Result<_>>()?;
        println!("{n:>4} {:>12.6} {:>12.6} {:>12.6}", row[0], row[1], row[2]);
    }

    let photons = MomentPair::new(2.0, 6.0)?;
    let detected = bernoulli_detected_moments(photons, 0.17)?;
    println!("\nthermal photons {photons:?} through eta = 0.17 -> {detected:?}");

    let models = [
        NoiseModel::None,
        NoiseModel::Coherent { mean: 2.0 },
        NoiseModel::MultiThermal { mean: 2.0, modes: 1.0 },
        NoiseModel::MultiThermal { mean: 2.0, modes: 10.0 },
        NoiseModel::Fock { photon_number: 12, detection_efficiency: 0.17 },
        NoiseModel::Conditional { unconditioned_mean: 10.0, modes: 10.0, herald_value: 5, herald_efficiency: 0.5 },
    ];
    println!("\n{:<14} {:>10} {:>10} {:>10}", "noise", "mean", "variance", "excess");
    for m in &models {
        let mp = noise_moments(m)?;
        println!("{:<14} {:>10.4} {:>10.4} {:>10.4}", m.name(), mp.mean, mp.variance, mp.excess());
    }
    Ok(())
}
