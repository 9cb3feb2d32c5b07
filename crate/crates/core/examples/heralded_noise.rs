//! Heralded (conditional) noise: sampled moments against the closed form.
//!
//! Run with `cargo run --release --example heralded_noise`.

use tbnrf::montecarlo::{shard_rng, ConditionalSampler, SignalEfficiency};
use tbnrf::photon_stats::noise_moments;
use tbnrf::NoiseModel;

fn main() -> tbnrf::Result<()> {
    let draws = 50_000u32;
    println!("{:<5} {:<6} {:<6} {:>9} {:>9} {:>9} {:>9} {:>9}", "eta2", "m_c", "mu_N", "mean", "sampled", "var", "sampled", "accept");
    for eta in [0.5, 1.0] {
        for herald in [0u64, 5] {
            for modes in [10.0, 100.0] {
                let model = NoiseModel::Conditional {
                    unconditioned_mean: 5.0,
                    modes,
                    herald_value: herald,
                    herald_efficiency: eta,
                };
                let exact = noise_moments(&model)?;
                let sampler = ConditionalSampler::new(&model, SignalEfficiency::SameAsHerald)?;
                let mut rng = shard_rng(99, 0);
                let (mut s, mut s2) = (0.0, 0.0);
                for _ in 0..draws {
                    let k = sampler.sample(&mut rng)? as f64;
                    s += k;
                    s2 += k * k;
                }
                let mean = s / draws as f64;
                let var = s2 / draws as f64 - mean * mean;
                println!(
                    "{eta:<5} {herald:<6} {modes:<6} {:>9.4} {mean:>9.4} {:>9.4} {var:>9.4} {:>9.4}",
                    exact.mean,
                    exact.variance,
                    sampler.acceptance()
                );
            }
        }
    }
    Ok(())
}
