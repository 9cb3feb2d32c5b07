use tbnrf::montecarlo::{estimate_nrf_with, shard_rng, simulate_shots, ConditionalSampler, SignalEfficiency, ShotSampler, Workers};
use tbnrf::nrf::{nrf_noisy_lossy, nrf_twb};
use tbnrf::photon_stats::noise_moments;
use tbnrf::{Error, NoiseModel, TwbParams};

fn workers() -> Workers {
    Workers::new(4).unwrap()
}

#[test]
fn marginal_means_match_within_four_se() {
    let p = TwbParams::symmetric(1.5, 50.0, 0.3, 0.6);
    for (i, noise) in [
        NoiseModel::None,
        NoiseModel::Coherent { mean: 0.7 },
        NoiseModel::MultiThermal { mean: 0.7, modes: 3.0 },
        NoiseModel::Fock { photon_number: 4, detection_efficiency: 0.18 },
        NoiseModel::Conditional { unconditioned_mean: 2.0, modes: 10.0, herald_value: 2, herald_efficiency: 0.5 },
    ]
    .iter()
    .enumerate()
    {
        let est = estimate_nrf_with(&p, noise, 200_000, 40 + i as u64, workers()).unwrap();
        let noise_mean = noise_moments(noise).unwrap().mean;
        let z1 = (est.mean1 - p.mean_m) / est.mean1_std_err();
        let z2 = (est.mean2 - (p.mean_arm2() + noise_mean)) / est.mean2_std_err();
        assert!(z1.abs() < 4.0 && z2.abs() < 4.0, "{noise:?}: z1 = {z1}, z2 = {z2}");
    }
}

#[test]
fn standard_error_is_calibrated() {
    let p = TwbParams::symmetric(2.0, 20.0, 0.4, 0.8);
    let noise = NoiseModel::MultiThermal { mean: 0.5, modes: 2.0 };
    let runs: Vec<_> = (0..60)
        .map(|seed| estimate_nrf_with(&p, &noise, 20_000, 1000 + seed, workers()).unwrap())
        .collect();
    let n = runs.len() as f64;
    let mean = runs.iter().map(|e| e.r_hat).sum::<f64>() / n;
    let spread = (runs.iter().map(|e| (e.r_hat - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let reported = runs.iter().map(|e| e.std_err).sum::<f64>() / n;
    // The sample sd of 60 draws is itself uncertain by about 9%.
    assert!((spread / reported - 1.0).abs() < 0.3, "spread {spread}, reported {reported}");
    let r = nrf_noisy_lossy(&p, &noise).unwrap();
    assert!((mean - r).abs() < 4.0 * reported / n.sqrt());
}

#[test]
fn unbalanced_arms_match_closed_form() {
    // m2 = t m1 with eta2 = eta t is the physically realisable imbalance.
    let p = TwbParams::symmetric(1.0, 100.0, 0.17, 0.5);
    let est = estimate_nrf_with(&p, &NoiseModel::None, 1_000_000, 3, workers()).unwrap();
    let r = nrf_twb(1.0, 0.5, 0.17, 0.085, 100.0).unwrap();
    assert!((est.r_hat - r).abs() < 3.0 * est.std_err, "{} vs {r}", est.r_hat);
}

#[test]
fn distinct_arm_efficiencies_match_closed_form() {
    let p = TwbParams { mean_m: 0.8, modes: 30.0, eta1: 0.25, eta2: 0.5, t: 0.7 };
    let noise = NoiseModel::Coherent { mean: 0.4 };
    let est = estimate_nrf_with(&p, &noise, 1_000_000, 9, workers()).unwrap();
    let r = nrf_noisy_lossy(&p, &noise).unwrap();
    assert!((est.r_hat - r).abs() < 3.0 * est.std_err, "{} vs {r}", est.r_hat);
    assert!((est.mean2 - (p.mean_arm2() + 0.4)).abs() < 4.0 * est.mean2_std_err());
}

#[test]
fn heralded_signal_interpretations_differ() {
    let model = NoiseModel::Conditional { unconditioned_mean: 3.0, modes: 10.0, herald_value: 3, herald_efficiency: 0.5 };
    let draws = 40_000;
    let mean_of = |signal| {
        let sampler = ConditionalSampler::new(&model, signal).unwrap();
        let mut rng = shard_rng(17, 0);
        (0..draws).map(|_| sampler.sample(&mut rng).unwrap() as f64).sum::<f64>() / draws as f64
    };
    let same = mean_of(SignalEfficiency::SameAsHerald);
    let unit = mean_of(SignalEfficiency::Unit);
    let exact = noise_moments(&model).unwrap().mean;
    assert!((same - exact).abs() < 0.05 * exact, "{same} vs {exact}");
    assert!(unit > 1.5 * same);
}

#[test]
fn blind_herald_is_a_runtime_error() {
    let p = TwbParams::symmetric(1.0, 100.0, 0.17, 1.0);
    let model = NoiseModel::Conditional { unconditioned_mean: 2.0, modes: 10.0, herald_value: 1, herald_efficiency: 0.0 };
    assert!(ShotSampler::new(&p, &model).is_err());
    let err = estimate_nrf_with(&p, &model, 1000, 0, workers()).unwrap_err();
    assert!(matches!(err, Error::RejectionTimeout { acceptance: 0.0, .. }), "{err:?}");
}

#[test]
fn runs_with_a_partial_last_shard_are_worker_independent() {
    let p = TwbParams::symmetric(3.0, 7.0, 0.6, 0.3);
    let noise = NoiseModel::MultiThermal { mean: 1.0, modes: 1.5 };
    let shots = 3 * 65_536 + 123;
    let a = simulate_shots(&p, &noise, shots, 77, Workers::new(1).unwrap()).unwrap();
    let b = simulate_shots(&p, &noise, shots, 77, Workers::new(5).unwrap()).unwrap();
    assert_eq!(a.len() as u64, shots);
    assert_eq!(a, b);
    let c = simulate_shots(&p, &noise, shots, 78, Workers::new(1).unwrap()).unwrap();
    assert_ne!(a, c);
}
