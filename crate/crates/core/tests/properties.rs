use proptest::prelude::*;
use tbnrf::io::{parse_range, read_data_series, read_scan, read_shots, write_data_series, write_scan, write_shots, ScanRow};
use tbnrf::montecarlo::ShotRecord;
use tbnrf::nrf::{nrf_coherent, nrf_fock, nrf_noisy_lossy, nrf_noisy_lossy_moments, nrf_thermal, nrf_twb};
use tbnrf::photon_stats::{bernoulli_detected_moments, multithermal_pmf, noise_moments};
use tbnrf::roots::bisect;
use tbnrf::thresholds::{fock_noise_bound, t_min, thermal_noise_max};
use tbnrf::fit::{DataPoint, DataSeries, XRole};
use tbnrf::{MomentPair, NoiseModel, TwbParams};

fn eta() -> impl Strategy<Value = f64> {
    0.01f64..=1.0
}

fn twb() -> impl Strategy<Value = TwbParams> {
    (0.01f64..50.0, 1.0f64..1e4, eta(), 0.01f64..=1.0)
        .prop_map(|(m, mu, eta, t)| TwbParams::symmetric(m, mu, eta, t))
}

proptest! {
    #[test]
    fn pmf_normalised_with_thermal_moments(mean in 0.01f64..6.0, modes in 1.0f64..200.0) {
        let per_mode = mean / modes;
        let (mut total, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for n in 0..2000u64 {
            let p = multithermal_pmf(n, per_mode, modes).unwrap();
            total += p;
            m1 += n as f64 * p;
            m2 += (n * n) as f64 * p;
        }
        let var = m2 - m1 * m1;
        prop_assert!((total - 1.0).abs() < 1e-9, "sum {total}");
        prop_assert!((m1 - mean).abs() < 1e-8 * mean.max(1.0));
        prop_assert!((var - mean * (mean / modes + 1.0)).abs() < 1e-7 * mean.max(1.0));
    }

    #[test]
    fn thinning_composes(mean in 0.0f64..100.0, extra in 0.0f64..100.0, a in eta(), b in eta()) {
        let x = MomentPair::new(mean, mean + extra).unwrap();
        let twice = bernoulli_detected_moments(bernoulli_detected_moments(x, a).unwrap(), b).unwrap();
        let once = bernoulli_detected_moments(x, a * b).unwrap();
        prop_assert!((twice.mean - once.mean).abs() < 1e-12 * (1.0 + once.mean));
        prop_assert!((twice.variance - once.variance).abs() < 1e-12 * (1.0 + once.variance));
    }

    #[test]
    fn balanced_twin_beam_is_one_minus_eta(m in 0.001f64..1e3, mu in 1.0f64..1e5, eta in eta()) {
        let r = nrf_twb(m, m, eta, eta, mu).unwrap();
        prop_assert!((r - (1.0 - eta)).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_generic_route(p in twb(), x in 0.0f64..50.0, mu_n in 1.0f64..100.0) {
        let coh = nrf_noisy_lossy(&p, &NoiseModel::Coherent { mean: x }).unwrap();
        prop_assert!((coh - nrf_coherent(&p, x).unwrap()).abs() < 1e-12);
        let th = nrf_noisy_lossy(&p, &NoiseModel::MultiThermal { mean: x, modes: mu_n }).unwrap();
        prop_assert!((th - nrf_thermal(&p, x, mu_n).unwrap()).abs() < 1e-12 * th.abs().max(1.0));
        let fock_noise = NoiseModel::Fock { photon_number: 0, detection_efficiency: p.eta1 * p.t };
        let fock = nrf_noisy_lossy_moments(&p, fock_noise.moments_with_mean(x).unwrap()).unwrap();
        prop_assert!((fock - nrf_fock(&p, x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn coherent_curve_is_monotone_and_bounded(p in twb(), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        let r_lo = nrf_coherent(&p, lo).unwrap();
        let r_hi = nrf_coherent(&p, hi).unwrap();
        // Past the point where the (1-t)^2 term alone exceeds the correlation
        // term, R > 1 and decreases towards 1 instead.
        if r_lo <= 1.0 {
            prop_assert!(r_hi >= r_lo - 1e-12 && r_hi <= 1.0 + 1e-12);
        } else {
            prop_assert!(r_hi <= r_lo + 1e-12 && r_hi >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn fock_noise_is_invisible_at_unit_transmittance(m in 0.01f64..50.0, mu in 1.0f64..1e4, eta in eta(), x in 0.0f64..1e3) {
        let p = TwbParams::symmetric(m, mu, eta, 1.0);
        prop_assert!((nrf_fock(&p, x).unwrap() - (1.0 - eta)).abs() < 1e-12);
    }

    #[test]
    fn t_min_is_a_root(m in 0.01f64..50.0, mu in 1.0f64..1e4, eta in eta()) {
        let t1 = t_min(eta, mu, m).unwrap();
        let f = |t: f64| nrf_twb(m, t * m, eta, eta * t, mu).unwrap() - 1.0;
        let root = bisect(f, 1e-15, 1.0, 1e-14).unwrap();
        prop_assert!((t1 - root).abs() < 1e-9, "{t1} vs {root}");
    }

    #[test]
    fn finite_bounds_sit_on_r_equals_one(p in twb(), mu_n in 1.0f64..100.0) {
        let eta = p.eta1;
        if let Some(x) = thermal_noise_max(eta, p.t, p.modes, p.mean_m, mu_n).unwrap().value {
            prop_assert!((nrf_thermal(&p, x, mu_n).unwrap() - 1.0).abs() < 1e-9);
        }
        let b = fock_noise_bound(eta, p.t, p.modes, p.mean_m).unwrap();
        if b > 0.0 {
            prop_assert!((nrf_fock(&p, b).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn every_model_has_nonnegative_variance(mean in 0.0f64..50.0, modes in 1.0f64..200.0, c in 0u64..20, e in eta()) {
        for model in [
            NoiseModel::Coherent { mean },
            NoiseModel::MultiThermal { mean, modes },
            NoiseModel::Fock { photon_number: c, detection_efficiency: e },
            NoiseModel::Conditional { unconditioned_mean: mean, modes, herald_value: c, herald_efficiency: e },
        ] {
            let m = noise_moments(&model).unwrap();
            prop_assert!(m.mean >= 0.0 && m.variance >= -1e-12, "{model:?} -> {m:?}");
        }
    }

    #[test]
    fn scan_csv_round_trips(rows in prop::collection::vec((0.0f64..1e6, 0.0f64..1e6, -1e3f64..1e3), 0..40)) {
        let rows: Vec<ScanRow> = rows.into_iter().map(|(a, b, r)| ScanRow { mean_twb: a, mean_noise: b, r }).collect();
        let mut buf = Vec::new();
        write_scan(&mut buf, &rows).unwrap();
        prop_assert!(!buf.contains(&b'\r'));
        prop_assert_eq!(read_scan(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn shots_csv_round_trips(shots in prop::collection::vec((0u64..u64::MAX, 0u64..u64::MAX), 0..40)) {
        let shots: Vec<ShotRecord> = shots.into_iter().map(|(k1, k2)| ShotRecord { k1, k2 }).collect();
        let mut buf = Vec::new();
        write_shots(&mut buf, &shots).unwrap();
        prop_assert_eq!(read_shots(buf.as_slice()).unwrap(), shots);
    }

    #[test]
    fn data_csv_round_trips(points in prop::collection::vec((0.0f64..1e3, -10.0f64..10.0, 1e-9f64..1.0), 2..30)) {
        let points = points.into_iter().map(|(x, r, s)| DataPoint { x, r, sigma_r: s }).collect();
        let series = DataSeries::new(points, XRole::NoiseMean).unwrap();
        let mut buf = Vec::new();
        write_data_series(&mut buf, &series).unwrap();
        prop_assert_eq!(read_data_series(buf.as_slice(), XRole::NoiseMean).unwrap(), series);
    }

    #[test]
    fn range_hits_stop_within_tolerance(start in 0.0f64..10.0, step in 0.01f64..1.0, n in 1usize..200) {
        let stop = start + step * n as f64;
        let grid = parse_range(&format!("{start}:{step}:{stop}")).unwrap();
        prop_assert_eq!(grid.len(), n + 1);
        prop_assert!((grid[n] - stop).abs() < 1e-9 * stop.max(1.0));
    }
}
