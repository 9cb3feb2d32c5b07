//! Synthetic thermal-noise data fitted back.
//!
//! Run with `cargo run --release --example fit_round_trip`.
//!
//! With x = <m_N>, the thermal curve depends on eta, t and <m> only through
//! (1+t)<m> and 2 eta t <m> - (1-t)^2 <m>^2 / mu, so with everything free the
//! fit wanders along a valley of equal chi-square. Pinning the channel
//! (eta, t, mu) leaves <m> and mu_N well determined.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use tbnrf::fit::{fit, model_eval, DataPoint, DataSeries, FitModel, FitSpec, ParamMap, ParamName, XRole};

fn main() -> tbnrf::Result<()> {
    use ParamName::*;
    let truth = ParamMap::from([(MeanM, 0.89), (Mu, 49.93), (Eta, 0.18), (T, 0.90), (MuNoise, 1.38)]);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let points = (0..20)
        .map(|i| {
            let x = 3.0 * i as f64 / 19.0;
            let r = model_eval(FitModel::Thermal, &truth, x, XRole::NoiseMean)?;
            Ok(DataPoint { x, r: r + noise.sample(&mut rng), sigma_r: 0.01 })
        })
        .collect::<tbnrf::Result<Vec<_>>>()?;
    let series = DataSeries::new(points, XRole::NoiseMean)?;

    let channel = FitSpec::new(
        FitModel::Thermal,
        vec![MeanM, MuNoise],
        ParamMap::from([(Eta, 0.18), (T, 0.90), (Mu, 49.93)]),
    );
    let partial = FitSpec::new(
        FitModel::Thermal,
        vec![MeanM, Eta, MuNoise],
        ParamMap::from([(T, 0.90), (Mu, 49.93)]),
    );
    let all = FitSpec::new(FitModel::Thermal, vec![MeanM, Mu, Eta, T, MuNoise], ParamMap::new());

    for (label, spec) in [("eta, t, mu frozen", channel), ("t, mu frozen", partial), ("all free", all)] {
        let r = fit(&series, &spec)?;
        println!("{label}: chi2_nu = {:.3}, dof = {}, converged = {}", r.chi2_nu, r.dof, r.converged);
        for (name, value) in &r.estimates {
            println!("  {name:<10} {value:>10.4}  (truth {:.4})", truth[name]);
        }
    }
    Ok(())
}
