//! Channel from a noiseless series, then noise from a noisy one.
//!
//! Run with `cargo run --release --example two_stage_fit`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use tbnrf::fit::{model_eval, two_stage_fit, DataPoint, DataSeries, FitModel, ParamMap, ParamName, TwoStageSpec, XRole};

fn series(model: FitModel, truth: &ParamMap, rng: &mut ChaCha12Rng) -> tbnrf::Result<DataSeries> {
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let points = (1..=20)
        .map(|i| {
            let x = 0.5 * i as f64;
            let r = model_eval(model, truth, x, XRole::TwbMean)?;
            Ok(DataPoint { x, r: r + noise.sample(rng), sigma_r: 0.01 })
        })
        .collect::<tbnrf::Result<Vec<_>>>()?;
    DataSeries::new(points, XRole::TwbMean)
}

fn main() -> tbnrf::Result<()> {
    use ParamName::*;
    let truth = ParamMap::from([(Mu, 499.48), (Eta, 0.18), (T, 0.87), (MeanNoise, 0.57), (MuNoise, 1.20)]);
    let mut clean_truth = truth.clone();
    clean_truth.insert(MeanNoise, 0.0);

    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let clean = series(FitModel::Thermal, &clean_truth, &mut rng)?;
    let noisy = series(FitModel::Thermal, &truth, &mut rng)?;
    let (first, second) = two_stage_fit(&clean, &noisy, &TwoStageSpec::new(FitModel::Thermal))?;

    println!("stage 1: chi2_nu = {:.3}", first.chi2_nu);
    for p in [Mu, Eta, T] {
        println!("  {p:<10} {:>10.4}  (truth {})", first.get(p), truth[&p]);
    }
    println!("stage 2: chi2_nu = {:.3}", second.chi2_nu);
    for p in [MeanNoise, MuNoise] {
        println!("  {p:<10} {:>10.4}  (truth {})", second.get(p), truth[&p]);
    }
    Ok(())
}
