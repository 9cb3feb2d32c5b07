//! Closed-form survival thresholds next to their bisection counterparts.
//!
//! Run with `cargo run --example thresholds`.

use tbnrf::thresholds::{
    fock_noise_threshold, fock_noise_threshold_numeric, t_min, t_min_numeric, thermal_noise_max,
    thermal_noise_max_numeric,
};

fn main() -> tbnrf::Result<()> {
    let (eta, mu) = (0.17, 100.0);
    println!("minimum transmittance, eta = {eta}, mu = {mu}");
    for mean_m in [0.1, 0.5, 1.0, 1.7, 5.0, 20.0] {
        println!(
            "  <m> = {mean_m:<5} t_min = {:.9}  bisection = {:.9}",
            t_min(eta, mu, mean_m)?,
            t_min_numeric(eta, mu, mean_m)?
        );
    }

    println!("\nlargest thermal noise mean keeping R < 1, <m> = 1");
    for t in [0.05, 0.2, 0.4, 0.9, 1.0] {
        for mu_noise in [1.0, 10.0] {
            let closed = thermal_noise_max(eta, t, mu, 1.0, mu_noise)?;
            let numeric = thermal_noise_max_numeric(eta, t, mu, 1.0, mu_noise)?;
            println!("  t = {t:<4} mu_N = {mu_noise:<4} {:?}  bisection = {numeric:?}", closed.value);
        }
    }

    println!("\nFock noise mean needed for R < 1, <m> = 1");
    for t in [0.01, 0.02, 0.05, 0.4, 1.0] {
        let closed = fock_noise_threshold(eta, t, mu, 1.0)?;
        let numeric = fock_noise_threshold_numeric(eta, t, mu, 1.0)?;
        println!("  t = {t:<4} {} {:?}  bisection = {numeric:?}", closed.kind, closed.value);
    }
    Ok(())
}
