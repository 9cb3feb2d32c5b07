//! R over a grid of twin-beam and noise means, printed as plot-ready CSV.
//!
//! Run with `cargo run --example nrf_surface -- thermal 0.4 > surface.csv`.
//! The first argument picks the noise family (coherent, thermal, fock), the
//! second the transmittance.

use std::io;

use tbnrf::cli::scan_grid;
use tbnrf::io::{parse_range, write_scan, RunConfig};
use tbnrf::{NoiseModel, TwbParams};

fn main() -> tbnrf::Result<()> {
    let mut args = std::env::args().skip(1);
    let family = args.next().unwrap_or_else(|| "thermal".into());
    let t: f64 = args.next().map_or(Ok(0.4), |s| s.parse()).map_err(|_| tbnrf::Error::Input("t must be a number".into()))?;

    let noise = match family.as_str() {
        "coherent" => NoiseModel::Coherent { mean: 0.0 },
        "thermal" => NoiseModel::MultiThermal { mean: 0.0, modes: 1.0 },
        "fock" => NoiseModel::Fock { photon_number: 0, detection_efficiency: 0.17 },
        other => return Err(tbnrf::Error::Input(format!("unknown family {other}"))),
    };
    let config = RunConfig { twb: TwbParams::symmetric(1.0, 100.0, 0.17, t), noise, mc: None };

    let rows = scan_grid(&config, &parse_range("0.1:0.1:5")?, &parse_range("0:0.1:5")?)?;
    let below = rows.iter().filter(|r| r.r < 1.0).count();
    eprintln!("{family}, t = {t}: {below} of {} grid points are sub-shot-noise", rows.len());
    write_scan(io::stdout().lock(), &rows)
}
