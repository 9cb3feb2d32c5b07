//! Noise reduction factor of multimode twin beams sent through lossy,
//! noisy channels.
//!
//! * [`photon_stats`]: photon-number laws and detected noise moments.
//! * [`nrf`]: closed-form R for every channel configuration.
//! * [`thresholds`]: sub-shot-noise boundaries, closed form and bisection.
//! * [`montecarlo`]: shot-level simulator used as an independent oracle.
//! * [`fit`]: weighted least-squares fits of measured R curves.
//! * [`io`] and [`cli`]: file formats and the `tbnrf` command line.

pub mod error;
pub mod cli;
pub mod fit;
pub mod io;
pub mod montecarlo;
pub mod nrf;
pub mod photon_stats;
pub mod roots;
pub mod thresholds;

pub use error::{Error, Result};
pub use nrf::TwbParams;
pub use photon_stats::{MomentPair, NoiseModel};
