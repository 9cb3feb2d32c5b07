//! Photon-number statistics: the multimode thermal law, Bernoulli detection,
//! and the detected moments of every supported noise source.
//!
//! All means exposed here are *total* means over all modes. The multimode
//! thermal pmf is the only place that works with a per-mode mean.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_modes, ensure_nonnegative, ensure_unit_interval, Error, Result};

/// Mean and variance of a detected photon-count distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

impl MomentPair {
    pub const ZERO: MomentPair = MomentPair { mean: 0.0, variance: 0.0 };

    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        ensure_nonnegative("mean", mean)?;
        ensure_nonnegative("variance", variance)?;
        Ok(Self { mean, variance })
    }

    /// Variance in excess of the Poissonian value; negative for sub-Poissonian light.
    pub fn excess(&self) -> f64 {
        self.variance - self.mean
    }
}

/// Noise added to arm 2 of the twin beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    None,
    /// Poissonian light with the given detected mean.
    Coherent { mean: f64 },
    /// Thermal light spread over `modes` equally populated modes.
    MultiThermal { mean: f64, modes: f64 },
    /// A Fock state of `photon_number` photons detected with efficiency
    /// `detection_efficiency`.
    Fock {
        photon_number: u64,
        detection_efficiency: f64,
    },
    /// The signal arm of an auxiliary twin beam, heralded on the idler count
    /// `herald_value` detected with efficiency `herald_efficiency`.
    Conditional {
        unconditioned_mean: f64,
        modes: f64,
        herald_value: u64,
        herald_efficiency: f64,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Coherent { mean } => ensure_nonnegative("noise mean", mean),
            NoiseModel::MultiThermal { mean, modes } => {
                ensure_nonnegative("noise mean", mean)?;
                ensure_modes("noise modes", modes)
            }
            NoiseModel::Fock {
                detection_efficiency,
                ..
            } => ensure_unit_interval("Fock detection efficiency", detection_efficiency),
            NoiseModel::Conditional {
                unconditioned_mean,
                modes,
                herald_efficiency,
                ..
            } => {
                ensure_nonnegative("unconditioned mean", unconditioned_mean)?;
                ensure_modes("noise modes", modes)?;
                ensure_unit_interval("herald efficiency", herald_efficiency)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::Coherent { .. } => "coherent",
            NoiseModel::MultiThermal { .. } => "multi_thermal",
            NoiseModel::Fock { .. } => "fock",
            NoiseModel::Conditional { .. } => "conditional",
        }
    }

    /// Moments of this noise family with its scan coordinate set to `x`.
    ///
    /// The coordinate is the detected mean for coherent, thermal and Fock
    /// noise (a Fock state keeps variance `(1 - eta_f) x` so non-integer
    /// detected means are allowed), and the unconditioned mean for
    /// conditional noise. `None` ignores `x`.
    pub fn moments_with_mean(&self, x: f64) -> Result<MomentPair> {
        ensure_nonnegative("noise scan coordinate", x)?;
        let model = match *self {
            NoiseModel::None => NoiseModel::None,
            NoiseModel::Coherent { .. } => NoiseModel::Coherent { mean: x },
            NoiseModel::MultiThermal { modes, .. } => NoiseModel::MultiThermal { mean: x, modes },
            NoiseModel::Fock {
                detection_efficiency,
                ..
            } => {
                ensure_unit_interval("Fock detection efficiency", detection_efficiency)?;
                return Ok(MomentPair {
                    mean: x,
                    variance: (1.0 - detection_efficiency) * x,
                });
            }
            NoiseModel::Conditional {
                modes,
                herald_value,
                herald_efficiency,
                ..
            } => NoiseModel::Conditional {
                unconditioned_mean: x,
                modes,
                herald_value,
                herald_efficiency,
            },
        };
        noise_moments(&model)
    }
}

/// Natural log of the multimode thermal probability of `n` photons.
pub fn multithermal_ln_pmf(n: u64, mean_per_mode: f64, modes: f64) -> Result<f64> {
    if !(mean_per_mode > 0.0 && mean_per_mode.is_finite()) {
        return Err(Error::Domain(format!(
            "mean per mode = {mean_per_mode} must be positive"
        )));
    }
    ensure_modes("modes", modes)?;
    let n = n as f64;
    Ok(ln_gamma(n + modes) - ln_gamma(n + 1.0) - ln_gamma(modes)
        - modes * mean_per_mode.ln_1p()
        - n * mean_per_mode.recip().ln_1p())
}

/// Multimode thermal probability of `n` photons for `modes` equally populated
/// modes of mean `mean_per_mode` each. Non-integer `modes` is supported.
pub fn multithermal_pmf(n: u64, mean_per_mode: f64, modes: f64) -> Result<f64> {
    multithermal_ln_pmf(n, mean_per_mode, modes).map(f64::exp)
}

/// Moments after Bernoulli detection (binomial thinning) with efficiency `eta`.
pub fn bernoulli_detected_moments(photons: MomentPair, eta: f64) -> Result<MomentPair> {
    ensure_unit_interval("eta", eta)?;
    Ok(MomentPair {
        mean: eta * photons.mean,
        variance: eta * eta * photons.variance + eta * (1.0 - eta) * photons.mean,
    })
}

/// Detected mean and variance of the noise source.
pub fn noise_moments(model: &NoiseModel) -> Result<MomentPair> {
    model.validate()?;
    Ok(match *model {
        NoiseModel::None => MomentPair::ZERO,
        NoiseModel::Coherent { mean } => MomentPair { mean, variance: mean },
        NoiseModel::MultiThermal { mean, modes } => MomentPair {
            mean,
            variance: mean * (mean / modes + 1.0),
        },
        NoiseModel::Fock {
            photon_number,
            detection_efficiency,
        } => bernoulli_detected_moments(
            MomentPair {
                mean: photon_number as f64,
                variance: 0.0,
            },
            detection_efficiency,
        )?,
        NoiseModel::Conditional {
            unconditioned_mean,
            modes,
            herald_value,
            herald_efficiency,
        } => conditional_moments(unconditioned_mean, modes, herald_value, herald_efficiency),
    })
}

/// Mean and variance of the heralded signal count given the idler count
/// `herald`, for a multimode twin beam of detected mean `m` and `modes` modes
/// whose herald arm is detected with efficiency `eta`.
fn conditional_moments(m: f64, modes: f64, herald: u64, eta: f64) -> MomentPair {
    let c = herald as f64;
    let denom = m + modes;
    let mean = (c * (m + eta * modes) + modes * m * (1.0 - eta)) / denom;
    let variance = (1.0 - eta) / (denom * denom)
        * (eta * c * modes * modes
            + m * modes * (c + 2.0 * eta * c + modes)
            + m * m * (2.0 * c + 2.0 * modes - eta * modes));
    MomentPair { mean, variance }
}
