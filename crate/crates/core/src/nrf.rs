//! Closed-form noise reduction factor R = var(k1 - k2) / (<k1> + <k2>).
//!
//! The generic kernel is [`nrf_noisy_two_arm`]; every other function is either
//! a specialization of it or a literal transcription kept for cross-checking.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_modes, ensure_nonnegative, ensure_open_unit, Error, Result};
use crate::photon_stats::{noise_moments, MomentPair, NoiseModel};

/// Multimode twin beam and the lossy channel on arm 2.
///
/// `mean_m` is the detected mean of arm 1. Arm 2 carries the same photons,
/// transmitted with probability `t` and detected with `eta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwbParams {
    pub mean_m: f64,
    pub modes: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub t: f64,
}

impl TwbParams {
    /// Equal detection efficiency on both arms.
    pub fn symmetric(mean_m: f64, modes: f64, eta: f64, t: f64) -> Self {
        Self {
            mean_m,
            modes,
            eta1: eta,
            eta2: eta,
            t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_nonnegative("mean_m", self.mean_m)?;
        ensure_modes("modes", self.modes)?;
        ensure_open_unit("eta1", self.eta1)?;
        ensure_open_unit("eta2", self.eta2)?;
        ensure_open_unit("t", self.t)
    }

    /// Detected mean of arm 2 before noise is added.
    pub fn mean_arm2(&self) -> f64 {
        self.t * self.mean_m * self.eta2 / self.eta1
    }

    /// Effective arm-2 efficiency once the channel loss is folded in.
    pub fn eta2_effective(&self) -> f64 {
        self.eta2 * self.t
    }

    /// Mean photon number per arm before detection.
    pub fn photon_mean(&self) -> f64 {
        self.mean_m / self.eta1
    }

    fn common_eta(&self) -> Result<f64> {
        if self.eta1 == self.eta2 {
            Ok(self.eta1)
        } else {
            Err(Error::Domain(format!(
                "closed form needs eta1 == eta2, got {} and {}",
                self.eta1, self.eta2
            )))
        }
    }
}

/// First and second moments of a pair of detected counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotMoments {
    pub mean1: f64,
    pub mean2: f64,
    /// Variance of k1 - k2.
    pub var_diff: f64,
}

pub fn nrf_from_moments(s: ShotMoments) -> Result<f64> {
    let total = s.mean1 + s.mean2;
    if total <= 0.0 {
        return Err(Error::Degenerate);
    }
    Ok(s.var_diff / total)
}

/// The three additive pieces of R on top of the shot-noise level 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrfTerms {
    /// Sub-shot-noise correlation gain, always <= 0.
    pub correlation: f64,
    /// Penalty for unequal arm means, scaled by the mode count.
    pub imbalance: f64,
    /// Non-Poissonian part of the noise variance.
    pub excess_noise: f64,
}

impl NrfTerms {
    pub fn total(&self) -> f64 {
        1.0 + self.correlation + self.imbalance + self.excess_noise
    }
}

#[allow(clippy::too_many_arguments)]
pub fn nrf_terms_two_arm(
    m1: f64,
    m2: f64,
    eta1: f64,
    eta2: f64,
    mu: f64,
    noise1: MomentPair,
    noise2: MomentPair,
) -> Result<NrfTerms> {
    ensure_nonnegative("m1", m1)?;
    ensure_nonnegative("m2", m2)?;
    ensure_open_unit("eta1", eta1)?;
    ensure_open_unit("eta2", eta2)?;
    ensure_modes("mu", mu)?;
    let total = m1 + m2 + noise1.mean + noise2.mean;
    if total <= 0.0 {
        return Err(Error::Degenerate);
    }
    let diff = m1 - m2;
    Ok(NrfTerms {
        correlation: -2.0 * (eta1 * eta2).sqrt() * (m1 * m2).sqrt() / total,
        imbalance: diff * diff / (mu * total),
        excess_noise: (noise1.excess() + noise2.excess()) / total,
    })
}

/// R for a multimode twin beam with uncorrelated noise added to both arms.
pub fn nrf_noisy_two_arm(
    m1: f64,
    m2: f64,
    eta1: f64,
    eta2: f64,
    mu: f64,
    noise1: MomentPair,
    noise2: MomentPair,
) -> Result<f64> {
    nrf_terms_two_arm(m1, m2, eta1, eta2, mu, noise1, noise2).map(|t| t.total())
}

/// R for a noiseless multimode twin beam with detected arm means `m1`, `m2`.
pub fn nrf_twb(m1: f64, m2: f64, eta1: f64, eta2: f64, mu: f64) -> Result<f64> {
    nrf_noisy_two_arm(m1, m2, eta1, eta2, mu, MomentPair::ZERO, MomentPair::ZERO)
}

/// R with noise on arm 2 only.
pub fn nrf_noisy_one_arm(
    m1: f64,
    m2: f64,
    eta1: f64,
    eta2: f64,
    mu: f64,
    noise: MomentPair,
) -> Result<f64> {
    nrf_noisy_two_arm(m1, m2, eta1, eta2, mu, MomentPair::ZERO, noise)
}

/// Term breakdown of [`nrf_noisy_lossy_moments`].
pub fn nrf_lossy_terms(p: &TwbParams, noise: MomentPair) -> Result<NrfTerms> {
    p.validate()?;
    nrf_terms_two_arm(
        p.mean_m,
        p.mean_arm2(),
        p.eta1,
        p.eta2_effective(),
        p.modes,
        MomentPair::ZERO,
        noise,
    )
}

/// R of a twin beam whose arm 2 crosses a lossy channel and picks up noise
/// with the given detected moments.
///
/// The loss is folded into arm 2 as mean `t <m>` and efficiency `eta t`.
pub fn nrf_noisy_lossy_moments(p: &TwbParams, noise: MomentPair) -> Result<f64> {
    nrf_lossy_terms(p, noise).map(|t| t.total())
}

pub fn nrf_noisy_lossy(p: &TwbParams, noise: &NoiseModel) -> Result<f64> {
    nrf_noisy_lossy_moments(p, noise_moments(noise)?)
}

struct LossyParts {
    eta: f64,
    t: f64,
    m: f64,
    mu: f64,
    denom: f64,
}

fn lossy_parts(p: &TwbParams, mean_noise: f64) -> Result<LossyParts> {
    p.validate()?;
    ensure_nonnegative("noise mean", mean_noise)?;
    let eta = p.common_eta()?;
    let denom = (1.0 + p.t) * p.mean_m + mean_noise;
    if denom <= 0.0 {
        return Err(Error::Degenerate);
    }
    Ok(LossyParts {
        eta,
        t: p.t,
        m: p.mean_m,
        mu: p.modes,
        denom,
    })
}

/// Coherent (Poissonian) noise of detected mean `mean_noise`.
pub fn nrf_coherent(p: &TwbParams, mean_noise: f64) -> Result<f64> {
    let LossyParts { eta, t, m, mu, denom } = lossy_parts(p, mean_noise)?;
    Ok(1.0 - 2.0 * eta * t * m / denom
        + (1.0 - t).powi(2) * m * m / (mu * denom))
}

/// Multimode thermal noise of detected mean `mean_noise` over `modes_noise` modes.
pub fn nrf_thermal(p: &TwbParams, mean_noise: f64, modes_noise: f64) -> Result<f64> {
    ensure_modes("noise modes", modes_noise)?;
    let LossyParts { eta, t, m, mu, denom } = lossy_parts(p, mean_noise)?;
    Ok(1.0 - 2.0 * eta * t * m / denom
        + (1.0 - t).powi(2) * m * m / (mu * denom)
        + mean_noise * mean_noise / (modes_noise * denom))
}

/// Fock noise of detected mean `mean_noise`, detected with the arm-2
/// efficiency `eta t`.
pub fn nrf_fock(p: &TwbParams, mean_noise: f64) -> Result<f64> {
    let LossyParts { eta, t, m, mu, denom } = lossy_parts(p, mean_noise)?;
    Ok(1.0 - 2.0 * eta * t * m / denom
        + (1.0 - t).powi(2) * m * m / (mu * denom)
        - eta * t * mean_noise / denom)
}
