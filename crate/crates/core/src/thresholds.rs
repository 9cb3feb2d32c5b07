//! Boundaries of the sub-shot-noise region (R < 1) for a lossy channel.
//!
//! Each closed form has a bisection counterpart on `R - 1` (the `*_numeric`
//! functions) so that the two can be checked against each other.

use std::fmt;

use crate::error::{ensure_modes, ensure_open_unit, Error, Result};
use crate::nrf::{nrf_coherent, nrf_fock, nrf_noisy_lossy, nrf_thermal, TwbParams};
use crate::photon_stats::NoiseModel;
use crate::roots::{bisect, expand_bracket};

/// Half-width of the band around R = 1 reported as [`Classification::Boundary`].
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    TransmittanceMin,
    ThermalNoiseMax,
    FockNoiseMin,
    NoneRequired,
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            ThresholdKind::TransmittanceMin => "transmittance_min",
            ThresholdKind::ThermalNoiseMax => "thermal_noise_max",
            ThresholdKind::FockNoiseMin => "fock_noise_min",
            ThresholdKind::NoneRequired => "none_required",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub kind: ThresholdKind,
    /// Present iff a finite boundary exists.
    pub value: Option<f64>,
    /// Whether some parameter value keeps R < 1.
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Nonclassical,
    Classical,
    Boundary,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Classification::Nonclassical => "nonclassical",
            Classification::Classical => "classical",
            Classification::Boundary => "boundary",
        })
    }
}

fn check_twb(eta: f64, mu: f64, mean_m: f64) -> Result<()> {
    ensure_open_unit("eta", eta)?;
    ensure_modes("mu", mu)?;
    if !(mean_m > 0.0 && mean_m.is_finite()) {
        return Err(Error::Domain(format!("mean_m = {mean_m} must be positive")));
    }
    Ok(())
}

/// Left side of the transmittance condition `2 eta t mu - (1-t)^2 <m> > 0`.
pub fn transmittance_margin(eta: f64, t: f64, mu: f64, mean_m: f64) -> f64 {
    2.0 * eta * t * mu - (1.0 - t).powi(2) * mean_m
}

/// Smallest transmittance that still allows R < 1 with Poissonian noise.
pub fn t_min(eta: f64, mu: f64, mean_m: f64) -> Result<f64> {
    check_twb(eta, mu, mean_m)?;
    let a = eta * mu / mean_m;
    // (1 + a) - sqrt(a (2 + a)) rewritten as 1 / ((1 + a) + sqrt(a (2 + a)))
    // since the two roots multiply to 1; avoids cancellation for large a.
    Ok(1.0 / ((1.0 + a) + (a * (2.0 + a)).sqrt()))
}

/// Largest thermal-noise mean compatible with R < 1.
pub fn thermal_noise_max(eta: f64, t: f64, mu: f64, mean_m: f64, mu_noise: f64) -> Result<ThresholdReport> {
    check_twb(eta, mu, mean_m)?;
    ensure_open_unit("t", t)?;
    ensure_modes("mu_noise", mu_noise)?;
    let margin = transmittance_margin(eta, t, mu, mean_m);
    Ok(if margin > 0.0 {
        ThresholdReport {
            kind: ThresholdKind::ThermalNoiseMax,
            value: Some((mu_noise * margin * mean_m / mu).sqrt()),
            feasible: true,
        }
    } else {
        ThresholdReport {
            kind: ThresholdKind::ThermalNoiseMax,
            value: None,
            feasible: false,
        }
    })
}

/// Right side of the Fock-noise condition `<m_N> > -[2 - (1-t)^2 <m> / (eta t mu)] <m>`.
pub fn fock_noise_bound(eta: f64, t: f64, mu: f64, mean_m: f64) -> Result<f64> {
    check_twb(eta, mu, mean_m)?;
    ensure_open_unit("t", t)?;
    Ok(-(2.0 - (1.0 - t).powi(2) * mean_m / (eta * t * mu)) * mean_m)
}

/// Minimum detected Fock mean needed for R < 1, if any.
///
/// Above `t_min` every Fock mean works and the report is `NoneRequired`.
pub fn fock_noise_threshold(eta: f64, t: f64, mu: f64, mean_m: f64) -> Result<ThresholdReport> {
    let bound = fock_noise_bound(eta, t, mu, mean_m)?;
    Ok(if bound > 0.0 {
        ThresholdReport {
            kind: ThresholdKind::FockNoiseMin,
            value: Some(bound),
            feasible: true,
        }
    } else {
        ThresholdReport {
            kind: ThresholdKind::NoneRequired,
            value: None,
            feasible: true,
        }
    })
}

pub fn classify_value(r: f64) -> Classification {
    if (r - 1.0).abs() <= BOUNDARY_TOLERANCE {
        Classification::Boundary
    } else if r < 1.0 {
        Classification::Nonclassical
    } else {
        Classification::Classical
    }
}

pub fn classify(p: &TwbParams, noise: &NoiseModel) -> Result<Classification> {
    nrf_noisy_lossy(p, noise).map(classify_value)
}

// Zero width: bisect down to adjacent floats.
const NUMERIC_TOL: f64 = 0.0;
const NOISE_SEARCH_LIMIT: f64 = 1e15;

/// Root of `R(t) - 1` for Poissonian noise, found by bisection on (0, 1].
pub fn t_min_numeric(eta: f64, mu: f64, mean_m: f64) -> Result<f64> {
    check_twb(eta, mu, mean_m)?;
    let f = |t: f64| {
        let p = TwbParams::symmetric(mean_m, mu, eta, t);
        nrf_coherent(&p, 0.0).map(|r| r - 1.0).unwrap_or(f64::NAN)
    };
    bisect(f, f64::MIN_POSITIVE, 1.0, NUMERIC_TOL)
}

/// Thermal bound by bisection on `R(<m_N>) - 1`; `None` when R >= 1 at zero noise.
pub fn thermal_noise_max_numeric(
    eta: f64,
    t: f64,
    mu: f64,
    mean_m: f64,
    mu_noise: f64,
) -> Result<Option<f64>> {
    check_twb(eta, mu, mean_m)?;
    let p = TwbParams::symmetric(mean_m, mu, eta, t);
    let f = |x: f64| nrf_thermal(&p, x, mu_noise).map(|r| r - 1.0).unwrap_or(f64::NAN);
    if f(0.0) >= 0.0 {
        return Ok(None);
    }
    let hi = expand_bracket(f, 0.0, mean_m.max(1.0), NOISE_SEARCH_LIMIT)
        .ok_or_else(|| Error::Domain("thermal noise never crosses R = 1".into()))?;
    bisect(f, 0.0, hi, NUMERIC_TOL).map(Some)
}

/// Fock bound by bisection on `R(<m_N>) - 1`; `None` when R < 1 already at zero noise.
pub fn fock_noise_threshold_numeric(eta: f64, t: f64, mu: f64, mean_m: f64) -> Result<Option<f64>> {
    check_twb(eta, mu, mean_m)?;
    let p = TwbParams::symmetric(mean_m, mu, eta, t);
    let f = |x: f64| nrf_fock(&p, x).map(|r| r - 1.0).unwrap_or(f64::NAN);
    if f(0.0) < 0.0 {
        return Ok(None);
    }
    let hi = expand_bracket(f, 0.0, mean_m.max(1.0), NOISE_SEARCH_LIMIT)
        .ok_or_else(|| Error::Domain("Fock noise never reaches R < 1".into()))?;
    bisect(f, 0.0, hi, NUMERIC_TOL).map(Some)
}

/// Transmittance at which the thermal-noise bound stops existing, found by
/// bisection on the feasibility flag of [`thermal_noise_max`].
pub fn thermal_feasibility_edge(eta: f64, mu: f64, mean_m: f64, mu_noise: f64) -> Result<f64> {
    let flag = |t: f64| match thermal_noise_max(eta, t, mu, mean_m, mu_noise) {
        Ok(r) if r.feasible => 1.0,
        _ => -1.0,
    };
    bisect(flag, f64::MIN_POSITIVE, 1.0, NUMERIC_TOL)
}
