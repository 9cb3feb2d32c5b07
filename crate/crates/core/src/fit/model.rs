use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nrf::{nrf_coherent, nrf_fock, nrf_lossy_terms, nrf_thermal, TwbParams};
use crate::photon_stats::MomentPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamName {
    MeanM,
    Mu,
    Eta,
    T,
    MeanNoise,
    MuNoise,
}

impl ParamName {
    pub const ALL: [ParamName; 6] = [
        ParamName::MeanM,
        ParamName::Mu,
        ParamName::Eta,
        ParamName::T,
        ParamName::MeanNoise,
        ParamName::MuNoise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::MeanM => "mean_m",
            ParamName::Mu => "mu",
            ParamName::Eta => "eta",
            ParamName::T => "t",
            ParamName::MeanNoise => "mean_noise",
            ParamName::MuNoise => "mu_noise",
        }
    }

    /// Default search interval.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            ParamName::Eta | ParamName::T => (1e-3, 1.0),
            ParamName::Mu | ParamName::MuNoise => (1.0, 1e5),
            ParamName::MeanM | ParamName::MeanNoise => (0.0, 1e3),
        }
    }

    /// Hard domain that any bound must respect.
    pub(crate) fn domain(self) -> (f64, f64) {
        match self {
            ParamName::Eta | ParamName::T => (0.0, 1.0),
            ParamName::Mu | ParamName::MuNoise => (1.0, f64::INFINITY),
            ParamName::MeanM | ParamName::MeanNoise => (0.0, f64::INFINITY),
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim())
            .ok_or_else(|| Error::Input(format!("unknown parameter name {s:?}")))
    }
}

/// Noise family fitted to a data series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Coherent,
    Thermal,
    Fock,
}

impl FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "coherent" => Ok(FitModel::Coherent),
            "thermal" => Ok(FitModel::Thermal),
            "fock" => Ok(FitModel::Fock),
            other => Err(Error::Input(format!(
                "unknown model {other:?} (expected coherent, thermal or fock)"
            ))),
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            FitModel::Coherent => "coherent",
            FitModel::Thermal => "thermal",
            FitModel::Fock => "fock",
        })
    }
}

/// Which mean the abscissa of a data series sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XRole {
    NoiseMean,
    TwbMean,
}

impl XRole {
    pub fn param(self) -> ParamName {
        match self {
            XRole::NoiseMean => ParamName::MeanNoise,
            XRole::TwbMean => ParamName::MeanM,
        }
    }
}

impl FromStr for XRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "noise_mean" => Ok(XRole::NoiseMean),
            "twb_mean" => Ok(XRole::TwbMean),
            other => Err(Error::Input(format!(
                "unknown x role {other:?} (expected noise_mean or twb_mean)"
            ))),
        }
    }
}

impl fmt::Display for XRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            XRole::NoiseMean => "noise_mean",
            XRole::TwbMean => "twb_mean",
        })
    }
}

pub type ParamMap = BTreeMap<ParamName, f64>;

/// Parameters of `model` other than the one swept by `x_role`.
pub fn model_params(model: FitModel, x_role: XRole) -> Vec<ParamName> {
    let mut names = vec![
        ParamName::MeanM,
        ParamName::Mu,
        ParamName::Eta,
        ParamName::T,
        ParamName::MeanNoise,
    ];
    if model == FitModel::Thermal {
        names.push(ParamName::MuNoise);
    }
    names.retain(|&p| p != x_role.param());
    names
}

fn get(params: &ParamMap, name: ParamName) -> Result<f64> {
    params
        .get(&name)
        .copied()
        .ok_or_else(|| Error::InvalidSpec(format!("missing parameter {name}")))
}

struct Resolved {
    twb: TwbParams,
    mean_noise: f64,
    mu_noise: f64,
}

fn resolve(model: FitModel, params: &ParamMap, x: f64, x_role: XRole) -> Result<Resolved> {
    let pick = |name: ParamName| if name == x_role.param() { Ok(x) } else { get(params, name) };
    Ok(Resolved {
        twb: TwbParams::symmetric(
            pick(ParamName::MeanM)?,
            pick(ParamName::Mu)?,
            pick(ParamName::Eta)?,
            pick(ParamName::T)?,
        ),
        mean_noise: pick(ParamName::MeanNoise)?,
        mu_noise: if model == FitModel::Thermal {
            pick(ParamName::MuNoise)?
        } else {
            1.0
        },
    })
}

/// R predicted by `model` at abscissa `x`.
pub fn model_eval(model: FitModel, params: &ParamMap, x: f64, x_role: XRole) -> Result<f64> {
    let r = resolve(model, params, x, x_role)?;
    match model {
        FitModel::Coherent => nrf_coherent(&r.twb, r.mean_noise),
        FitModel::Thermal => nrf_thermal(&r.twb, r.mean_noise, r.mu_noise),
        FitModel::Fock => nrf_fock(&r.twb, r.mean_noise),
    }
}

/// Size of the mode-count (imbalance) term of R at abscissa `x`.
pub(crate) fn imbalance_term(model: FitModel, params: &ParamMap, x: f64, x_role: XRole) -> Result<f64> {
    let r = resolve(model, params, x, x_role)?;
    let m = r.mean_noise;
    let variance = match model {
        FitModel::Coherent => m,
        FitModel::Thermal => m * (m / r.mu_noise + 1.0),
        FitModel::Fock => (1.0 - r.twb.eta1 * r.twb.t) * m,
    };
    nrf_lossy_terms(&r.twb, MomentPair { mean: m, variance }).map(|t| t.imbalance)
}
