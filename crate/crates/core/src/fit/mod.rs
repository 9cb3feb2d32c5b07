//! Weighted least-squares fits of measured R curves.
//!
//! The objective is the chi-square `sum(((r_i - R(x_i)) / sigma_i)^2)` over
//! the free parameters. Each free parameter is searched in logistic
//! coordinates between its bounds, so the simplex never leaves the box and
//! parameters spanning decades (mode counts, means) behave like log scales
//! near their lower bound.

mod model;
pub mod simplex;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::montecarlo::{shard_rng, Workers};

pub use model::{model_eval, model_params, FitModel, ParamMap, ParamName, XRole};
use simplex::{minimize, SimplexOptions};

/// Relative agreement required between the two best restarts.
pub const RESTART_AGREEMENT: f64 = 1e-8;
/// Absolute floor under [`RESTART_AGREEMENT`] for fits that reach zero residual.
pub const RESTART_AGREEMENT_FLOOR: f64 = 1e-12;
/// Mu is flagged weakly identified when the imbalance term is smaller than
/// this fraction of the range of R over the series.
pub const WEAK_IDENTIFICATION: f64 = 1e-6;
pub const DEFAULT_RESTARTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    pub x: f64,
    pub r: f64,
    pub sigma_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries {
    pub points: Vec<DataPoint>,
    pub x_role: XRole,
}

impl DataSeries {
    pub fn new(points: Vec<DataPoint>, x_role: XRole) -> Result<Self> {
        let series = Self { points, x_role };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Input(format!(
                "a data series needs at least 2 points, got {}",
                self.points.len()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.x >= 0.0 && p.x.is_finite()) {
                return Err(Error::Input(format!("point {i}: x = {} must be finite and >= 0", p.x)));
            }
            if !p.r.is_finite() {
                return Err(Error::Input(format!("point {i}: r = {} is not finite", p.r)));
            }
            if !(p.sigma_r > 0.0 && p.sigma_r.is_finite()) {
                return Err(Error::Input(format!("point {i}: sigma_r = {} must be positive", p.sigma_r)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub model: FitModel,
    pub free: Vec<ParamName>,
    pub frozen: ParamMap,
    /// Overrides of [`ParamName::default_bounds`].
    pub bounds: BTreeMap<ParamName, (f64, f64)>,
    /// Explicit starting values; anything missing is drawn.
    pub init: ParamMap,
    pub restarts: usize,
    pub seed: u64,
}

impl FitSpec {
    pub fn new(model: FitModel, free: Vec<ParamName>, frozen: ParamMap) -> Self {
        Self {
            model,
            free,
            frozen,
            bounds: BTreeMap::new(),
            init: ParamMap::new(),
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }

    pub fn bounds_of(&self, name: ParamName) -> (f64, f64) {
        self.bounds.get(&name).copied().unwrap_or_else(|| name.default_bounds())
    }

    pub fn validate(&self, x_role: XRole) -> Result<()> {
        let expected: BTreeSet<ParamName> = model_params(self.model, x_role).into_iter().collect();
        let free: BTreeSet<ParamName> = self.free.iter().copied().collect();
        if free.len() != self.free.len() {
            return Err(Error::InvalidSpec("a parameter is listed as free twice".into()));
        }
        if let Some(p) = free.iter().find(|p| self.frozen.contains_key(p)) {
            return Err(Error::InvalidSpec(format!("{p} is both free and frozen")));
        }
        let covered: BTreeSet<ParamName> = free.iter().chain(self.frozen.keys()).copied().collect();
        if covered != expected {
            let missing: Vec<_> = expected.difference(&covered).map(|p| p.as_str()).collect();
            let extra: Vec<_> = covered.difference(&expected).map(|p| p.as_str()).collect();
            return Err(Error::InvalidSpec(format!(
                "{} with x role {x_role} needs exactly {{{}}}; missing [{}], unexpected [{}]",
                self.model,
                expected.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", "),
                missing.join(", "),
                extra.join(", "),
            )));
        }
        if self.free.is_empty() {
            return Err(Error::InvalidSpec("no free parameters".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidSpec("restarts must be positive".into()));
        }
        for (&name, &value) in &self.frozen {
            let (lo, hi) = name.domain();
            if !(value >= lo && value <= hi) {
                return Err(Error::InvalidSpec(format!(
                    "frozen {name} = {value} outside its domain [{lo}, {hi}]"
                )));
            }
        }
        for &name in &self.free {
            let (lo, hi) = self.bounds_of(name);
            let (dlo, dhi) = name.domain();
            if !(lo < hi && lo >= dlo && hi <= dhi && hi.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "bounds [{lo}, {hi}] for {name} must be finite, increasing and inside [{dlo}, {dhi}]"
                )));
            }
            if let Some(&v) = self.init.get(&name) {
                if !(v >= lo && v <= hi) {
                    return Err(Error::InvalidSpec(format!(
                        "initial {name} = {v} outside bounds [{lo}, {hi}]"
                    )));
                }
            }
        }
        if let Some(p) = self.init.keys().find(|p| !free.contains(p)) {
            return Err(Error::InvalidSpec(format!("initial value given for non-free {p}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Free and frozen parameters at the optimum.
    pub estimates: ParamMap,
    pub free: Vec<ParamName>,
    /// Minimum of the chi-square objective.
    pub objective: f64,
    pub chi2_nu: f64,
    pub dof: usize,
    pub converged: bool,
    pub n_restarts_used: usize,
    /// Weighted residuals `(r_i - R(x_i)) / sigma_i` in input order.
    pub residuals: Vec<f64>,
    pub weakly_identified: Vec<ParamName>,
    /// Best objective after each simplex iteration of the winning restart.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: ParamName) -> f64 {
        self.estimates[&name]
    }
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

struct Coordinates {
    names: Vec<ParamName>,
    bounds: Vec<(f64, f64)>,
}

impl Coordinates {
    fn to_params(&self, v: &[f64], frozen: &ParamMap) -> ParamMap {
        let mut params = frozen.clone();
        for ((&name, &(lo, hi)), &vi) in self.names.iter().zip(&self.bounds).zip(v) {
            params.insert(name, lo + (hi - lo) * logistic(vi));
        }
        params
    }

    fn to_internal(&self, name_index: usize, value: f64) -> f64 {
        let (lo, hi) = self.bounds[name_index];
        let u = ((value - lo) / (hi - lo)).clamp(1e-12, 1.0 - 1e-12);
        (u / (1.0 - u)).ln()
    }

    fn draw_start<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.names.len())
            .map(|i| {
                let (lo, hi) = self.bounds[i];
                let floor = lo.max(hi * 1e-6);
                let value = (floor.ln() + rng.random::<f64>() * (hi.ln() - floor.ln())).exp();
                self.to_internal(i, value)
            })
            .collect()
    }

    fn user_start(&self, init: &ParamMap) -> Vec<f64> {
        (0..self.names.len())
            .map(|i| {
                let (lo, hi) = self.bounds[i];
                let fallback = (lo.max(hi * 1e-6) * hi).sqrt();
                self.to_internal(i, init.get(&self.names[i]).copied().unwrap_or(fallback))
            })
            .collect()
    }
}

fn chi_square(series: &[DataPoint], model: FitModel, params: &ParamMap, x_role: XRole) -> f64 {
    let mut total = 0.0;
    for p in series {
        match model_eval(model, params, p.x, x_role) {
            Ok(r) => total += ((p.r - r) / p.sigma_r).powi(2),
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

/// Reduced chi-square of `params` against `series` with `n_free` fitted parameters.
pub fn chi2_nu(series: &DataSeries, model: FitModel, params: &ParamMap, n_free: usize) -> Result<f64> {
    let points = series.points.len();
    if points <= n_free {
        return Err(Error::DegreesOfFreedom { points, free: n_free });
    }
    let mut total = 0.0;
    for p in &series.points {
        let r = model_eval(model, params, p.x, series.x_role)?;
        total += ((p.r - r) / p.sigma_r).powi(2);
    }
    Ok(total / (points - n_free) as f64)
}

struct RestartOutcome {
    x: Vec<f64>,
    value: f64,
    trace: Vec<f64>,
}

/// Fits `series` with the free parameters of `spec`.
///
/// A run whose two best restarts disagree is returned with
/// `converged = false`; the best point found is still reported.
pub fn fit(series: &DataSeries, spec: &FitSpec) -> Result<FitResult> {
    series.validate()?;
    spec.validate(series.x_role)?;
    let points = series.points.len();
    let n_free = spec.free.len();
    if points <= n_free {
        return Err(Error::DegreesOfFreedom { points, free: n_free });
    }

    // Canonical order makes the result independent of input order.
    let mut sorted = series.points.clone();
    sorted.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.r.total_cmp(&b.r))
            .then(a.sigma_r.total_cmp(&b.sigma_r))
    });

    let coords = Coordinates {
        names: spec.free.clone(),
        bounds: spec.free.iter().map(|&p| spec.bounds_of(p)).collect(),
    };
    let mut starts = Vec::with_capacity(spec.restarts + 1);
    if !spec.init.is_empty() {
        starts.push(coords.user_start(&spec.init));
    }
    let mut rng = shard_rng(spec.seed, 0);
    for _ in 0..spec.restarts {
        starts.push(coords.draw_start(&mut rng));
    }

    let objective = |v: &[f64]| {
        chi_square(&sorted, spec.model, &coords.to_params(v, &spec.frozen), series.x_role)
    };
    let opts = SimplexOptions::default();
    let outcomes: Vec<RestartOutcome> = Workers::from_env()?.install(|| {
        starts
            .par_iter()
            .map(|x0| {
                let r = minimize(&objective, x0, &opts);
                RestartOutcome { x: r.x, value: r.value, trace: r.trace }
            })
            .collect()
    })?;

    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| outcomes[a].value.total_cmp(&outcomes[b].value).then(a.cmp(&b)));
    let best = &outcomes[order[0]];
    if !best.value.is_finite() {
        return Err(Error::InvalidSpec(
            "the model cannot be evaluated anywhere inside the bounds".into(),
        ));
    }
    let converged = order.get(1).is_some_and(|&i| {
        let (a, b) = (best.value, outcomes[i].value);
        (a - b).abs() <= RESTART_AGREEMENT * a.abs().max(b.abs()) + RESTART_AGREEMENT_FLOOR
    });

    let estimates = coords.to_params(&best.x, &spec.frozen);
    let mut residuals = Vec::with_capacity(points);
    for p in &series.points {
        residuals.push((p.r - model_eval(spec.model, &estimates, p.x, series.x_role)?) / p.sigma_r);
    }
    let objective_value = chi_square(&sorted, spec.model, &estimates, series.x_role);
    let dof = points - n_free;

    let mut weakly_identified = Vec::new();
    if spec.free.contains(&ParamName::Mu) && mu_is_weak(series, spec.model, &estimates)? {
        weakly_identified.push(ParamName::Mu);
    }

    Ok(FitResult {
        estimates,
        free: spec.free.clone(),
        objective: objective_value,
        chi2_nu: objective_value / dof as f64,
        dof,
        converged,
        n_restarts_used: outcomes.len(),
        residuals,
        weakly_identified,
        trace: best.trace.clone(),
    })
}

fn mu_is_weak(series: &DataSeries, model: FitModel, params: &ParamMap) -> Result<bool> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut term = 0.0f64;
    for p in &series.points {
        let r = model_eval(model, params, p.x, series.x_role)?;
        lo = lo.min(r);
        hi = hi.max(r);
        term = term.max(model::imbalance_term(model, params, p.x, series.x_role)?.abs());
    }
    Ok(term == 0.0 || term < WEAK_IDENTIFICATION * (hi - lo))
}

/// Settings shared by both stages of [`two_stage_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageSpec {
    pub model: FitModel,
    pub bounds: BTreeMap<ParamName, (f64, f64)>,
    pub restarts: usize,
    pub seed: u64,
}

impl TwoStageSpec {
    pub fn new(model: FitModel) -> Self {
        Self {
            model,
            bounds: BTreeMap::new(),
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// Fits the channel on a noiseless series, then the noise on a noisy one.
///
/// Stage 1 frees `mu`, `eta` and `t` with the noise mean frozen at zero.
/// Stage 2 freezes those three and frees `mean_noise` (plus `mu_noise` for
/// the thermal model).
pub fn two_stage_fit(
    clean: &DataSeries,
    noisy: &DataSeries,
    spec: &TwoStageSpec,
) -> Result<(FitResult, FitResult)> {
    if clean.x_role != XRole::TwbMean || noisy.x_role != XRole::TwbMean {
        return Err(Error::InvalidSpec("two-stage fits need twb_mean series".into()));
    }
    let channel = [ParamName::Mu, ParamName::Eta, ParamName::T];

    let mut frozen = ParamMap::from([(ParamName::MeanNoise, 0.0)]);
    if spec.model == FitModel::Thermal {
        frozen.insert(ParamName::MuNoise, 1.0);
    }
    let stage1 = FitSpec {
        bounds: spec.bounds.clone(),
        restarts: spec.restarts,
        seed: spec.seed,
        ..FitSpec::new(spec.model, channel.to_vec(), frozen)
    };
    let first = fit(clean, &stage1)?;

    let frozen: ParamMap = channel.iter().map(|&p| (p, first.get(p))).collect();
    let mut free = vec![ParamName::MeanNoise];
    if spec.model == FitModel::Thermal {
        free.push(ParamName::MuNoise);
    }
    let stage2 = FitSpec {
        bounds: spec.bounds.clone(),
        restarts: spec.restarts,
        seed: spec.seed.wrapping_add(1),
        ..FitSpec::new(spec.model, free, frozen)
    };
    let second = fit(noisy, &stage2)?;
    Ok((first, second))
}
