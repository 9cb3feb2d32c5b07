//! Shot-by-shot photon-counting simulator.
//!
//! Each shot draws a shared photon number `n` for both arms from the
//! multimode thermal law (as a gamma-Poisson mixture, so non-integer mode
//! counts work), thins it binomially on each arm and adds an independent
//! noise draw on arm 2.
//!
//! Work is cut into fixed-size shards. Shard `i` draws from a ChaCha stream
//! keyed by `(seed, i)` and shard results are reduced in index order with
//! exact integer sums, so output does not depend on the worker count.

use std::env;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nrf::TwbParams;
use crate::photon_stats::{multithermal_pmf, NoiseModel};

/// Shots per shard; part of the determinism contract.
pub const SHARD_SHOTS: u64 = 1 << 16;

/// Heralds rarer than this are refused rather than rejection-sampled.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "TBNRF_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotRecord {
    pub k1: u64,
    pub k2: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrfEstimate {
    pub r_hat: f64,
    /// Delta-method standard error of `r_hat`.
    pub std_err: f64,
    pub shots: u64,
    pub mean1: f64,
    pub mean2: f64,
    /// Unbiased sample variances of k1 and k2.
    pub var1: f64,
    pub var2: f64,
}

impl NrfEstimate {
    pub fn mean1_std_err(&self) -> f64 {
        (self.var1 / self.shots as f64).sqrt()
    }

    pub fn mean2_std_err(&self) -> f64 {
        (self.var2 / self.shots as f64).sqrt()
    }
}

/// How the heralded signal arm is detected when sampling conditional noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalEfficiency {
    /// Signal detected with the herald efficiency.
    SameAsHerald,
    /// Signal photons counted without loss.
    Unit,
}

/// Number of worker threads: `TBNRF_THREADS` if set to a positive integer,
/// otherwise the available cores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(usize);

impl Workers {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::Input("worker count must be positive".into()));
        }
        Ok(Self(threads))
    }

    pub fn from_env() -> Result<Self> {
        match env::var(THREADS_ENV) {
            Ok(raw) => match raw.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Self(n)),
                _ => Err(Error::Input(format!(
                    "{THREADS_ENV} = {raw:?} is not a positive integer"
                ))),
            },
            Err(_) => Ok(Self(
                std::thread::available_parallelism().map_or(1, |n| n.get()),
            )),
        }
    }

    pub fn threads(self) -> usize {
        self.0
    }

    pub(crate) fn install<R: Send>(self, job: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.0)
            .build()
            .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// Generator for shard `shard` of a run seeded with `seed`.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Multimode thermal counts with a fixed mean, as a gamma-Poisson mixture.
#[derive(Debug, Clone, Copy)]
struct ThermalSampler {
    intensity: Option<Gamma<f64>>,
}

impl ThermalSampler {
    fn new(mean: f64, modes: f64) -> Result<Self> {
        if mean == 0.0 {
            return Ok(Self { intensity: None });
        }
        let gamma = Gamma::new(modes, mean / modes)
            .map_err(|e| Error::Domain(format!("thermal sampler: {e}")))?;
        Ok(Self {
            intensity: Some(gamma),
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.intensity {
            None => 0,
            Some(g) => poisson(g.sample(rng), rng),
        }
    }
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    match Poisson::new(lambda) {
        Ok(p) => p.sample(rng) as u64,
        // Only reachable for lambda beyond ~1e19.
        Err(_) => lambda.round() as u64,
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("probability checked").sample(rng)
}

/// Rejection sampler for heralded signal counts.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalSampler {
    photons: ThermalSampler,
    herald_value: u64,
    herald_efficiency: f64,
    signal: SignalEfficiency,
    acceptance: f64,
}

impl ConditionalSampler {
    pub fn new(model: &NoiseModel, signal: SignalEfficiency) -> Result<Self> {
        model.validate()?;
        let NoiseModel::Conditional {
            unconditioned_mean,
            modes,
            herald_value,
            herald_efficiency,
        } = *model
        else {
            return Err(Error::Input(format!(
                "conditional sampler needs conditional noise, got {}",
                model.name()
            )));
        };
        // Herald counts follow the multimode thermal law of the detected mean.
        let acceptance = if unconditioned_mean == 0.0 || herald_efficiency == 0.0 {
            if herald_value == 0 { 1.0 } else { 0.0 }
        } else {
            multithermal_pmf(herald_value, unconditioned_mean / modes, modes)?
        };
        if acceptance < MIN_ACCEPTANCE {
            return Err(Error::RejectionTimeout {
                acceptance,
                limit: MIN_ACCEPTANCE,
            });
        }
        if herald_efficiency == 0.0 && unconditioned_mean > 0.0 {
            return Err(Error::Domain(
                "a herald with zero efficiency leaves the photon mean undefined".into(),
            ));
        }
        let photon_mean = if unconditioned_mean == 0.0 {
            0.0
        } else {
            unconditioned_mean / herald_efficiency
        };
        Ok(Self {
            photons: ThermalSampler::new(photon_mean, modes)?,
            herald_value,
            herald_efficiency,
            signal,
            acceptance,
        })
    }

    /// Exact probability that a single draw passes the herald.
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        // Expected attempts are 1 / acceptance <= 1e6.
        let budget = (100.0 / self.acceptance).ceil().min(1e9) as u64;
        for _ in 0..budget {
            let n = self.photons.sample(rng);
            if binomial(n, self.herald_efficiency, rng) == self.herald_value {
                return Ok(match self.signal {
                    SignalEfficiency::SameAsHerald => binomial(n, self.herald_efficiency, rng),
                    SignalEfficiency::Unit => n,
                });
            }
        }
        Err(Error::RejectionTimeout {
            acceptance: self.acceptance,
            limit: MIN_ACCEPTANCE,
        })
    }
}

/// One heralded signal count for a conditional noise model.
pub fn sample_conditional_noise<R: Rng + ?Sized>(
    model: &NoiseModel,
    signal: SignalEfficiency,
    rng: &mut R,
) -> Result<u64> {
    ConditionalSampler::new(model, signal)?.sample(rng)
}

#[derive(Debug, Clone, Copy)]
enum NoiseSampler {
    None,
    Coherent(f64),
    Thermal(ThermalSampler),
    Fock { photons: u64, efficiency: f64 },
    Conditional(ConditionalSampler),
}

impl NoiseSampler {
    fn new(model: &NoiseModel) -> Result<Self> {
        model.validate()?;
        Ok(match *model {
            NoiseModel::None => NoiseSampler::None,
            NoiseModel::Coherent { mean } => NoiseSampler::Coherent(mean),
            NoiseModel::MultiThermal { mean, modes } => {
                NoiseSampler::Thermal(ThermalSampler::new(mean, modes)?)
            }
            NoiseModel::Fock {
                photon_number,
                detection_efficiency,
            } => NoiseSampler::Fock {
                photons: photon_number,
                efficiency: detection_efficiency,
            },
            NoiseModel::Conditional { .. } => NoiseSampler::Conditional(ConditionalSampler::new(
                model,
                SignalEfficiency::SameAsHerald,
            )?),
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        Ok(match self {
            NoiseSampler::None => 0,
            NoiseSampler::Coherent(mean) => poisson(*mean, rng),
            NoiseSampler::Thermal(s) => s.sample(rng),
            NoiseSampler::Fock { photons, efficiency } => binomial(*photons, *efficiency, rng),
            NoiseSampler::Conditional(s) => s.sample(rng)?,
        })
    }
}

/// Prepared per-shot sampler for a twin beam, channel and noise source.
#[derive(Debug, Clone, Copy)]
pub struct ShotSampler {
    photons: ThermalSampler,
    eta1: f64,
    eta2_effective: f64,
    noise: NoiseSampler,
}

impl ShotSampler {
    pub fn new(p: &TwbParams, noise: &NoiseModel) -> Result<Self> {
        p.validate()?;
        Ok(Self {
            photons: ThermalSampler::new(p.photon_mean(), p.modes)?,
            eta1: p.eta1,
            eta2_effective: p.eta2_effective(),
            noise: NoiseSampler::new(noise)?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ShotRecord> {
        let n = self.photons.sample(rng);
        let k1 = binomial(n, self.eta1, rng);
        let k2 = binomial(n, self.eta2_effective, rng) + self.noise.sample(rng)?;
        Ok(ShotRecord { k1, k2 })
    }
}

/// Draws one shot. Prefer [`ShotSampler`] when drawing many.
pub fn sample_shot<R: Rng + ?Sized>(p: &TwbParams, noise: &NoiseModel, rng: &mut R) -> Result<ShotRecord> {
    ShotSampler::new(p, noise)?.sample(rng)
}

fn shard_sizes(shots: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let shards = shots.div_ceil(SHARD_SHOTS) as usize;
    (0..shards).into_par_iter().map(move |i| {
        let i = i as u64;
        let start = i * SHARD_SHOTS;
        (i, SHARD_SHOTS.min(shots - start))
    })
}

/// All shots of a seeded run, in shard order.
pub fn simulate_shots(
    p: &TwbParams,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    workers: Workers,
) -> Result<Vec<ShotRecord>> {
    let sampler = ShotSampler::new(p, noise)?;
    let shards: Vec<Result<Vec<ShotRecord>>> = workers.install(|| {
        shard_sizes(shots)
            .map(|(i, len)| {
                let mut rng = shard_rng(seed, i);
                (0..len).map(|_| sampler.sample(&mut rng)).collect()
            })
            .collect()
    })?;
    let mut out = Vec::with_capacity(shots as usize);
    for shard in shards {
        out.extend(shard?);
    }
    Ok(out)
}

/// Exact power sums of d = k1 - k2 and s = k1 + k2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiffMoments {
    pub n: u64,
    pub d: i128,
    pub d2: i128,
    pub d3: i128,
    pub d4: i128,
    pub s: i128,
    pub s2: i128,
    pub ds: i128,
    pub d2s: i128,
}

impl DiffMoments {
    pub fn push(&mut self, shot: ShotRecord) {
        let d = shot.k1 as i128 - shot.k2 as i128;
        let s = shot.k1 as i128 + shot.k2 as i128;
        self.n += 1;
        self.d += d;
        self.d2 += d * d;
        self.d3 += d * d * d;
        self.d4 += d * d * d * d;
        self.s += s;
        self.s2 += s * s;
        self.ds += d * s;
        self.d2s += d * d * s;
    }

    pub fn merge(&mut self, other: &DiffMoments) {
        self.n += other.n;
        self.d += other.d;
        self.d2 += other.d2;
        self.d3 += other.d3;
        self.d4 += other.d4;
        self.s += other.s;
        self.s2 += other.s2;
        self.ds += other.ds;
        self.d2s += other.d2s;
    }

    /// R estimate: unbiased variance of d over the mean of s, with a
    /// delta-method standard error from the influence function
    /// `psi = ((d - d_bar)^2 - V) / S - V (s - S) / S^2`.
    pub fn estimate(&self) -> Result<NrfEstimate> {
        if self.n < 2 {
            return Err(Error::Input(format!("need at least 2 shots, got {}", self.n)));
        }
        if self.s == 0 {
            return Err(Error::Degenerate);
        }
        let n_int = self.n as i128;
        let n = self.n as f64;
        let unbiased = |sum_sq: i128, sum: i128| {
            (n_int * sum_sq - sum * sum) as f64 / (n * (n - 1.0))
        };
        let var_d = unbiased(self.d2, self.d);
        let s_bar = self.s as f64 / n;
        let r_hat = var_d / s_bar;

        let e = |x: i128| x as f64 / n;
        let d_bar = e(self.d);
        let mu2 = e(self.d2) - d_bar * d_bar;
        let mu4 = e(self.d4) - 4.0 * d_bar * e(self.d3) + 6.0 * d_bar * d_bar * e(self.d2)
            - 3.0 * d_bar.powi(4);
        let var_s = e(self.s2) - s_bar * s_bar;
        let c21 = e(self.d2s) - 2.0 * d_bar * e(self.ds) + d_bar * d_bar * s_bar - s_bar * mu2;
        let var_psi = (mu4 - mu2 * mu2) / s_bar.powi(2) - 2.0 * mu2 * c21 / s_bar.powi(3)
            + mu2 * mu2 * var_s / s_bar.powi(4);
        let std_err = (var_psi.max(0.0) / n).sqrt();

        // k1 = (s + d) / 2 and k2 = (s - d) / 2.
        let k1_sum = (self.s + self.d) / 2;
        let k2_sum = (self.s - self.d) / 2;
        let k1_sq = (self.s2 + 2 * self.ds + self.d2) / 4;
        let k2_sq = (self.s2 - 2 * self.ds + self.d2) / 4;
        Ok(NrfEstimate {
            r_hat,
            std_err,
            shots: self.n,
            mean1: k1_sum as f64 / n,
            mean2: k2_sum as f64 / n,
            var1: unbiased(k1_sq, k1_sum),
            var2: unbiased(k2_sq, k2_sum),
        })
    }
}

impl FromIterator<ShotRecord> for DiffMoments {
    fn from_iter<I: IntoIterator<Item = ShotRecord>>(iter: I) -> Self {
        let mut m = DiffMoments::default();
        iter.into_iter().for_each(|s| m.push(s));
        m
    }
}

/// Accumulated moments of a seeded run without storing the shots.
pub fn simulate_moments(
    p: &TwbParams,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    workers: Workers,
) -> Result<DiffMoments> {
    let sampler = ShotSampler::new(p, noise)?;
    let shards: Vec<Result<DiffMoments>> = workers.install(|| {
        shard_sizes(shots)
            .map(|(i, len)| {
                let mut rng = shard_rng(seed, i);
                let mut acc = DiffMoments::default();
                for _ in 0..len {
                    acc.push(sampler.sample(&mut rng)?);
                }
                Ok(acc)
            })
            .collect()
    })?;
    let mut total = DiffMoments::default();
    for shard in shards {
        total.merge(&shard?);
    }
    Ok(total)
}

pub fn estimate_nrf_with(
    p: &TwbParams,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    workers: Workers,
) -> Result<NrfEstimate> {
    if shots < 2 {
        return Err(Error::Input(format!("need at least 2 shots, got {shots}")));
    }
    simulate_moments(p, noise, shots, seed, workers)?.estimate()
}

/// Empirical R over `shots` simulated shots, using [`Workers::from_env`].
pub fn estimate_nrf(p: &TwbParams, noise: &NoiseModel, shots: u64, seed: u64) -> Result<NrfEstimate> {
    estimate_nrf_with(p, noise, shots, seed, Workers::from_env()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Workers {
        Workers::new(1).unwrap()
    }

    #[test]
    fn lossless_noiseless_arms_match_shot_by_shot() {
        let p = TwbParams::symmetric(3.0, 2.5, 1.0, 1.0);
        let shots = simulate_shots(&p, &NoiseModel::None, 5000, 7, one()).unwrap();
        assert!(shots.iter().all(|s| s.k1 == s.k2));
        assert!(shots.iter().any(|s| s.k1 > 0));
    }

    #[test]
    fn vanishing_efficiency_detects_nothing() {
        let p = TwbParams::symmetric(0.0, 10.0, 1e-300, 1.0);
        let shots = simulate_shots(&p, &NoiseModel::None, 1000, 1, one()).unwrap();
        assert!(shots.iter().all(|s| s.k1 == 0 && s.k2 == 0));
    }

    #[test]
    fn all_dark_run_is_degenerate() {
        let p = TwbParams::symmetric(0.0, 10.0, 0.5, 1.0);
        assert!(matches!(
            estimate_nrf_with(&p, &NoiseModel::None, 100, 1, one()),
            Err(Error::Degenerate)
        ));
        assert!(estimate_nrf_with(&p, &NoiseModel::None, 1, 1, one()).is_err());
    }

    #[test]
    fn moments_match_two_pass_estimator() {
        let p = TwbParams::symmetric(4.0, 3.0, 0.3, 0.6);
        let shots = simulate_shots(&p, &NoiseModel::Coherent { mean: 1.5 }, 20_000, 3, one()).unwrap();
        let est = shots.iter().copied().collect::<DiffMoments>().estimate().unwrap();
        let n = shots.len() as f64;
        let d: Vec<f64> = shots.iter().map(|s| s.k1 as f64 - s.k2 as f64).collect();
        let d_bar = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|x| (x - d_bar).powi(2)).sum::<f64>() / (n - 1.0);
        let s_bar = shots.iter().map(|s| (s.k1 + s.k2) as f64).sum::<f64>() / n;
        assert!((est.r_hat - var / s_bar).abs() < 1e-12);
        assert!(est.std_err > 0.0);
    }

    #[test]
    fn sharding_is_worker_independent() {
        let p = TwbParams::symmetric(2.0, 1.7, 0.4, 0.8);
        let noise = NoiseModel::MultiThermal { mean: 0.7, modes: 1.3 };
        let shots = 3 * SHARD_SHOTS + 17;
        let a = simulate_shots(&p, &noise, shots, 11, one()).unwrap();
        let b = simulate_shots(&p, &noise, shots, 11, Workers::new(4).unwrap()).unwrap();
        assert_eq!(a, b);
        let m = simulate_moments(&p, &noise, shots, 11, Workers::new(3).unwrap()).unwrap();
        assert_eq!(m, a.iter().copied().collect::<DiffMoments>());
    }

    #[test]
    fn perfect_herald_returns_the_herald_value() {
        let model = NoiseModel::Conditional {
            unconditioned_mean: 5.0,
            modes: 10.0,
            herald_value: 5,
            herald_efficiency: 1.0,
        };
        let mut rng = shard_rng(5, 0);
        let sampler = ConditionalSampler::new(&model, SignalEfficiency::SameAsHerald).unwrap();
        for _ in 0..2000 {
            assert_eq!(sampler.sample(&mut rng).unwrap(), 5);
        }
    }

    #[test]
    fn blind_herald_times_out() {
        let model = NoiseModel::Conditional {
            unconditioned_mean: 5.0,
            modes: 10.0,
            herald_value: 3,
            herald_efficiency: 0.0,
        };
        let mut rng = shard_rng(5, 0);
        match sample_conditional_noise(&model, SignalEfficiency::SameAsHerald, &mut rng) {
            Err(Error::RejectionTimeout { acceptance, .. }) => assert_eq!(acceptance, 0.0),
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn rare_herald_reports_acceptance_rate() {
        let model = NoiseModel::Conditional {
            unconditioned_mean: 0.01,
            modes: 100.0,
            herald_value: 8,
            herald_efficiency: 0.5,
        };
        match ConditionalSampler::new(&model, SignalEfficiency::Unit) {
            Err(Error::RejectionTimeout { acceptance, .. }) => assert!(acceptance > 0.0 && acceptance < 1e-6),
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn threads_env_is_validated() {
        assert!(Workers::new(0).is_err());
        assert_eq!(Workers::new(8).unwrap().threads(), 8);
    }
}
