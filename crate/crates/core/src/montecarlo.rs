//! Seeded sampling of uniform initial data and empirical estimates of the
//! probabilities bounded in `thresholds`.
//!
//! Sample `k` draws from its own ChaCha stream keyed by `(seed, k)`, so the
//! result does not depend on how samples are spread across workers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{detect_death, simulate, SolverOptions};
use crate::model::{order_parameter, InteractionSpec, PhaseState, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { samples: 1000, seed: 0, workers: 1 }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.workers == 0 {
            return Err(Error::Config("samples and workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub estimate: f64,
    pub std_error: f64,
    pub count: u64,
}

impl EstimateCI {
    pub fn from_hits(hits: u64, count: u64) -> Self {
        let p = hits as f64 / count as f64;
        EstimateCI { estimate: p, std_error: (p * (1.0 - p) / count as f64).sqrt(), count }
    }
}

/// Stream reserved for sampling frequencies, disjoint from the per-sample streams.
pub const FREQUENCY_STREAM: u64 = u64::MAX;

/// RNG for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Initial state for sample `index`, each phase uniform on `[-π, π)`.
pub fn sample_state(n: usize, seed: u64, index: u64) -> PhaseState {
    let mut rng = sample_rng(seed, index);
    PhaseState::new((0..n).map(|_| rng.gen_range(-PI..PI)).collect())
}

/// `n` frequencies uniform on `[lo, hi)` from the frequency stream.
pub fn sample_frequencies(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = sample_rng(seed, FREQUENCY_STREAM);
    (0..n).map(|_| if lo < hi { rng.gen_range(lo..hi) } else { lo }).collect()
}

pub fn sample_uniform_initial(n: usize, mc: &McConfig) -> Result<Vec<PhaseState>> {
    if n == 0 {
        return Err(Error::Config("n >= 1 required".into()));
    }
    mc.validate()?;
    run_indexed(mc, |k| sample_state(n, mc.seed, k))
}

/// Evaluate `f(k)` for every sample index on a pool of `mc.workers` threads,
/// returning results in index order.
pub fn run_indexed<T: Send>(mc: &McConfig, f: impl Fn(u64) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mc.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..mc.samples).into_par_iter().map(&f).collect()))
}

/// Fraction of uniform initial data with `R₀ ≤ t_level`.
pub fn empirical_order_param_cdf(n: usize, t_level: f64, mc: &McConfig) -> Result<EstimateCI> {
    if n == 0 {
        return Err(Error::Config("n >= 1 required".into()));
    }
    mc.validate()?;
    let spec = InteractionSpec::sinusoidal();
    let hits = run_indexed(mc, |k| order_parameter(&spec, &sample_state(n, mc.seed, k)) <= t_level)?;
    Ok(EstimateCI::from_hits(hits.iter().filter(|&&h| h).count() as u64, mc.samples))
}

/// Indicator of `R₀ ≤ t` for every level in `levels`, per sample. Lets nested
/// events be compared sample by sample.
pub fn order_param_indicators(n: usize, levels: &[f64], mc: &McConfig) -> Result<Vec<Vec<bool>>> {
    mc.validate()?;
    let spec = InteractionSpec::sinusoidal();
    run_indexed(mc, |k| {
        let r = order_parameter(&spec, &sample_state(n, mc.seed, k));
        levels.iter().map(|&t| r <= t).collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeathEstimate {
    /// Every oscillator satisfies sup - inf < 2π over the whole run.
    pub death: EstimateCI,
    /// Death together with `R(t) ≥ 1/√2 - 3ε/20` at every sample.
    pub death_with_floor: EstimateCI,
    pub epsilon: Option<f64>,
    pub r_floor: Option<f64>,
    pub failures: u64,
}

/// Empirical probability of oscillator death from uniform initial data.
///
/// The R floor uses the largest admissible `ε = min(1, κ/‖Ω‖∞ - 2)`; it is
/// only applied when `κ > 2‖Ω‖∞`.
pub fn empirical_death_probability(
    config: &SystemConfig,
    spec: &InteractionSpec,
    opts: &SolverOptions,
    mc: &McConfig,
) -> Result<DeathEstimate> {
    config.validate()?;
    opts.validate()?;
    mc.validate()?;
    let wmax = config.omega_max();
    let epsilon = if wmax == 0.0 {
        (config.kappa > 0.0).then_some(1.0)
    } else {
        let e = config.kappa / wmax - 2.0;
        (e > 0.0).then(|| e.min(1.0))
    };
    let r_floor = epsilon.map(|e| 1.0 / 2f64.sqrt() - 3.0 * e / 20.0);
    let outcomes = run_indexed(mc, |k| {
        let init = sample_state(config.n, mc.seed, k);
        match simulate(config, spec, &init, opts) {
            Ok(traj) => {
                let dead = detect_death(&traj, 0.0).map(|f| f.iter().all(|&d| d)).unwrap_or(false);
                let floor = r_floor.is_some_and(|fl| traj.r_series.iter().all(|&r| r >= fl));
                (dead, dead && floor, false)
            }
            Err(_) => (false, false, true),
        }
    })?;
    let count = |sel: fn(&(bool, bool, bool)) -> bool| outcomes.iter().filter(|o| sel(o)).count() as u64;
    Ok(DeathEstimate {
        death: EstimateCI::from_hits(count(|o| o.0), mc.samples),
        death_with_floor: EstimateCI::from_hits(count(|o| o.1), mc.samples),
        epsilon,
        r_floor,
        failures: count(|o| o.2),
    })
}

/// Fraction of uniform initial data with `R(t) < 1 - δ` at every sample time in `[0, T]`.
pub fn estimate_escape_measure(
    config: &SystemConfig,
    spec: &InteractionSpec,
    delta: f64,
    t: f64,
    opts: &SolverOptions,
    mc: &McConfig,
) -> Result<EstimateCI> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} not in (0, 1)")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain("T must be positive".into()));
    }
    mc.validate()?;
    let mut o = *opts;
    o.horizon = t;
    o.sample_stride = o.sample_stride.min(t);
    let level = 1.0 - delta;
    let outcomes = run_indexed(mc, |k| {
        let init = sample_state(config.n, mc.seed, k);
        simulate(config, spec, &init, &o).map(|traj| traj.r_series.iter().all(|&r| r < level))
    })?;
    let mut hits = 0;
    for o in outcomes {
        if o? {
            hits += 1;
        }
    }
    Ok(EstimateCI::from_hits(hits, mc.samples))
}

/// Serializable comparison of an estimate with its closed-form bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub kind: String,
    pub params: serde_json::Value,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    /// The estimate respects the bound within three standard errors.
    pub dominated: bool,
}

impl McReport {
    /// For bounds from above (`estimate ≤ bound`).
    pub fn upper(kind: &str, params: serde_json::Value, est: EstimateCI, bound: f64) -> Self {
        McReport {
            kind: kind.into(),
            params,
            estimate: est.estimate,
            std_error: est.std_error,
            bound,
            dominated: est.estimate <= bound + 3.0 * est.std_error,
        }
    }

    /// For bounds from below (`estimate ≥ bound`).
    pub fn lower(kind: &str, params: serde_json::Value, est: EstimateCI, bound: f64) -> Self {
        McReport {
            kind: kind.into(),
            params,
            estimate: est.estimate,
            std_error: est.std_error,
            bound,
            dominated: est.estimate >= bound - 3.0 * est.std_error,
        }
    }
}
