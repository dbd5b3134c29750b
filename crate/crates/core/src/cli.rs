//! Command-line front end: a JSON run configuration, kebab-case flag
//! overrides, and one function per subcommand.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::equilibria::{critical_coupling, enumerate_equilibria};
use crate::error::{Error, Result};
use crate::integrate::{
    default_regime_tol, detect_death, has_converged, regime_report, simulate, verify_theorem_conclusions, Method,
    Regime, SolverOptions,
};
use crate::model::{CustomTable, InteractionSpec, PhaseState, SystemConfig};
use crate::montecarlo::{
    empirical_death_probability, empirical_order_param_cdf, estimate_escape_measure, run_indexed,
    sample_frequencies, sample_state, McConfig, McReport,
};
use crate::thresholds::{
    corollary_mu, escape_measure_bound, probability_bound, toy_thresholds, BoundKind, BoundParams,
};

pub const DESK_N: usize = 100;
pub const FULL_N: usize = 800;

/// Interaction family and optional constant overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionConfig {
    /// `sinusoidal`, `power-cosine`, `rectified-poisson` or `custom`.
    pub family: Option<String>,
    pub n: Option<u32>,
    pub r: Option<f64>,
    pub influence_csv: Option<PathBuf>,
    pub sensitivity_csv: Option<PathBuf>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r_exp: Option<f64>,
    pub alpha0: Option<f64>,
    pub i_star: Option<f64>,
    pub sup_i: Option<f64>,
}

/// Everything a run needs. Missing fields take desk-scale defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub omega: Option<Vec<f64>>,
    pub omega_range: Option<[f64; 2]>,
    pub kappa: Option<f64>,
    pub interaction: InteractionConfig,
    pub initial: Option<Vec<f64>>,
    /// `dopri45` (default) or `rk4`.
    pub method: Option<String>,
    pub dt: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_dt: Option<f64>,
    pub horizon: Option<f64>,
    pub sample_stride: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub kappa_grid: Option<Vec<f64>>,
    pub gamma_grid: Option<Vec<f64>>,
    /// Bound kind for `bounds`, estimator for `montecarlo`.
    pub kind: Option<String>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub t_level: Option<f64>,
    pub c_mu: Option<f64>,
    pub beta: Option<f64>,
    pub r_star: Option<f64>,
    pub i_star: Option<f64>,
    pub omega_max: Option<f64>,
    pub mu: Option<f64>,
    pub regime_tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub full: bool,
}

#[derive(Parser, Debug)]
#[command(name = "winfree", version, about = "Winfree oscillator toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Integrate one trajectory; writes trajectory.csv and summary.json.
    Simulate,
    /// Regime grid over (kappa, gamma); writes sweep.csv.
    Sweep,
    /// Enumerate and classify equilibria.
    Equilibria,
    /// Smallest coupling admitting an equilibrium.
    CriticalCoupling,
    /// Evaluate a closed-form probability bound.
    Bounds,
    /// Monte Carlo estimate against its bound.
    Montecarlo,
    /// Check the large-coupling conclusions along a trajectory.
    Verify,
    /// Bisection estimate of the pathwise critical coupling.
    KappaPc,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Comma-separated frequencies.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    omega: Option<Vec<f64>>,
    /// `lo,hi` for seeded uniform frequencies.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    omega_range: Option<Vec<f64>>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    initial: Option<Vec<f64>>,
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    max_dt: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    sample_stride: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    kappa_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Time horizon of a finite-time bound.
    #[arg(long = "T", global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    t_level: Option<f64>,
    #[arg(long, global = true)]
    c_mu: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    r_star: Option<f64>,
    #[arg(long, global = true)]
    i_star: Option<f64>,
    #[arg(long, global = true)]
    omega_max: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    regime_tol: Option<f64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Full-scale N = 800 instead of the desk-scale default.
    #[arg(long, global = true)]
    full: bool,
}

macro_rules! override_fields {
    ($cfg:ident, $flags:ident, $($f:ident),*) => {
        $( if $flags.$f.is_some() { $cfg.$f = $flags.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn apply(&mut self, flags: &Flags) {
        override_fields!(
            self, flags, n, omega, kappa, initial, method, dt, abs_tol, rel_tol, max_dt, horizon, sample_stride,
            samples, seed, workers, kappa_grid, gamma_grid, kind, epsilon, delta, t, t_level, c_mu, beta, r_star,
            i_star, omega_max, mu, regime_tol, out_dir
        );
        if let Some(r) = &flags.omega_range {
            if r.len() == 2 {
                self.omega_range = Some([r[0], r[1]]);
            } else {
                self.omega_range = Some([f64::NAN, f64::NAN]);
            }
        }
        if flags.family.is_some() {
            self.interaction.family = flags.family.clone();
        }
        self.full |= flags.full;
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let kappa = self.kappa.unwrap_or(1.0);
        let omega = match (&self.omega, self.omega_range) {
            (Some(w), _) => {
                if let Some(n) = self.n {
                    if n != w.len() {
                        return Err(Error::Config(format!("n = {n} but omega has {} entries", w.len())));
                    }
                }
                w.clone()
            }
            (None, range) => {
                let [lo, hi] = range.unwrap_or([-1.0, 1.0]);
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Config("omega_range must be two finite values lo <= hi".into()));
                }
                sample_frequencies(self.oscillators(), lo, hi, self.seed())
            }
        };
        SystemConfig::new(omega, kappa)
    }

    fn oscillators(&self) -> usize {
        self.n.unwrap_or(if self.full { FULL_N } else { DESK_N })
    }

    pub fn spec(&self) -> Result<InteractionSpec> {
        let ic = &self.interaction;
        let family = ic.family.as_deref().unwrap_or("sinusoidal").to_ascii_lowercase().replace('_', "-");
        let mut spec = match family.as_str() {
            "sinusoidal" => InteractionSpec::sinusoidal(),
            "power-cosine" => InteractionSpec::power_cosine(ic.n.unwrap_or(1))?,
            "rectified-poisson" => InteractionSpec::rectified_poisson(ic.r.unwrap_or(0.0))?,
            "custom" => {
                let (Some(i), Some(s)) = (&ic.influence_csv, &ic.sensitivity_csv) else {
                    return Err(Error::Config("custom family needs influence_csv and sensitivity_csv".into()));
                };
                InteractionSpec::custom(CustomTable::from_csv(i, s)?)
            }
            other => return Err(Error::Config(format!("unknown interaction family {other:?}"))),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = ic.$f { spec.$f = v; } )* };
        }
        set!(c1, c2, c3, c4, c5, p, q, r_exp, alpha0, i_star, sup_i);
        Ok(spec)
    }

    pub fn solver(&self) -> Result<SolverOptions> {
        let d = SolverOptions::default();
        let method = match self.method.as_deref().unwrap_or("dopri45") {
            "dopri45" | "dormand-prince45" => {
                let Method::DormandPrince45 { abs_tol, rel_tol, max_dt } = d.method else { unreachable!() };
                Method::DormandPrince45 {
                    abs_tol: self.abs_tol.unwrap_or(abs_tol),
                    rel_tol: self.rel_tol.unwrap_or(rel_tol),
                    max_dt: self.max_dt.unwrap_or(max_dt),
                }
            }
            "rk4" => Method::Rk4Fixed { dt: self.dt.unwrap_or(0.01) },
            other => return Err(Error::Config(format!("unknown method {other:?}"))),
        };
        let horizon = self.horizon.unwrap_or(d.horizon);
        let opts = SolverOptions {
            method,
            horizon,
            sample_stride: self.sample_stride.unwrap_or(d.sample_stride).min(horizon),
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn mc(&self) -> Result<McConfig> {
        let mc = McConfig {
            samples: self.samples.unwrap_or(1000),
            seed: self.seed(),
            workers: self.workers.unwrap_or_else(|| rayon::current_num_threads().max(1)),
        };
        mc.validate()?;
        Ok(mc)
    }

    pub fn initial_state(&self, n: usize) -> Result<PhaseState> {
        match &self.initial {
            Some(v) if v.len() != n => Err(Error::Config(format!("initial has {} phases, expected {n}", v.len()))),
            Some(v) => Ok(PhaseState::new(v.clone())),
            None => Ok(sample_state(n, self.seed(), 0)),
        }
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn bound_params(&self) -> BoundParams {
        BoundParams {
            epsilon: self.epsilon,
            delta: self.delta,
            t: self.t,
            c_mu: self.c_mu,
            beta: self.beta,
            r_star: self.r_star,
            i_star: self.i_star,
            t_level: self.t_level,
            kappa: self.kappa,
            omega_max: self.omega_max,
        }
    }
}

fn parse_bound_kind(s: &str) -> Result<BoundKind> {
    let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
    Ok(match key.as_str() {
        "sincosmain" => BoundKind::SincosMain,
        "sincosmaintail" => BoundKind::SincosMainTail,
        "sincostime" => BoundKind::SincosTime,
        "sincostimelarge" => BoundKind::SincosTimeLarge,
        "orderparamcdf" => BoundKind::OrderParamCdf,
        "generalmaincor" => BoundKind::GeneralMaincor,
        "kappalarge" => BoundKind::KappaLarge,
        "quantis" => BoundKind::QuantIs,
        "escapemeasure" => BoundKind::EscapeMeasure,
        _ => return Err(Error::Config(format!("unknown bound kind {s:?}"))),
    })
}

fn emit(value: &impl Serialize, out: &mut dyn Write, file: Option<PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}")?;
    if let Some(path) = file {
        fs::write(path, format!("{text}\n"))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub final_r: f64,
    pub rotation_numbers: Vec<f64>,
    pub death_flags: Vec<bool>,
    pub regime: Regime,
    pub converged: bool,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let system = cfg.system()?;
    let spec = cfg.spec()?;
    let opts = cfg.solver()?;
    let init = cfg.initial_state(system.n)?;
    let dir = cfg.out_dir()?;
    let traj = match simulate(&system, &spec, &init, &opts) {
        Ok(t) => t,
        Err(Error::Integration { message, partial }) => {
            partial.write_csv(fs::File::create(dir.join("trajectory.csv"))?)?;
            return Err(Error::Integration { message, partial });
        }
        Err(e) => return Err(e),
    };
    traj.write_csv(fs::File::create(dir.join("trajectory.csv"))?)?;
    let tol = cfg.regime_tol.unwrap_or_else(|| default_regime_tol(&system.omega));
    let report = regime_report(&traj, tol)?;
    let summary = SimulationSummary {
        final_r: traj.final_r(),
        rotation_numbers: report.rho,
        death_flags: detect_death(&traj, 0.0)?,
        regime: report.regime,
        converged: has_converged(&system, &spec, &traj),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
    };
    emit(&summary, out, Some(dir.join("summary.json")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub kappa: f64,
    pub gamma: f64,
    pub regime: Regime,
    pub death_fraction: f64,
    /// Time average of R over the second half of the run.
    #[serde(rename = "mean_R_final")]
    pub mean_r_final: f64,
}

/// Equal-mass quantile sample of the uniform law on `[1-γ, 1+γ]`.
pub fn quantile_frequencies(n: usize, gamma: f64) -> Vec<f64> {
    (0..n).map(|i| 1.0 - gamma + 2.0 * gamma * (i as f64 + 0.5) / n as f64).collect()
}

/// One sweep cell: frequencies from the quantile sample, shared seeded initial state.
pub fn sweep_cell(
    n: usize,
    kappa: f64,
    gamma: f64,
    spec: &InteractionSpec,
    init: &PhaseState,
    opts: &SolverOptions,
    regime_tol: Option<f64>,
) -> Result<SweepCell> {
    let system = SystemConfig::new(quantile_frequencies(n, gamma), kappa)?;
    let traj = simulate(&system, spec, init, opts)?;
    let tol = regime_tol.unwrap_or_else(|| default_regime_tol(&system.omega));
    let report = regime_report(&traj, tol)?;
    let dead = report.death_flags.iter().filter(|&&d| d).count();
    let half = 0.5 * traj.horizon();
    let tail: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.r_series)
        .filter(|(t, _)| **t >= half)
        .map(|(_, r)| *r)
        .collect();
    Ok(SweepCell {
        kappa,
        gamma,
        regime: report.regime,
        death_fraction: dead as f64 / n as f64,
        mean_r_final: tail.iter().sum::<f64>() / tail.len() as f64,
    })
}

pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepCell>> {
    let kappas = cfg.kappa_grid.clone().unwrap_or_default();
    let gammas = cfg.gamma_grid.clone().unwrap_or_default();
    if kappas.is_empty() || gammas.is_empty() {
        return Err(Error::Config("sweep needs non-empty kappa_grid and gamma_grid".into()));
    }
    let n = cfg.oscillators();
    let spec = cfg.spec()?;
    let opts = cfg.solver()?;
    let init = cfg.initial_state(n)?;
    let cells: Vec<(f64, f64)> = kappas.iter().flat_map(|&k| gammas.iter().map(move |&g| (k, g))).collect();
    let mc = McConfig { samples: cells.len() as u64, seed: cfg.seed(), workers: cfg.mc()?.workers };
    let results = run_indexed(&mc, |i| {
        let (k, g) = cells[i as usize];
        sweep_cell(n, k, g, &spec, &init, &opts, cfg.regime_tol)
    })?;
    results.into_iter().collect()
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let cells = run_sweep(cfg)?;
    let path = cfg.out_dir()?.join("sweep.csv");
    let mut wtr = csv::Writer::from_path(&path)?;
    for c in &cells {
        wtr.serialize(c)?;
    }
    wtr.flush()?;
    writeln!(out, "{}", path.display())?;
    Ok(())
}

pub fn cmd_equilibria(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let system = cfg.system()?;
    let eqs = enumerate_equilibria(&system)?;
    emit(&eqs, out, cfg.out_dir.as_ref().map(|d| d.join("equilibria.json")))
}

pub fn cmd_critical_coupling(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let system = cfg.system()?;
    emit(&critical_coupling(&system.omega)?, out, None)
}

pub fn cmd_bounds(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let kind = parse_bound_kind(cfg.kind.as_deref().unwrap_or("SincosMain"))?;
    let n = cfg.oscillators();
    let value = probability_bound(kind, n, &cfg.bound_params(), &cfg.spec()?)?;
    emit(&json!({ "kind": format!("{kind:?}"), "N": n, "bound": value }), out, None)
}

pub fn cmd_montecarlo(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let mc = cfg.mc()?;
    let kind = cfg.kind.as_deref().unwrap_or("order-param-cdf");
    let report = match kind {
        "order-param-cdf" => {
            let n = cfg.oscillators();
            let t = cfg.t_level.unwrap_or(0.5);
            let est = empirical_order_param_cdf(n, t, &mc)?;
            let params = BoundParams { t_level: Some(t), ..Default::default() };
            let bound = probability_bound(BoundKind::OrderParamCdf, n, &params, &InteractionSpec::sinusoidal())?;
            McReport::upper(kind, json!({ "N": n, "t_level": t, "samples": mc.samples, "seed": mc.seed }), est, bound.value)
        }
        "death" => {
            let system = cfg.system()?;
            let spec = cfg.spec()?;
            let opts = cfg.solver()?;
            let d = empirical_death_probability(&system, &spec, &opts, &mc)?;
            let bound = match d.epsilon {
                Some(e) => {
                    let params = BoundParams { epsilon: Some(e), ..Default::default() };
                    probability_bound(BoundKind::SincosMain, system.n, &params, &spec)?.value
                }
                None => 0.0,
            };
            McReport::lower(
                kind,
                json!({
                    "N": system.n, "kappa": system.kappa, "omega_max": system.omega_max(),
                    "epsilon": d.epsilon, "samples": mc.samples, "seed": mc.seed,
                    "death_only_estimate": d.death.estimate, "integration_failures": d.failures,
                }),
                d.death_with_floor,
                bound,
            )
        }
        "escape" => {
            let system = cfg.system()?;
            let spec = cfg.spec()?;
            let opts = cfg.solver()?;
            let delta = cfg.delta.unwrap_or(0.5);
            let t = cfg.t.unwrap_or(10.0);
            let est = estimate_escape_measure(&system, &spec, delta, t, &opts, &mc)?;
            let bound = escape_measure_bound(system.n, system.kappa, delta, t)?;
            McReport::upper(
                kind,
                json!({
                    "N": system.n, "kappa": system.kappa, "delta": delta, "T": t,
                    "samples": mc.samples, "seed": mc.seed, "checked_at": "solver output samples",
                }),
                est,
                bound.value,
            )
        }
        other => return Err(Error::Config(format!("unknown montecarlo kind {other:?}"))),
    };
    emit(&report, out, cfg.out_dir.as_ref().map(|d| d.join("montecarlo.json")))
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let system = cfg.system()?;
    let spec = cfg.spec()?;
    if !spec.is_sinusoidal() {
        return Err(Error::Unsupported("verify needs the sinusoidal family".into()));
    }
    let opts = cfg.solver()?;
    let init = cfg.initial_state(system.n)?;
    let r0 = crate::model::order_parameter(&spec, &init);
    let mu = cfg.mu.unwrap_or_else(|| corollary_mu(r0.clamp(f64::MIN_POSITIVE, 2.0)));
    let traj = simulate(&system, &spec, &init, &opts)?;
    let check = verify_theorem_conclusions(&traj, &system, mu, opts.tolerance())?;
    emit(&check, out, None)?;
    if check.all_pass() {
        Ok(())
    } else {
        Err(Error::Numeric(check.failures.join("; ")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathwiseEstimate {
    pub kappa_pc: f64,
    /// Bracket upper end used for the bisection.
    pub upper: f64,
    /// The predicate is evaluated on a finite horizon.
    pub horizon_dependent: bool,
}

/// Bisection for the smallest κ whose trajectory from `initial` stays bounded
/// over the second half of the horizon.
pub fn estimate_pathwise_critical_coupling(
    config: &SystemConfig,
    spec: &InteractionSpec,
    initial: &PhaseState,
    opts: &SolverOptions,
) -> Result<PathwiseEstimate> {
    let dies = |kappa: f64| -> bool {
        let c = config.with_kappa(kappa);
        match simulate(&c, spec, initial, opts) {
            Ok(traj) => detect_death(&traj, 0.5 * traj.horizon()).map(|f| f.iter().all(|&d| d)).unwrap_or(false),
            Err(_) => false,
        }
    };
    if dies(0.0) {
        return Ok(PathwiseEstimate { kappa_pc: 0.0, upper: 0.0, horizon_dependent: true });
    }
    let all: Vec<usize> = (0..config.n).collect();
    let mut hi = toy_thresholds(spec, config, &all)?.kappa_verytrivial;
    let mut tries = 0;
    while !dies(hi) {
        hi *= 2.0;
        tries += 1;
        if tries > 10 {
            return Err(Error::Numeric("no death observed below 1024 times the toy threshold".into()));
        }
    }
    let upper = hi;
    let mut lo = 0.0;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if dies(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PathwiseEstimate { kappa_pc: hi, upper, horizon_dependent: true })
}

pub fn cmd_kappa_pc(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let system = cfg.system()?;
    let spec = cfg.spec()?;
    let opts = cfg.solver()?;
    let init = cfg.initial_state(system.n)?;
    emit(&estimate_pathwise_critical_coupling(&system, &spec, &init, &opts)?, out, None)
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = (|| -> Result<()> {
        let mut cfg = match &cli.flags.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        if let Ok(s) = std::env::var("WINFREE_SEED") {
            cfg.seed = Some(s.trim().parse().map_err(|_| Error::Config(format!("WINFREE_SEED={s:?} is not a u64")))?);
        }
        cfg.apply(&cli.flags);
        match cli.command {
            Command::Simulate => cmd_simulate(&cfg, out),
            Command::Sweep => cmd_sweep(&cfg, out),
            Command::Equilibria => cmd_equilibria(&cfg, out),
            Command::CriticalCoupling => cmd_critical_coupling(&cfg, out),
            Command::Bounds => cmd_bounds(&cfg, out),
            Command::Montecarlo => cmd_montecarlo(&cfg, out),
            Command::Verify => cmd_verify(&cfg, out),
            Command::KappaPc => cmd_kappa_pc(&cfg, out),
        }
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
