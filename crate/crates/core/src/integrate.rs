//! Time integration, rotation numbers, death detection and trajectory-level
//! checks of the large-coupling conclusions.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{order_parameter, vector_field_into, wrap_canonical, InteractionSpec, PhaseState, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Rk4Fixed { dt: f64 },
    DormandPrince45 { abs_tol: f64, rel_tol: f64, max_dt: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    pub horizon: f64,
    pub sample_stride: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::DormandPrince45 { abs_tol: 1e-9, rel_tol: 1e-9, max_dt: 0.1 },
            horizon: 500.0,
            sample_stride: 0.1,
        }
    }
}

impl SolverOptions {
    pub fn with_horizon(horizon: f64) -> Self {
        SolverOptions { horizon, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            Method::Rk4Fixed { dt } => dt > 0.0 && dt.is_finite(),
            Method::DormandPrince45 { abs_tol, rel_tol, max_dt } => {
                abs_tol > 0.0 && rel_tol > 0.0 && max_dt > 0.0 && max_dt.is_finite()
            }
        };
        if !ok {
            return Err(Error::Config("solver step and tolerances must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(self.sample_stride > 0.0 && self.sample_stride <= self.horizon) {
            return Err(Error::Config("sample stride must lie in (0, horizon]".into()));
        }
        Ok(())
    }

    /// Nominal local accuracy: the tolerance for the adaptive method, `dt⁴` for RK4.
    pub fn tolerance(&self) -> f64 {
        match self.method {
            Method::Rk4Fixed { dt } => dt.powi(4),
            Method::DormandPrince45 { abs_tol, rel_tol, .. } => abs_tol.max(rel_tol),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub r_series: Vec<f64>,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn final_state(&self) -> &PhaseState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_r(&self) -> f64 {
        *self.r_series.last().expect("trajectory has at least one sample")
    }

    /// CSV with header `t,theta_1..theta_N,R`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let n = self.n();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("theta_{i}")));
        header.push("R".into());
        wtr.write_record(&header)?;
        for ((t, s), r) in self.times.iter().zip(&self.states).zip(&self.r_series) {
            let mut row = Vec::with_capacity(n + 2);
            row.push(t.to_string());
            row.extend(s.iter().map(|x| x.to_string()));
            row.push(r.to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    fn push(&mut self, spec: &InteractionSpec, t: f64, y: &[f64]) {
        self.times.push(t);
        self.r_series.push(order_parameter(spec, y));
        self.states.push(PhaseState::new(y.to_vec()));
    }
}

/// Integrate from `initial` over `[0, horizon]`, recording every `sample_stride`.
pub fn simulate(
    config: &SystemConfig,
    spec: &InteractionSpec,
    initial: &PhaseState,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    config.validate()?;
    opts.validate()?;
    if initial.len() != config.n {
        return Err(Error::Config(format!(
            "initial state has {} phases, expected {}",
            initial.len(),
            config.n
        )));
    }
    if initial.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("initial state must be finite".into()));
    }
    let mut traj = Trajectory::default();
    traj.push(spec, 0.0, initial);
    let f = |y: &[f64], out: &mut [f64]| vector_field_into(config, spec, y, out);
    let sample_times = sample_grid(opts.horizon, opts.sample_stride);
    match opts.method {
        Method::Rk4Fixed { dt } => rk4(&f, initial, &sample_times, dt, spec, &mut traj),
        Method::DormandPrince45 { abs_tol, rel_tol, max_dt } => dopri(
            &f,
            initial,
            &sample_times,
            Tolerances { abs: abs_tol, rel: rel_tol, max_dt, min_dt: 1e-14 * opts.horizon },
            spec,
            &mut traj,
        ),
    }?;
    Ok(traj)
}

fn sample_grid(horizon: f64, stride: f64) -> Vec<f64> {
    let k = (horizon / stride * (1.0 + 1e-12)).floor() as usize;
    let mut ts: Vec<f64> = (1..=k).map(|i| i as f64 * stride).collect();
    match ts.last() {
        Some(&last) if (horizon - last).abs() <= 1e-9 * horizon => {
            *ts.last_mut().unwrap() = horizon;
        }
        _ => ts.push(horizon),
    }
    ts
}

fn rk4(
    f: &impl Fn(&[f64], &mut [f64]),
    y0: &[f64],
    samples: &[f64],
    dt: f64,
    spec: &InteractionSpec,
    traj: &mut Trajectory,
) -> Result<()> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut t = 0.0;
    for &ts in samples {
        while t < ts {
            let h = if ts - t < dt * (1.0 + 1e-9) { ts - t } else { dt };
            f(&y, &mut k1);
            axpy(&mut tmp, &y, 0.5 * h, &k1);
            f(&tmp, &mut k2);
            axpy(&mut tmp, &y, 0.5 * h, &k2);
            f(&tmp, &mut k3);
            axpy(&mut tmp, &y, h, &k3);
            f(&tmp, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t = if h == ts - t { ts } else { t + h };
            traj.accepted_steps += 1;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                message: format!("non-finite state at t = {t}"),
                partial: Box::new(std::mem::take(traj)),
            });
        }
        traj.push(spec, ts, &y);
    }
    Ok(())
}

fn axpy(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    for ((o, &yi), &xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

struct Tolerances {
    abs: f64,
    rel: f64,
    max_dt: f64,
    min_dt: f64,
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri(
    f: &impl Fn(&[f64], &mut [f64]),
    y0: &[f64],
    samples: &[f64],
    tol: Tolerances,
    spec: &InteractionSpec,
    traj: &mut Trajectory,
) -> Result<()> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k = [(); 7].map(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(&y, &mut k[0]);
    let mut t = 0.0;
    let mut h = tol.max_dt.min(samples[0]);
    for &ts in samples {
        while t < ts {
            let remaining = ts - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            for i in 0..n {
                tmp[i] = y[i] + step * A21 * k[0][i];
            }
            f(&tmp, &mut k[1]);
            for i in 0..n {
                tmp[i] = y[i] + step * (A31 * k[0][i] + A32 * k[1][i]);
            }
            f(&tmp, &mut k[2]);
            for i in 0..n {
                tmp[i] = y[i] + step * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            f(&tmp, &mut k[3]);
            for i in 0..n {
                tmp[i] = y[i]
                    + step * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            f(&tmp, &mut k[4]);
            for i in 0..n {
                tmp[i] = y[i]
                    + step
                        * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
            }
            f(&tmp, &mut k[5]);
            for i in 0..n {
                ynew[i] = y[i]
                    + step * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            f(&ynew, &mut k[6]);
            let mut err2 = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = tol.abs + tol.rel * y[i].abs().max(ynew[i].abs());
                err2 += (e / sc).powi(2);
            }
            let err = (err2 / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration {
                    message: format!("non-finite error estimate at t = {t}"),
                    partial: Box::new(std::mem::take(traj)),
                });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { ts } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                traj.accepted_steps += 1;
                // A step shortened to land on a sample says nothing about the next step size.
                if !last || factor < 1.0 {
                    h = (step * factor).min(tol.max_dt);
                }
            } else {
                traj.rejected_steps += 1;
                h = (step * factor.min(1.0)).min(tol.max_dt);
            }
            if h < tol.min_dt {
                return Err(Error::Integration {
                    message: format!("step size underflow ({h:e}) at t = {t}"),
                    partial: Box::new(std::mem::take(traj)),
                });
            }
        }
        traj.push(spec, ts, &y);
    }
    Ok(())
}

/// Second-half secant estimate `(θ_i(T) - θ_i(T/2)) / (T/2)`.
///
/// The first sample at or after `T/2` anchors the secant.
pub fn rotation_numbers(traj: &Trajectory) -> Result<Vec<f64>> {
    let horizon = traj.horizon();
    if horizon <= 0.0 {
        return Err(Error::InsufficientData("trajectory has zero horizon".into()));
    }
    let start = traj
        .times
        .iter()
        .position(|&t| t >= 0.5 * horizon * (1.0 - 1e-12))
        .unwrap_or(traj.times.len());
    if traj.times.len() - start < 2 {
        return Err(Error::InsufficientData(
            "fewer than two samples in the second half of the trajectory".into(),
        ));
    }
    let dt = horizon - traj.times[start];
    let a = &traj.states[start];
    let b = traj.final_state();
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (y - x) / dt).collect())
}

/// Per oscillator: is `max - min` of θ_i over samples in `[window_start, T]` below 2π?
pub fn detect_death(traj: &Trajectory, window_start: f64) -> Result<Vec<bool>> {
    let start = traj.times.iter().position(|&t| t >= window_start);
    let Some(start) = start else {
        return Err(Error::InsufficientData(format!("no samples after t = {window_start}")));
    };
    let n = traj.n();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for s in &traj.states[start..] {
        for i in 0..n {
            lo[i] = lo[i].min(s[i]);
            hi[i] = hi[i].max(s[i]);
        }
    }
    Ok(lo.iter().zip(&hi).map(|(a, b)| b - a < 2.0 * PI).collect())
}

/// Whether the final sample is (numerically) an equilibrium: `‖F‖∞ < 1e-6`.
pub fn has_converged(config: &SystemConfig, spec: &InteractionSpec, traj: &Trajectory) -> bool {
    let y = traj.final_state();
    let mut out = vec![0.0; y.len()];
    vector_field_into(config, spec, y, &mut out);
    out.iter().all(|v| v.abs() < 1e-6)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    CompleteDeath,
    PartialDeath,
    CompleteLocking,
    PartialLocking,
    Incoherence,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub rho: Vec<f64>,
    pub regime: Regime,
    pub death_flags: Vec<bool>,
}

/// Default classification tolerance `max(1e-3, 1e-2 · mean|ω|)`.
pub fn default_regime_tol(omega: &[f64]) -> f64 {
    let mean = omega.iter().map(|w| w.abs()).sum::<f64>() / omega.len().max(1) as f64;
    (1e-2 * mean).max(1e-3)
}

/// Regime from rotation numbers. Death flags are only checked for length.
pub fn classify_regime(rho: &[f64], death_flags: &[bool], tol: f64) -> Result<Regime> {
    if rho.is_empty() {
        return Err(Error::InsufficientData("no rotation numbers".into()));
    }
    if rho.len() != death_flags.len() {
        return Err(Error::Config("rotation numbers and death flags differ in length".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("regime tolerance must be positive".into()));
    }
    let dead = rho.iter().filter(|r| r.abs() < tol).count();
    if dead == rho.len() {
        return Ok(Regime::CompleteDeath);
    }
    if dead > 0 {
        return Ok(Regime::PartialDeath);
    }
    let lo = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < tol {
        return Ok(Regime::CompleteLocking);
    }
    let mut sorted = rho.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] < tol) {
        return Ok(Regime::PartialLocking);
    }
    Ok(Regime::Incoherence)
}

/// Rotation numbers, death flags on the second half, and the regime.
pub fn regime_report(traj: &Trajectory, tol: f64) -> Result<RegimeReport> {
    let rho = rotation_numbers(traj)?;
    let death_flags = detect_death(traj, 0.5 * traj.horizon())?;
    let regime = classify_regime(&rho, &death_flags, tol)?;
    Ok(RegimeReport { rho, regime, death_flags })
}

/// Outcome of checking conclusions (a), (c), (e) of the large-coupling theorem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub r0: f64,
    pub mu: f64,
    pub threshold: f64,
    pub slack: f64,
    pub lower_bound_r: bool,
    pub trapping: bool,
    pub ordering: bool,
    pub failures: Vec<String>,
}

impl TheoremCheck {
    pub fn all_pass(&self) -> bool {
        self.lower_bound_r && self.trapping && self.ordering
    }
}

/// Check the sinusoidal large-coupling conclusions along a sampled trajectory.
///
/// Inequalities are tested only at sample times, each with slack `10 · tol`.
pub fn verify_theorem_conclusions(
    traj: &Trajectory,
    config: &SystemConfig,
    mu: f64,
    solver_tol: f64,
) -> Result<TheoremCheck> {
    if traj.times.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    let r0 = traj.r_series[0];
    let kappa = config.kappa;
    let wmax = config.omega_max();
    if !(mu > 0.0 && mu < r0.min(1.0)) {
        return Err(Error::Precondition(format!(
            "0 < mu < min(R0, 1) violated: mu = {mu}, R0 = {r0}"
        )));
    }
    let gain = (r0 - mu) * (mu * (2.0 - mu)).sqrt();
    let threshold = wmax / gain;
    if !(kappa > threshold) {
        return Err(Error::Precondition(format!(
            "kappa > |Omega|_inf / ((R0 - mu) sqrt(mu (2 - mu))) violated: {kappa} <= {threshold}"
        )));
    }
    let slack = 10.0 * solver_tol;
    let n = config.n;
    let mut failures = Vec::new();

    let rmin = traj.r_series.iter().copied().fold(f64::INFINITY, f64::min);
    let lower_bound_r = rmin >= r0 - mu - slack;
    if !lower_bound_r {
        failures.push(format!("(a) min R = {rmin} < R0 - mu = {}", r0 - mu));
    }

    let entrance = PI / (kappa * gain - wmax);
    let mut first_hit: Vec<Option<usize>> = vec![None; n];
    let mut trapping = true;
    for i in 0..n {
        let hit = traj.states.iter().position(|s| s[i].cos() >= -1.0 + mu);
        first_hit[i] = hit;
        let Some(k0) = hit else { continue };
        let t0 = traj.times[k0];
        for (t, s) in traj.times[k0..].iter().zip(&traj.states[k0..]) {
            let c = s[i].cos();
            if c < -1.0 + mu - slack {
                trapping = false;
                failures.push(format!("(c) oscillator {i} left the trap at t = {t}: cos = {c}"));
                break;
            }
            if *t >= t0 + entrance && c < 1.0 - mu - slack {
                trapping = false;
                failures.push(format!(
                    "(c) oscillator {i} not inside cos >= 1 - mu by t = {t} (entered at {t0}): cos = {c}"
                ));
                break;
            }
        }
    }

    let contraction = kappa * (r0 - mu) * (1.0 - mu);
    let mut ordering = true;
    'pairs: for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (wi, wj) = (config.omega[i], config.omega[j]);
            if wi < wj || (wi == wj && j < i) {
                continue;
            }
            let (Some(ki), Some(kj)) = (first_hit[i], first_hit[j]) else { continue };
            let t0 = traj.times[ki.max(kj)];
            let gap = wi - wj;
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let tau = t - t0 - entrance;
                if tau < 0.0 {
                    continue;
                }
                let d = wrap_canonical(s[i] - s[j]);
                let decay = PI * (-contraction * tau).exp();
                if gap > 0.0 {
                    let upper = gap / contraction + decay;
                    if d > upper + slack {
                        ordering = false;
                        failures.push(format!("(e) pair ({i},{j}) at t = {t}: diff {d} > {upper}"));
                        break 'pairs;
                    }
                    let tau2 = tau - PI / gap;
                    if tau2 >= 0.0 {
                        let lower = gap / (2.0 * kappa) * (1.0 - (-2.0 * kappa * tau2).exp());
                        if d < lower - slack {
                            ordering = false;
                            failures.push(format!("(e) pair ({i},{j}) at t = {t}: diff {d} < {lower}"));
                            break 'pairs;
                        }
                    }
                } else if d.abs() > decay + slack {
                    ordering = false;
                    failures.push(format!("(e) equal pair ({i},{j}) at t = {t}: |diff| {d} > {decay}"));
                    break 'pairs;
                }
            }
        }
    }

    Ok(TheoremCheck { r0, mu, threshold, slack, lower_bound_r, trapping, ordering, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_grid_ends_on_horizon() {
        assert_eq!(sample_grid(1.0, 0.25), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(sample_grid(1.0, 0.3).last(), Some(&1.0));
        assert_eq!(sample_grid(1.0, 0.3).len(), 4);
        let g = sample_grid(500.0, 0.1);
        assert_eq!(g.len(), 5000);
        assert_eq!(*g.last().unwrap(), 500.0);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_regime(&[0.0, 0.0, 0.0], &[true; 3], 1e-3).unwrap(), Regime::CompleteDeath);
        assert_eq!(classify_regime(&[0.0, 0.0, 0.5], &[true; 3], 1e-3).unwrap(), Regime::PartialDeath);
        assert_eq!(classify_regime(&[0.5, 0.5], &[false; 2], 1e-3).unwrap(), Regime::CompleteLocking);
        assert_eq!(
            classify_regime(&[0.5, 0.5, 0.9], &[false; 3], 1e-3).unwrap(),
            Regime::PartialLocking
        );
        assert_eq!(classify_regime(&[0.5, 0.7, 0.9], &[false; 3], 1e-3).unwrap(), Regime::Incoherence);
        assert!(classify_regime(&[], &[], 1e-3).is_err());
    }
}
