//! Closed-form coupling thresholds, death criteria and probability bounds,
//! plus grid checks of the structural conditions on `I` and `S`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{max_abs, wrap_pi, InteractionSpec, SystemConfig};

/// Grid checks tolerate this much rounding before calling a margin negative.
pub const GRID_ALLOWANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub name: String,
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<CriterionReport>,
}

impl CriterionReport {
    /// Report for `lhs > rhs`.
    pub fn greater(name: &str, lhs: f64, rhs: f64, detail: impl Into<String>) -> Self {
        let margin = if lhs.is_nan() || rhs.is_nan() { f64::NEG_INFINITY } else { lhs - rhs };
        CriterionReport {
            name: name.into(),
            satisfied: margin > 0.0,
            lhs,
            rhs,
            margin,
            detail: detail.into(),
            parts: Vec::new(),
        }
    }

    fn all(name: &str, parts: Vec<CriterionReport>) -> Self {
        let worst = parts
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("at least one part");
        let failed: Vec<&str> = parts.iter().filter(|p| !p.satisfied).map(|p| p.name.as_str()).collect();
        let detail = if failed.is_empty() {
            "all hypotheses hold".to_string()
        } else {
            format!("failed: {}", failed.join(", "))
        };
        CriterionReport {
            name: name.into(),
            satisfied: failed.is_empty(),
            lhs: worst.lhs,
            rhs: worst.rhs,
            margin: worst.margin,
            detail,
            parts,
        }
    }
}

/// Threshold coefficient `K_c(R0)` with `κ > K_c(R0)‖Ω‖∞` sufficient for death.
pub fn kc_coefficient(r0: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0 <= 2.0) {
        return domain(format!("R0 = {r0} not in (0, 2]"));
    }
    Ok(if r0 <= 1.0 {
        2.0 / r0.powf(1.5)
    } else {
        2.0 * (2.0 - r0) + 4.0 / (3.0 * 3f64.sqrt()) * (r0 - 1.0)
    })
}

/// `‖Ω‖∞ / ((R0 - μ) √(μ(2 - μ)))`.
pub fn sinusoidal_threshold(r0: f64, mu: f64, omega_max: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < r0.min(1.0)) {
        return domain(format!("mu = {mu} not in (0, min(R0, 1)) with R0 = {r0}"));
    }
    Ok(omega_max / ((r0 - mu) * (mu * (2.0 - mu)).sqrt()))
}

/// The choice of μ that turns the sinusoidal threshold into `K_c(R0)`.
pub fn corollary_mu(r0: f64) -> f64 {
    (3.0 + r0 - (r0 * r0 - 2.0 * r0 + 9.0).sqrt()) / 4.0
}

/// Threshold for general interaction functions satisfying (c₁)–(c₃).
pub fn general_threshold(spec: &InteractionSpec, r0: f64, omega_max: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return domain(format!("R0 = {r0} must be positive"));
    }
    let failed: Vec<String> = verify_interaction_conditions(spec, 10_000)?
        .into_iter()
        .filter(|c| ["c1", "c2", "c3"].contains(&c.name.as_str()) && !c.satisfied)
        .map(|c| c.name)
        .collect();
    if !failed.is_empty() {
        return Err(Error::Precondition(format!(
            "interaction constants fail {}",
            failed.join(", ")
        )));
    }
    Ok(general_threshold_unchecked(spec, r0, omega_max))
}

fn general_threshold_unchecked(spec: &InteractionSpec, r0: f64, omega_max: f64) -> f64 {
    let pq = spec.p / spec.q;
    let a = 2.0 * (2.0 * spec.c2).powf(pq) / (spec.c1 * spec.c3) * omega_max / r0.powf(1.0 + pq);
    let b = 2.0 / (spec.c1 * spec.c3 * (PI - spec.alpha0).powf(spec.p)) * omega_max / r0;
    a.max(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyThresholds {
    pub kappa_verytrivial: f64,
    pub kappa_trivial: Option<f64>,
}

/// Elementary sufficient couplings for death of the oscillators in `subset`.
pub fn toy_thresholds(spec: &InteractionSpec, config: &SystemConfig, subset: &[usize]) -> Result<ToyThresholds> {
    let wb = subset_omega_max(config, subset)?;
    let (smin, smax) = extrema(|t| spec.sensitivity(t));
    if !(smin < 0.0 && smax > 0.0) {
        return Err(Error::Inapplicable("S does not change sign".into()));
    }
    let (ismin, ismax) = extrema(|t| spec.influence(t) * spec.sensitivity(t));
    if !(ismin < 0.0 && ismax > 0.0) {
        return Err(Error::Inapplicable("I·S does not change sign".into()));
    }
    let kappa_verytrivial = config.n as f64 * wb / (-ismin).min(ismax);
    let (imin, _) = extrema(|t| spec.influence(t));
    let kappa_trivial = (imin > 0.0).then(|| wb / (imin * (-smin).min(smax)));
    Ok(ToyThresholds { kappa_verytrivial, kappa_trivial })
}

fn subset_omega_max(config: &SystemConfig, subset: &[usize]) -> Result<f64> {
    if let Some(&bad) = subset.iter().find(|&&i| i >= config.n) {
        return domain(format!("index {bad} out of range for N = {}", config.n));
    }
    Ok(subset.iter().fold(0.0, |a: f64, &i| a.max(config.omega[i].abs())))
}

/// Minimum and maximum over the circle: 4096-point scan, then golden-section refinement.
pub fn extrema(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let m = 4096;
    let h = 2.0 * PI / m as f64;
    let grid = |k: usize| -PI + h * k as f64;
    let (mut kmin, mut kmax) = (0, 0);
    let mut vals = Vec::with_capacity(m);
    for k in 0..m {
        let v = f(grid(k));
        vals.push(v);
        if v < vals[kmin] {
            kmin = k;
        }
        if v > vals[kmax] {
            kmax = k;
        }
    }
    let lo = golden(&f, grid(kmin) - h, grid(kmin) + h, false).min(vals[kmin]);
    let hi = golden(&f, grid(kmax) - h, grid(kmax) + h, true).max(vals[kmax]);
    (lo, hi)
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = |x: f64| if maximize { -f(x) } else { f(x) };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let v = g(0.5 * (a + b)).min(fc).min(fd);
    if maximize {
        -v
    } else {
        v
    }
}

/// Hypotheses of the partial-death criteria for the group `a ⊆ b`.
///
/// Sinusoidal specs use the sharp sinusoidal criterion, others the general one.
pub fn check_partial_death_criterion(
    config: &SystemConfig,
    spec: &InteractionSpec,
    initial: &[f64],
    a: &[usize],
    b: &[usize],
    rho: f64,
) -> Result<CriterionReport> {
    if let Some(i) = a.iter().find(|i| !b.contains(i)) {
        return domain(format!("index {i} is in A but not in B"));
    }
    let wb = subset_omega_max(config, b)?;
    if initial.len() != config.n {
        return Err(Error::Config("initial state length differs from N".into()));
    }
    if !(rho > 0.0 && rho <= spec.sup_i) {
        return domain(format!("rho = {rho} not in (0, sup I = {}]", spec.sup_i));
    }
    let n = config.n as f64;
    let kappa = config.kappa;
    let mean_a: f64 = a.iter().map(|&i| spec.influence(initial[i])).sum::<f64>() / n;
    let parts = if spec.is_sinusoidal() {
        let root = (1.0 - wb * wb / (kappa * kappa * rho * rho)).sqrt();
        let large = CriterionReport::greater(
            "partial_large_kappa",
            kappa,
            wb / rho,
            "kappa > |Omega_B|_inf / rho",
        );
        let big = CriterionReport::greater(
            "part_is_big",
            mean_a,
            2.0 * rho / (1.0 + root),
            "(1/N) sum_A (1 + cos theta_i) > 2 rho / (1 + sqrt(1 - |Omega_B|^2/(kappa rho)^2))",
        );
        let worst_cos = a.iter().map(|&i| initial[i].cos()).fold(f64::INFINITY, f64::min);
        let range = range_report(
            "part_is_in_range",
            worst_cos,
            -root,
            "min_A cos theta_i >= -sqrt(1 - |Omega_B|^2/(kappa rho)^2)",
            a.is_empty(),
        );
        vec![large, big, range]
    } else {
        let big = CriterionReport::greater(
            "pod_cond",
            mean_a,
            rho / spec.c3,
            "(1/N) sum_A I(theta_i) > rho / c3",
        );
        let large = CriterionReport::greater(
            "pod_kappa",
            kappa,
            wb / (rho * spec.c1 * (PI - spec.alpha0).powf(spec.p)),
            "kappa > |Omega_B|_inf / (rho c1 (pi - alpha0)^p)",
        );
        let gap = (wb / (kappa * rho * spec.c1)).powf(1.0 / spec.p);
        let worst = a.iter().map(|&i| PI - wrap_pi(initial[i]).abs()).fold(f64::INFINITY, f64::min);
        let range = range_report(
            "pod_cond_2",
            worst,
            gap,
            "min_A (pi - |theta_i|) >= (|Omega_B|_inf / (kappa rho c1))^(1/p)",
            a.is_empty(),
        );
        vec![big, large, range]
    };
    Ok(CriterionReport::all("partial_death", parts))
}

/// `lhs >= rhs` check; reported with a non-strict margin so equality passes.
fn range_report(name: &str, lhs: f64, rhs: f64, detail: &str, vacuous: bool) -> CriterionReport {
    if vacuous {
        return CriterionReport::greater(name, f64::INFINITY, rhs, format!("{detail} (empty set)"));
    }
    let mut r = CriterionReport::greater(name, lhs, rhs, detail);
    if r.margin.is_finite() {
        r.margin += GRID_ALLOWANCE;
        r.satisfied = r.margin > 0.0;
    }
    r
}

/// `√(½ + √(¼ - ‖Ω‖∞²/κ²))`, the guaranteed limit of R for κ > 2‖Ω‖∞.
pub fn limit_r_lower_bound(omega_max: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 2.0 * omega_max) {
        return domain(format!("kappa = {kappa} must exceed 2 |Omega|_inf = {}", 2.0 * omega_max));
    }
    let x = omega_max / kappa;
    Ok((0.5 + (0.25 - x * x).sqrt()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// `1 - exp(-ε²N/25)`.
    SincosMain,
    /// `1 - (√(πe/2) ‖Ω‖^{1/3} / κ^{1/3})^N`.
    SincosMainTail,
    /// Finite-time version with crossover time T₀.
    SincosTime,
    /// Finite-time version valid when κ > 8‖Ω‖∞.
    SincosTimeLarge,
    /// `P[R₀ ≤ t] ≤ min{exp(-(1-t)²N), (√(πet)/2)^N}`.
    OrderParamCdf,
    /// `1 - exp(-(R*)²N / (2 sup I²))`.
    GeneralMaincor,
    KappaLarge,
    QuantIs,
    /// Upper bound on the measure of data with R < 1-δ throughout [0, T].
    EscapeMeasure,
}

/// Inputs for the probability bounds. Only the fields a bound uses must be set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundParams {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub c_mu: Option<f64>,
    pub beta: Option<f64>,
    pub r_star: Option<f64>,
    pub i_star: Option<f64>,
    pub t_level: Option<f64>,
    pub kappa: Option<f64>,
    pub omega_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    /// The bound clamped to [0, 1].
    pub value: f64,
    /// `1 - value` evaluated without cancellation, for lower bounds of the form `1 - x`.
    pub complement: Option<f64>,
    /// Crossover time for the finite-time bounds.
    #[serde(rename = "T0", skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub vacuous: bool,
    pub note: String,
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.filter(|x| x.is_finite())
        .ok_or_else(|| Error::Domain(format!("parameter {name} is required")))
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        domain(msg.to_string())
    }
}

/// `1 - x` with clamping and the complement kept exactly.
fn lower(x: f64, note: &str) -> BoundValue {
    let vacuous = !(x < 1.0);
    BoundValue {
        value: if vacuous { 0.0 } else { 1.0 - x },
        complement: Some(x.min(1.0)),
        t0: None,
        vacuous,
        note: if vacuous { format!("{note}; vacuous") } else { note.into() },
    }
}

fn upper(x: f64, note: &str) -> BoundValue {
    let vacuous = !(x < 1.0);
    BoundValue {
        value: x.clamp(0.0, 1.0),
        complement: None,
        t0: None,
        vacuous,
        note: if vacuous { format!("{note}; vacuous") } else { note.into() },
    }
}

/// `ln(a·X^N - b)` for `ln_x = ln X`, without forming `X^N`.
fn log_scaled_power_minus(a: f64, ln_x: f64, n: f64, b: f64) -> f64 {
    let ln_first = a.ln() + n * ln_x;
    ln_first + (-(b * (-ln_first).exp())).ln_1p()
}

/// Crossover time for the escape-measure bound when δ < ½.
pub fn escape_t0(n: usize, kappa: f64, delta: f64) -> Result<f64> {
    let nf = n as f64;
    check(n >= 2, "N >= 2 required")?;
    check(delta > 0.0 && delta < 0.5, "delta in (0, 1/2) required for T0")?;
    check(kappa > 0.0, "kappa > 0 required")?;
    let a = 1.0 + 2.0 / nf;
    let b = 2.0 / nf;
    let t0 = if delta < 0.25 {
        let ln_x = (2.0 / (PI * delta).sqrt()).ln() - 0.5 - delta * delta;
        log_scaled_power_minus(a, ln_x, nf, b) / (kappa * nf * delta * (1.0 - delta))
    } else {
        let ln_x = (4.0 / PI.sqrt()).ln() - 0.5 - delta * delta;
        16.0 / (3.0 * kappa * nf) * log_scaled_power_minus(a, ln_x, nf, b)
    };
    if t0.is_nan() {
        return Err(Error::Numeric("crossover time undefined".into()));
    }
    Ok(t0)
}

/// Upper bound on `m(U_{1-δ}^T)`, the measure of initial data with `R < 1-δ` on `[0, T]`.
pub fn escape_measure_bound(n: usize, kappa: f64, delta: f64, t: f64) -> Result<BoundValue> {
    check(n >= 2, "N >= 2 required")?;
    check(delta > 0.0 && delta < 1.0, "delta in (0, 1) required")?;
    check(kappa > 0.0, "kappa > 0 required")?;
    check(t >= 0.0, "T >= 0 required")?;
    let nf = n as f64;
    let pe = PI * E;
    let half = -nf / 2.0;
    if delta < 0.5 {
        let t0 = escape_t0(n, kappa, delta)?;
        let v = if delta < 0.25 {
            let rate = kappa * nf * delta * (1.0 - delta);
            if t <= t0 {
                let ln_head = nf * ((pe * delta).sqrt() / 2.0).ln() - (nf / 2.0 + 1.0).ln();
                ln_head.exp() * (-(-rate * t).exp_m1()) + (-nf * delta * delta - rate * t).exp()
            } else {
                (4.0 / (pe * delta) + 4.0 * kappa * (1.0 - delta) / pe * (t - t0)).powf(half)
            }
        } else {
            let rate = 3.0 * kappa * nf / 16.0;
            if t <= t0 {
                let ln_head = nf * (pe.sqrt() / 4.0).ln() - (nf / 2.0 + 1.0).ln();
                ln_head.exp() * (-(-rate * t).exp_m1()) + (-nf * delta * delta - rate * t).exp()
            } else {
                (16.0 / pe + 3.0 * kappa / pe * (t - t0)).powf(half)
            }
        };
        let mut b = upper(v, "escape measure");
        b.t0 = Some(t0);
        return Ok(b);
    }
    let v = if delta < 0.75 {
        ((2.0 * delta * delta).exp() + 4.0 * kappa * delta * t / pe).powf(half)
    } else {
        (4.0 / (pe * (1.0 - delta)) + 4.0 * kappa * delta * t / pe).powf(half)
    };
    Ok(upper(v, "escape measure"))
}

/// Evaluate one of the closed-form probability bounds.
pub fn probability_bound(
    kind: BoundKind,
    n: usize,
    params: &BoundParams,
    spec: &InteractionSpec,
) -> Result<BoundValue> {
    check(n >= 1, "N >= 1 required")?;
    let nf = n as f64;
    let pe = PI * E;
    match kind {
        BoundKind::SincosMain => {
            let eps = need(params.epsilon, "epsilon")?;
            check(eps > 0.0 && eps <= 1.0, "epsilon in (0, 1] required")?;
            if let (Some(k), Some(w)) = (params.kappa, params.omega_max) {
                check(k > (2.0 + eps) * w, "kappa > (2 + epsilon) |Omega|_inf required")?;
            }
            Ok(lower((-eps * eps * nf / 25.0).exp(), "death with R floor 1/sqrt(2) - 3 epsilon/20"))
        }
        BoundKind::SincosMainTail => {
            let k = need(params.kappa, "kappa")?;
            let w = need(params.omega_max, "omega_max")?;
            check(
                k > (pe / 2.0).powf(1.5) * w,
                "kappa > (pi e / 2)^(3/2) |Omega|_inf required",
            )?;
            let ln_x = 0.5 * (pe / 2.0).ln() + (w.ln() - k.ln()) / 3.0;
            Ok(lower((nf * ln_x).exp(), "death"))
        }
        BoundKind::SincosTime => {
            check(n >= 2, "N >= 2 required")?;
            let eps = need(params.epsilon, "epsilon")?;
            let k = need(params.kappa, "kappa")?;
            let t = need(params.t, "T")?;
            check(eps > 0.0 && eps <= 1.0, "epsilon in (0, 1] required")?;
            check(k > 0.0, "kappa > 0 required")?;
            check(t >= 0.0, "T >= 0 required")?;
            if let Some(w) = params.omega_max {
                check(k > (2.0 + eps) * w, "kappa > (2 + epsilon) |Omega|_inf required")?;
            }
            // Same as the escape measure with δ = ε/5, which keeps δ < ¼.
            let mut b = escape_measure_bound(n, k, eps / 5.0, t)?;
            let x = b.value;
            let t0 = b.t0;
            b = lower(x, "finite-time death");
            b.t0 = t0;
            Ok(b)
        }
        BoundKind::SincosTimeLarge => {
            let k = need(params.kappa, "kappa")?;
            let w = need(params.omega_max, "omega_max")?;
            let t = need(params.t, "T")?;
            check(k > 8.0 * w, "kappa > 8 |Omega|_inf required")?;
            check(t >= 0.0, "T >= 0 required")?;
            let base = if k <= 16.0 * 2f64.sqrt() * w {
                0.5f64.exp() + 3.0 * k * t / pe
            } else {
                4.0 / pe * (k / (2.0 * 2f64.sqrt() * w)).powf(2.0 / 3.0) + 3.0 * k * t / pe
            };
            Ok(lower(base.powf(-nf / 2.0), "finite-time death"))
        }
        BoundKind::OrderParamCdf => {
            let tl = need(params.t_level, "t_level")?;
            check(tl > 0.0 && tl < 1.0, "t_level in (0, 1) required")?;
            let a = (-(1.0 - tl).powi(2) * nf).exp();
            let b = ((pe * tl).sqrt() / 2.0).powf(nf);
            Ok(upper(a.min(b), "P[R0 <= t]"))
        }
        BoundKind::GeneralMaincor => {
            let rs = need(params.r_star, "R_star")?;
            check(rs > 0.0, "R_star > 0 required")?;
            let s = spec.sup_i;
            Ok(lower((-rs * rs * nf / (2.0 * s * s)).exp(), "death"))
        }
        BoundKind::KappaLarge => {
            let c_mu = need(params.c_mu, "C_mu")?;
            let beta = need(params.beta, "beta")?;
            let k = need(params.kappa, "kappa")?;
            let w = need(params.omega_max, "omega_max")?;
            check(c_mu > 0.0, "C_mu > 0 required")?;
            check(beta > 0.0, "beta > 0 required")?;
            check(k > 0.0, "kappa > 0 required")?;
            let pq = spec.p / spec.q;
            let cc = spec.c1 * spec.c3;
            let first = (2.0 / cc * w / k).powf(1.0 / (1.0 + pq)) * (2.0 * spec.c2).powf(pq / (1.0 + pq));
            let second = 2.0 / (cc * (PI - spec.alpha0).powf(spec.p)) * w / k;
            let m = first.max(second);
            let ln_x = nf * c_mu.ln() + beta * nf * (1.0 - beta.ln()) + beta * nf * m.ln();
            Ok(lower(ln_x.exp(), "death"))
        }
        BoundKind::QuantIs => {
            let k = need(params.kappa, "kappa")?;
            let t = need(params.t, "T")?;
            let delta = need(params.delta, "delta")?;
            let i_star = params.i_star.unwrap_or(spec.i_star);
            check(k > 0.0, "kappa > 0 required")?;
            check(t >= 0.0, "T >= 0 required")?;
            check(i_star > 0.0, "I_star > 0 required")?;
            check(delta > 0.0 && delta < i_star, "delta in (0, I_star) required")?;
            let r = spec.r_exp;
            let s = spec.sup_i;
            let gamma = statrs::function::gamma::gamma(1.0 / r);
            let coef = spec.c4 * spec.c5 * PI.powf(r) * r.powf(r - 1.0) / (gamma.powf(r) * (1.0 + r / nf));
            let base = (r * i_star * i_star / (2.0 * s * s)).exp() + coef * k * nf * (i_star - delta) * t;
            Ok(lower(base.powf(-nf / r), "R stays above the threshold by time T"))
        }
        BoundKind::EscapeMeasure => {
            let k = need(params.kappa, "kappa")?;
            let delta = need(params.delta, "delta")?;
            let t = need(params.t, "T")?;
            escape_measure_bound(n, k, delta, t)
        }
    }
}

/// Grid check of the structural conditions, one report per condition.
pub fn verify_interaction_conditions(spec: &InteractionSpec, grid_size: usize) -> Result<Vec<CriterionReport>> {
    if grid_size < 64 {
        return domain("grid_size >= 64 required");
    }
    let m = grid_size;
    let grid: Vec<f64> = (0..m).map(|k| -PI + 2.0 * PI * k as f64 / (m - 1) as f64).collect();
    let i_vals: Vec<f64> = grid.iter().map(|&t| spec.influence(t)).collect();
    let mut out = Vec::new();

    let worst = |name: &str, detail: &str, it: &mut dyn Iterator<Item = (f64, f64)>| {
        // Each item is (lhs, rhs) for `lhs >= rhs`.
        let mut w = (f64::INFINITY, 0.0, 0.0);
        for (l, r) in it {
            let g = l - r;
            if g < w.0 || g.is_nan() {
                w = (g, l, r);
            }
        }
        let margin = w.0 + GRID_ALLOWANCE;
        CriterionReport {
            name: name.into(),
            satisfied: margin > 0.0,
            lhs: w.1,
            rhs: w.2,
            margin,
            detail: detail.into(),
            parts: Vec::new(),
        }
    };

    let c1 = |x: f64| spec.c1 * x.max(0.0).powf(spec.p);
    out.push(worst(
        "c1",
        "S(theta) <= -c1 (pi - theta)^p on [alpha0, pi] and S(theta) >= c1 (theta + pi)^p on [-pi, -alpha0]",
        &mut grid.iter().filter_map(|&t| {
            if t >= spec.alpha0 {
                Some((-c1(PI - t), spec.sensitivity(t)))
            } else if t <= -spec.alpha0 {
                Some((spec.sensitivity(t), c1(t + PI)))
            } else {
                None
            }
        }),
    ));

    let lower_i = i_vals.iter().map(|&v| (v, 0.0));
    let upper_i = grid
        .iter()
        .zip(&i_vals)
        .map(|(&t, &v)| (spec.c2 * (PI - t.abs()).powf(spec.q), v));
    out.push(worst(
        "c2",
        "0 <= I(theta) <= c2 (pi - |theta|)^q",
        &mut lower_i.chain(upper_i),
    ));

    // Nested minimum: min over |φ| ≤ max(|θ|, α₀) of I(φ), grid points only.
    let c3 = {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()));
        let mut running = Vec::with_capacity(m);
        let mut cur = f64::INFINITY;
        for &k in &order {
            cur = cur.min(i_vals[k]);
            running.push((grid[k].abs(), cur));
        }
        let min_within = |radius: f64| {
            let idx = running.partition_point(|&(a, _)| a <= radius + 1e-15);
            running[idx.max(1) - 1].1
        };
        worst(
            "c3",
            "min_{|phi| <= max(|theta|, alpha0)} I(phi) >= c3 I(theta)",
            &mut grid
                .iter()
                .zip(&i_vals)
                .map(|(&t, &v)| (min_within(t.abs().max(spec.alpha0)), spec.c3 * v)),
        )
    };
    out.push(c3);

    out.push(worst(
        "c4",
        "S'(theta) >= c4 (I_star - I(theta))",
        &mut grid
            .iter()
            .zip(&i_vals)
            .map(|(&t, &v)| (spec.sensitivity_deriv(t), spec.c4 * (spec.i_star - v))),
    ));

    out.push(worst(
        "c5",
        "I'(theta) S(theta) >= 0",
        &mut grid
            .iter()
            .map(|&t| (spec.influence_deriv(t) * spec.sensitivity(t), 0.0)),
    ));

    out.push(worst(
        "c7",
        "I(theta) >= c5 (pi - |theta|)^r",
        &mut grid
            .iter()
            .zip(&i_vals)
            .map(|(&t, &v)| (v, spec.c5 * (PI - t.abs()).powf(spec.r_exp))),
    ));

    let defect = spec.periodicity_defect();
    out.push(CriterionReport {
        name: "periodic".into(),
        satisfied: defect < 1e-12,
        lhs: 1e-12,
        rhs: defect,
        margin: 1e-12 - defect,
        detail: "|f(-pi) - f(pi)| < 1e-12 for I and S".into(),
        parts: Vec::new(),
    });
    Ok(out)
}

/// Minimum over `grid` of `K_c(R0)² ρ² μ(2-μ) - 1` and where it occurs.
pub fn appendix_inequality_check(grid: &[f64]) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, f64::NAN);
    for &r0 in grid {
        let m = appendix_margin(r0)?;
        if m < best.0 {
            best = (m, r0);
        }
    }
    if best.1.is_nan() {
        return domain("empty grid");
    }
    Ok(best)
}

pub fn appendix_margin(r0: f64) -> Result<f64> {
    let kc = kc_coefficient(r0)?;
    let mu = corollary_mu(r0);
    let rho = r0 - mu;
    Ok(kc * kc * rho * rho * mu * (2.0 - mu) - 1.0)
}

/// `max |ω_i|` over an index set, exposed for callers assembling criteria.
pub fn omega_max_over(config: &SystemConfig, subset: Option<&[usize]>) -> Result<f64> {
    match subset {
        Some(s) => subset_omega_max(config, s),
        None => Ok(max_abs(&config.omega)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kc_examples() {
        assert_abs_diff_eq!(kc_coefficient(1.0).unwrap(), 2.0);
        assert_abs_diff_eq!(kc_coefficient(2.0).unwrap(), 4.0 / (3.0 * 3f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(kc_coefficient(0.25).unwrap(), 16.0);
        assert!(kc_coefficient(0.0).is_err());
        assert!(kc_coefficient(2.1).is_err());
    }

    #[test]
    fn limit_r_examples() {
        assert_eq!(limit_r_lower_bound(0.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(limit_r_lower_bound(0.4999, 1.0).unwrap(), 0.71414, epsilon = 1e-5);
        assert!(limit_r_lower_bound(0.5, 1.0).is_err());
    }

    #[test]
    fn escape_cases_are_continuous_at_t0() {
        for &delta in &[0.1, 0.3] {
            let t0 = escape_t0(10, 2.0, delta).unwrap();
            let a = escape_measure_bound(10, 2.0, delta, t0).unwrap().value;
            let b = escape_measure_bound(10, 2.0, delta, t0 * (1.0 + 1e-9) + 1e-12).unwrap().value;
            assert!((a - b).abs() < 1e-6 * a.max(1e-300), "delta {delta}: {a} vs {b}");
        }
    }
}
