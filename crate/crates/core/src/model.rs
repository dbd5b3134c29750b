//! Interaction functions, the mean-field vector field and its derived quantities.
//!
//! The system is `θ̇_i = ω_i + κ R S(θ_i)` with `R = (1/N) Σ_j I(θ_j)`.

use std::f64::consts::PI;
use std::ops::Deref;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of points in a tabulated interaction function.
pub const CUSTOM_TABLE_POINTS: usize = 4096;

/// Step used for every centered difference in the crate.
pub const FD_STEP: f64 = 1e-6;

/// Reduce an angle to `[-π, π)`.
pub fn wrap_pi(theta: f64) -> f64 {
    let x = theta - 2.0 * PI * ((theta + PI) / (2.0 * PI)).floor();
    if x >= PI {
        x - 2.0 * PI
    } else {
        x
    }
}

/// Reduce an angle to `(-π, π]`, the canonical range for equilibria.
pub fn wrap_canonical(theta: f64) -> f64 {
    let x = wrap_pi(theta);
    if x <= -PI {
        x + 2.0 * PI
    } else {
        x
    }
}

/// Tabulated influence and sensitivity on a uniform grid over `[-π, π]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct CustomTable {
    influence: Vec<f64>,
    sensitivity: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTable {
    influence: Vec<f64>,
    sensitivity: Vec<f64>,
}

impl TryFrom<RawTable> for CustomTable {
    type Error = Error;
    fn try_from(raw: RawTable) -> Result<Self> {
        CustomTable::new(raw.influence, raw.sensitivity)
    }
}

impl CustomTable {
    /// Both tables hold values at `θ_k = -π + 2πk/(M-1)`, `k = 0..M`.
    pub fn new(influence: Vec<f64>, sensitivity: Vec<f64>) -> Result<Self> {
        if influence.len() < 2 || sensitivity.len() < 2 {
            return Err(Error::Config("custom interaction table is empty".into()));
        }
        if influence.len() != sensitivity.len() {
            return Err(Error::Config(format!(
                "influence table has {} points but sensitivity table has {}",
                influence.len(),
                sensitivity.len()
            )));
        }
        if influence.iter().chain(&sensitivity).any(|v| !v.is_finite()) {
            return Err(Error::Config("custom interaction table has non-finite values".into()));
        }
        Ok(CustomTable { influence, sensitivity })
    }

    /// Tabulate closures on the standard 4096-point grid.
    pub fn from_fns(i: impl Fn(f64) -> f64, s: impl Fn(f64) -> f64) -> Result<Self> {
        let m = CUSTOM_TABLE_POINTS;
        let grid: Vec<f64> = (0..m).map(|k| -PI + 2.0 * PI * k as f64 / (m - 1) as f64).collect();
        Self::new(grid.iter().map(|&t| i(t)).collect(), grid.iter().map(|&t| s(t)).collect())
    }

    /// Load from two CSV files of `(theta, value)` rows with a header line.
    pub fn from_csv(influence: &Path, sensitivity: &Path) -> Result<Self> {
        Self::new(read_table_csv(influence)?, read_table_csv(sensitivity)?)
    }

    pub fn len(&self) -> usize {
        self.influence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.influence.is_empty()
    }

    pub fn influence_values(&self) -> &[f64] {
        &self.influence
    }

    pub fn sensitivity_values(&self) -> &[f64] {
        &self.sensitivity
    }

    fn interp(values: &[f64], theta: f64) -> f64 {
        let m = values.len();
        let h = 2.0 * PI / (m - 1) as f64;
        let u = (wrap_pi(theta) + PI) / h;
        let k = (u.floor() as usize).min(m - 2);
        let frac = u - k as f64;
        values[k] + frac * (values[k + 1] - values[k])
    }
}

fn read_table_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut thetas = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Config(format!(
                "{}: expected two columns (theta, value)",
                path.display()
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{}: bad number {s:?}: {e}", path.display())))
        };
        thetas.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
    }
    if thetas.len() < 2 {
        return Err(Error::Config(format!("{}: table is empty", path.display())));
    }
    let m = thetas.len();
    let h = 2.0 * PI / (m - 1) as f64;
    for (k, &t) in thetas.iter().enumerate() {
        let expect = -PI + h * k as f64;
        if (t - expect).abs() > 1e-6 * h.max(1.0) {
            return Err(Error::Config(format!(
                "{}: row {k} has theta {t}, expected uniform grid value {expect}",
                path.display()
            )));
        }
    }
    Ok(values)
}

/// The shape of `I` and `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `I = 1 + cos θ`, `S = -sin θ`.
    Sinusoidal,
    /// `I = (1 + cos θ)^n`, `S = -sin θ`.
    PowerCosine { n: u32 },
    /// `I = (1-r)(1+cos θ)/(1 - 2r cos θ + r²)`, `S = -sin θ`.
    RectifiedPoisson { r: f64 },
    Custom(CustomTable),
}

/// Interaction functions plus the structural constants used by the general thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub family: Family,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub p: f64,
    pub q: f64,
    pub r_exp: f64,
    pub alpha0: f64,
    pub i_star: f64,
    pub sup_i: f64,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        Self::sinusoidal()
    }
}

impl InteractionSpec {
    pub fn sinusoidal() -> Self {
        InteractionSpec {
            family: Family::Sinusoidal,
            c1: 2.0 / PI,
            c2: 0.5,
            c3: 0.5,
            c4: 1.0,
            c5: 1.0 / (PI * PI),
            p: 1.0,
            q: 2.0,
            r_exp: 2.0,
            alpha0: PI / 2.0,
            i_star: 1.0,
            sup_i: 2.0,
        }
    }

    /// `(1+cos θ)^n` with constants from `1 + cos θ = 2 sin²((π-|θ|)/2)`.
    pub fn power_cosine(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("power-cosine exponent must be >= 1".into()));
        }
        let nf = n as f64;
        let two_n = 2f64.powi(n as i32);
        Ok(InteractionSpec {
            family: Family::PowerCosine { n },
            c1: 2.0 / PI,
            c2: 1.0 / two_n,
            c3: 1.0 / two_n,
            c4: 1.0 / nf,
            c5: two_n / PI.powf(2.0 * nf),
            p: 1.0,
            q: 2.0 * nf,
            r_exp: 2.0 * nf,
            alpha0: PI / 2.0,
            i_star: 1.0,
            sup_i: two_n,
        })
    }

    /// Rectified Poisson kernel with peak parameter `r ∈ (-1, 1)`.
    pub fn rectified_poisson(r: f64) -> Result<Self> {
        if !(r > -1.0 && r < 1.0) {
            return Err(Error::Config(format!("rectified Poisson parameter {r} not in (-1,1)")));
        }
        // As a function of x = cos θ the kernel is g(x) = (1-r)(1+x)/(1+r²-2rx):
        // convex for r ≥ 0 (use the tangent at x=0), concave for r < 0 (use the chord).
        let g0 = (1.0 - r) / (1.0 + r * r);
        let (i_star, c4) = if r >= 0.0 {
            let slope = (1.0 - r) * (1.0 + r).powi(2) / (1.0 + r * r).powi(2);
            (g0, 1.0 / slope)
        } else {
            (1.0 / (1.0 - r), 1.0 - r)
        };
        Ok(InteractionSpec {
            family: Family::RectifiedPoisson { r },
            c1: 2.0 / PI,
            c2: (1.0 - r) / (2.0 * (1.0 - r.abs()).powi(2)),
            c3: (1.0 - r).powi(2) / (2.0 * (1.0 + r * r)),
            c4,
            c5: 2.0 * (1.0 - r) / (PI * PI * (1.0 + r.abs()).powi(2)),
            p: 1.0,
            q: 2.0,
            r_exp: 2.0,
            alpha0: PI / 2.0,
            i_star,
            sup_i: 2.0 / (1.0 - r),
        })
    }

    /// Tabulated functions. Structural constants default to placeholders and
    /// should be set by the caller before using the general thresholds.
    pub fn custom(table: CustomTable) -> Self {
        let sup_i = table.influence.iter().fold(f64::MIN, |a, &b| a.max(b)).max(f64::MIN_POSITIVE);
        InteractionSpec {
            family: Family::Custom(table),
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 0.0,
            c5: 0.0,
            p: 1.0,
            q: 1.0,
            r_exp: 1.0,
            alpha0: PI / 2.0,
            i_star: 0.0,
            sup_i,
        }
    }

    pub fn is_sinusoidal(&self) -> bool {
        matches!(self.family, Family::Sinusoidal)
    }

    pub fn influence(&self, theta: f64) -> f64 {
        match &self.family {
            Family::Sinusoidal => 1.0 + theta.cos(),
            Family::PowerCosine { n } => (1.0 + theta.cos()).powi(*n as i32),
            Family::RectifiedPoisson { r } => {
                let c = theta.cos();
                (1.0 - r) * (1.0 + c) / (1.0 - 2.0 * r * c + r * r)
            }
            Family::Custom(t) => CustomTable::interp(&t.influence, theta),
        }
    }

    pub fn sensitivity(&self, theta: f64) -> f64 {
        match &self.family {
            Family::Custom(t) => CustomTable::interp(&t.sensitivity, theta),
            _ => -theta.sin(),
        }
    }

    /// `I′(θ)`.
    pub fn influence_deriv(&self, theta: f64) -> f64 {
        match &self.family {
            Family::Sinusoidal => -theta.sin(),
            Family::PowerCosine { n } => {
                let n = *n as i32;
                -(n as f64) * (1.0 + theta.cos()).powi(n - 1) * theta.sin()
            }
            Family::RectifiedPoisson { r } => {
                let d = 1.0 - 2.0 * r * theta.cos() + r * r;
                -(1.0 - r) * (1.0 + r).powi(2) * theta.sin() / (d * d)
            }
            Family::Custom(_) => centered(|t| self.influence(t), theta),
        }
    }

    /// `S′(θ)`.
    pub fn sensitivity_deriv(&self, theta: f64) -> f64 {
        match &self.family {
            Family::Custom(_) => centered(|t| self.sensitivity(t), theta),
            _ => -theta.cos(),
        }
    }

    /// `sup I` over the circle.
    pub fn sup_influence(&self) -> f64 {
        self.sup_i
    }

    /// Largest of `|I(-π) - I(π)|` and `|S(-π) - S(π)|`.
    pub fn periodicity_defect(&self) -> f64 {
        match &self.family {
            Family::Custom(t) => {
                let m = t.len() - 1;
                (t.influence[0] - t.influence[m])
                    .abs()
                    .max((t.sensitivity[0] - t.sensitivity[m]).abs())
            }
            _ => (self.influence(-PI) - self.influence(PI))
                .abs()
                .max((self.sensitivity(-PI) - self.sensitivity(PI)).abs()),
        }
    }

    /// Whether `S = I′` holds to 1e-8 on a 4096-point grid, the condition for
    /// the vector field to be a gradient.
    pub fn is_gradient_pair(&self) -> bool {
        let m = CUSTOM_TABLE_POINTS;
        (0..m).all(|k| {
            let t = -PI + 2.0 * PI * (k as f64 + 0.5) / m as f64;
            (self.sensitivity(t) - self.influence_deriv(t)).abs() < 1e-8
        })
    }
}

fn centered(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

/// Oscillator count, intrinsic frequencies and coupling strength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    pub omega: Vec<f64>,
    pub kappa: f64,
}

impl SystemConfig {
    pub fn new(omega: Vec<f64>, kappa: f64) -> Result<Self> {
        let cfg = SystemConfig { n: omega.len(), omega, kappa };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("need at least one oscillator".into()));
        }
        if self.omega.len() != self.n {
            return Err(Error::Config(format!(
                "n = {} but omega has {} entries",
                self.n,
                self.omega.len()
            )));
        }
        if !self.kappa.is_finite() || self.omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("frequencies and coupling must be finite".into()));
        }
        Ok(())
    }

    /// `‖Ω‖∞`.
    pub fn omega_max(&self) -> f64 {
        max_abs(&self.omega)
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        SystemConfig { kappa, ..self.clone() }
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, &b| a.max(b.abs()))
}

/// Unwrapped phases. Never reduced mod 2π so winding stays visible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseState {
    pub theta: Vec<f64>,
}

impl PhaseState {
    pub fn new(theta: Vec<f64>) -> Self {
        PhaseState { theta }
    }

    pub fn zeros(n: usize) -> Self {
        PhaseState { theta: vec![0.0; n] }
    }
}

impl Deref for PhaseState {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.theta
    }
}

impl From<Vec<f64>> for PhaseState {
    fn from(theta: Vec<f64>) -> Self {
        PhaseState { theta }
    }
}

pub fn influence(spec: &InteractionSpec, theta: f64) -> f64 {
    spec.influence(theta)
}

pub fn sensitivity(spec: &InteractionSpec, theta: f64) -> f64 {
    spec.sensitivity(theta)
}

/// `R = (1/N) Σ I(θ_j)`.
pub fn order_parameter(spec: &InteractionSpec, theta: &[f64]) -> f64 {
    theta.iter().map(|&t| spec.influence(t)).sum::<f64>() / theta.len() as f64
}

/// Writes `ω_i + κ R S(θ_i)` into `out`.
pub fn vector_field_into(
    config: &SystemConfig,
    spec: &InteractionSpec,
    theta: &[f64],
    out: &mut [f64],
) {
    let kr = config.kappa * order_parameter(spec, theta);
    for ((o, &w), &t) in out.iter_mut().zip(&config.omega).zip(theta) {
        *o = w + kr * spec.sensitivity(t);
    }
}

pub fn vector_field(config: &SystemConfig, spec: &InteractionSpec, theta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    vector_field_into(config, spec, theta, &mut out);
    out
}

/// Exact divergence `Σ ∂F_i/∂θ_i`.
pub fn divergence(config: &SystemConfig, spec: &InteractionSpec, theta: &[f64]) -> f64 {
    let n = theta.len() as f64;
    let k = config.kappa;
    if spec.is_sinusoidal() {
        let r = order_parameter(spec, theta);
        let s2: f64 = theta.iter().map(|t| t.sin().powi(2)).sum();
        return k * (n * r * (1.0 - r) + s2 / n);
    }
    let sum_i: f64 = theta.iter().map(|&t| spec.influence(t)).sum();
    let sum_ds: f64 = theta.iter().map(|&t| spec.sensitivity_deriv(t)).sum();
    let sum_dis: f64 = theta
        .iter()
        .map(|&t| spec.influence_deriv(t) * spec.sensitivity(t))
        .sum();
    k / n * (sum_i * sum_ds + sum_dis)
}

/// The lower bound `c₄ κ N R (I_* - R)` on the divergence.
pub fn divergence_lower_bound(config: &SystemConfig, spec: &InteractionSpec, theta: &[f64]) -> f64 {
    let r = order_parameter(spec, theta);
    spec.c4 * config.kappa * theta.len() as f64 * r * (spec.i_star - r)
}

/// Jacobian of the sinusoidal vector field. It is symmetric.
pub fn jacobian(config: &SystemConfig, spec: &InteractionSpec, theta: &[f64]) -> Result<DMatrix<f64>> {
    if !spec.is_sinusoidal() {
        return Err(Error::Unsupported("jacobian is only available for the sinusoidal family".into()));
    }
    Ok(sinusoidal_jacobian(config.kappa, theta))
}

pub(crate) fn sinusoidal_jacobian(kappa: f64, theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    let nf = n as f64;
    let r = theta.iter().map(|t| 1.0 + t.cos()).sum::<f64>() / nf;
    let s: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    DMatrix::from_fn(n, n, |i, k| {
        let off = kappa / nf * s[i] * s[k];
        if i == k {
            -kappa * r * theta[i].cos() + off
        } else {
            off
        }
    })
}

/// `V(Θ) = -Σ ω_i θ_i - (κ/2N)(Σ I(θ_i))²`, defined when `S = I′`.
pub fn potential(config: &SystemConfig, spec: &InteractionSpec, theta: &[f64]) -> Result<f64> {
    if !spec.is_sinusoidal() && !spec.is_gradient_pair() {
        return Err(Error::Unsupported("potential requires S = I′".into()));
    }
    Ok(potential_unchecked(config, spec, theta))
}

pub(crate) fn potential_unchecked(config: &SystemConfig, spec: &InteractionSpec, theta: &[f64]) -> f64 {
    let n = theta.len() as f64;
    let lin: f64 = config.omega.iter().zip(theta).map(|(w, t)| w * t).sum();
    let sum_i: f64 = theta.iter().map(|&t| spec.influence(t)).sum();
    -lin - config.kappa / (2.0 * n) * sum_i * sum_i
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wrap_ranges() {
        assert_abs_diff_eq!(wrap_pi(PI), -PI);
        assert_abs_diff_eq!(wrap_canonical(-PI), PI);
        assert_abs_diff_eq!(wrap_canonical(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_pi(0.3 - 4.0 * PI), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn custom_interp_reproduces_grid_values() {
        let t = CustomTable::from_fns(|x| 2.0 + x.cos(), |x| -x.sin()).unwrap();
        let spec = InteractionSpec::custom(t);
        assert_abs_diff_eq!(spec.influence(0.0), 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(spec.influence(PI), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.sensitivity(PI / 2.0), -1.0, epsilon = 1e-6);
        assert!(spec.periodicity_defect() < 1e-12);
    }

    #[test]
    fn empty_table_rejected() {
        assert!(CustomTable::new(vec![], vec![]).is_err());
        let e = serde_json::from_str::<CustomTable>(r#"{"influence":[],"sensitivity":[]}"#);
        assert!(e.is_err());
    }

    #[test]
    fn rectified_poisson_zero_is_sinusoidal() {
        let a = InteractionSpec::rectified_poisson(0.0).unwrap();
        let b = InteractionSpec::sinusoidal();
        for k in 0..50 {
            let t = -PI + 0.13 * k as f64;
            assert_abs_diff_eq!(a.influence(t), b.influence(t), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(a.c4, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.i_star, 1.0, epsilon = 1e-15);
    }
}
