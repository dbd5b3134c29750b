//! Equilibria of the sinusoidal model.
//!
//! At an equilibrium `sin θ_i = ω_i/(κR)`, so every phase sits on one of two
//! arcsine branches chosen by a signature σ, and R solves the scalar equation
//! `R = 1 + (1/N) Σ σ_j √(1 - ω_j²/(κR)²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{max_abs, sinusoidal_jacobian, wrap_canonical, SystemConfig};

pub const SCAN_INTERVALS: usize = 4096;
pub const MAX_ENUMERATION_N: usize = 20;
pub const MAX_W_N: usize = 8;
/// Up to this N the W expansion is exact and real roots are isolated exactly.
pub const EXACT_W_N: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature {
    pub sigma: Vec<i8>,
}

impl Signature {
    pub fn new(sigma: Vec<i8>) -> Result<Self> {
        if sigma.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Config("signature entries must be +1 or -1".into()));
        }
        Ok(Signature { sigma })
    }

    /// Bit `i` of `mask` set means `σ_i = -1`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Signature { sigma: (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect() }
    }

    pub fn all_plus(n: usize) -> Self {
        Self::from_mask(n, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    #[serde(rename = "R")]
    pub r: f64,
    pub theta: Vec<f64>,
    pub signature: Signature,
    pub divergence: f64,
    pub stability: Stability,
    pub max_eig_real: f64,
    /// R sits at `max|ω|/|κ|`, where two arcsine branches merge.
    pub boundary: bool,
}

fn r_residual(omega: &[f64], kappa: f64, sigma: &[i8], r: f64) -> f64 {
    let n = omega.len() as f64;
    let s: f64 = omega
        .iter()
        .zip(sigma)
        .map(|(&w, &s)| {
            let x = w / (kappa * r);
            s as f64 * (1.0 - x * x).max(0.0).sqrt()
        })
        .sum();
    1.0 + s / n - r
}

/// All roots of the R-equation for one signature on `[max|ω|/|κ|, 2]`.
pub fn solve_r_equation(config: &SystemConfig, signature: &Signature) -> Result<Vec<f64>> {
    if config.kappa == 0.0 {
        return domain("kappa must be nonzero");
    }
    if signature.sigma.len() != config.n {
        return Err(Error::Config("signature length differs from N".into()));
    }
    let wmax = config.omega_max();
    if wmax == 0.0 {
        return Err(Error::Degenerate("all frequencies vanish; use the bipolar states".into()));
    }
    let lo = wmax / config.kappa.abs();
    let hi = 2.0 + 1e-9;
    if lo > hi {
        return Ok(Vec::new());
    }
    let f = |r: f64| r_residual(&config.omega, config.kappa, &signature.sigma, r);
    Ok(scan_roots(&f, lo, hi))
}

fn scan_roots(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let m = SCAN_INTERVALS;
    let xs: Vec<f64> = (0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    if fs[0].abs() <= 1e-12 {
        roots.push(lo);
    }
    for k in 0..m {
        let (a, b) = (xs[k], xs[k + 1]);
        let (fa, fb) = (fs[k], fs[k + 1]);
        if fb == 0.0 {
            roots.push(b);
        } else if fa != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(f, a, b, fa));
        }
    }
    // Tangential roots: |f| has an interior local minimum without a sign change.
    for k in 1..m {
        let (fl, fc, fr) = (fs[k - 1], fs[k], fs[k + 1]);
        if fl.signum() == fc.signum()
            && fc.signum() == fr.signum()
            && fc.abs() <= fl.abs()
            && fc.abs() <= fr.abs()
        {
            let x = golden_min_abs(f, xs[k - 1], xs[k + 1]);
            if f(x).abs() < 1e-10 {
                roots.push(x);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

fn golden_min_abs(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = |x: f64| f(x).abs();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..100 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Phases of the equilibrium on the branches `σ` with order parameter `r`.
pub fn equilibrium_phases(config: &SystemConfig, sigma: &[i8], r: f64) -> Vec<f64> {
    config
        .omega
        .iter()
        .zip(sigma)
        .map(|(&w, &s)| {
            let a = (w / (config.kappa * r)).clamp(-1.0, 1.0).asin();
            wrap_canonical(if s > 0 { a } else { PI - a })
        })
        .collect()
}

fn make_record(config: &SystemConfig, signature: Signature, r: f64, boundary: bool) -> EquilibriumRecord {
    let theta = equilibrium_phases(config, &signature.sigma, r);
    let mut rec = EquilibriumRecord {
        r,
        theta,
        signature,
        divergence: 0.0,
        stability: Stability::Indeterminate,
        max_eig_real: 0.0,
        boundary,
    };
    attach_stability(config, &mut rec);
    rec
}

fn attach_stability(config: &SystemConfig, rec: &mut EquilibriumRecord) {
    let j = sinusoidal_jacobian(config.kappa, &rec.theta);
    rec.divergence = j.trace();
    rec.max_eig_real = max_eigenvalue(j);
    rec.stability = classify_stability(config, rec);
}

fn max_eigenvalue(j: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(j).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Linear stability from the Jacobian spectrum (the Jacobian is symmetric).
///
/// Boundary equilibria are reported Indeterminate unless a positive eigenvalue settles it.
pub fn classify_stability(config: &SystemConfig, eq: &EquilibriumRecord) -> Stability {
    let lam = max_eigenvalue(sinusoidal_jacobian(config.kappa, &eq.theta));
    if lam > 1e-8 {
        Stability::Unstable
    } else if lam < -1e-8 && !eq.boundary {
        Stability::Stable
    } else {
        Stability::Indeterminate
    }
}

fn same_state(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| wrap_canonical(x - y).abs() < 1e-8)
}

/// Every equilibrium, deduplicated modulo 2π.
pub fn enumerate_equilibria(config: &SystemConfig) -> Result<Vec<EquilibriumRecord>> {
    config.validate()?;
    if config.kappa == 0.0 {
        return domain("kappa must be nonzero");
    }
    let n = config.n;
    if n > MAX_ENUMERATION_N {
        return Err(Error::SizeLimit(format!("N = {n} exceeds {MAX_ENUMERATION_N} for 2^N enumeration")));
    }
    let masks: Vec<u64> = (0..1u64 << n).collect();
    if config.omega_max() == 0.0 {
        return Ok(masks
            .into_iter()
            .map(|mask| {
                let sig = Signature::from_mask(n, mask);
                let theta: Vec<f64> = sig.sigma.iter().map(|&s| if s > 0 { 0.0 } else { PI }).collect();
                let r = 1.0 + theta.iter().map(|t| t.cos()).sum::<f64>() / n as f64;
                let mut rec = EquilibriumRecord {
                    r,
                    theta,
                    signature: sig,
                    divergence: 0.0,
                    stability: Stability::Indeterminate,
                    max_eig_real: 0.0,
                    boundary: false,
                };
                attach_stability(config, &mut rec);
                rec
            })
            .collect());
    }
    let boundary_r = config.omega_max() / config.kappa.abs();
    let per_sig: Vec<Vec<EquilibriumRecord>> = masks
        .par_iter()
        .map(|&mask| {
            let sig = Signature::from_mask(n, mask);
            let roots = solve_r_equation(config, &sig).unwrap_or_default();
            roots
                .into_iter()
                .map(|r| make_record(config, sig.clone(), r, (r - boundary_r).abs() <= 1e-12 * boundary_r.max(1.0)))
                .collect()
        })
        .collect();
    let mut out: Vec<EquilibriumRecord> = Vec::new();
    for rec in per_sig.into_iter().flatten() {
        if !out.iter().any(|o| same_state(&o.theta, &rec.theta)) {
            out.push(rec);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalCoupling {
    pub kappa_c: f64,
    pub u_star: f64,
    /// Ω = 0: every κ > 0 admits equilibria.
    pub degenerate: bool,
}

/// Smallest κ admitting an equilibrium.
pub fn critical_coupling(omega: &[f64]) -> Result<CriticalCoupling> {
    if omega.is_empty() || omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::Config("frequencies must be a non-empty finite vector".into()));
    }
    let n = omega.len() as f64;
    let wmax = max_abs(omega);
    if wmax == 0.0 {
        return Ok(CriticalCoupling { kappa_c: 0.0, u_star: 0.0, degenerate: true });
    }
    let root = |u: f64| -> Vec<f64> { omega.iter().map(|w| (1.0 - (w / u).powi(2)).max(0.0).sqrt()).collect() };
    let g = |u: f64| {
        let q = root(u);
        n + 2.0 * q.iter().sum::<f64>() - q.iter().map(|x| 1.0 / x).sum::<f64>()
    };
    let mut lo = wmax * (1.0 + 1e-12);
    let mut hi = 2.0 / 3f64.sqrt() * wmax;
    let u_star = if g(hi) <= 0.0 {
        hi
    } else {
        while hi - lo > 1e-15 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let kappa_c = n * u_star / (n + root(u_star).iter().sum::<f64>());
    let ratio = kappa_c / wmax;
    let (lb, ub) = (2.0 * n / (4.0 * n - 1.0), 4.0 / (3.0 * 3f64.sqrt()));
    if !(ratio >= lb - 1e-12 && ratio <= ub + 1e-12) {
        return Err(Error::Numeric(format!(
            "critical coupling ratio {ratio} outside [{lb}, {ub}]"
        )));
    }
    Ok(CriticalCoupling { kappa_c, u_star, degenerate: false })
}

/// Equilibrium with order parameter near a prescribed `rho`; also returns the
/// number `m` of oscillators on the `+` branch.
pub fn construct_prescribed_equilibrium(rho: f64, config: &SystemConfig) -> Result<(EquilibriumRecord, usize)> {
    config.validate()?;
    let n = config.n;
    let nf = n as f64;
    let kappa = config.kappa;
    if !(rho > 0.0 && rho <= 2.0) {
        return domain(format!("rho = {rho} not in (0, 2]"));
    }
    if !(nf >= 2.0 / rho) {
        return domain(format!("N >= 2/rho violated: {n} < {}", 2.0 / rho));
    }
    if kappa == 0.0 {
        return domain("kappa must be nonzero");
    }
    let ratio = config.omega_max() / kappa.abs();
    if !(ratio < rho.powf(1.5) / 16.0) {
        return domain(format!(
            "max|omega|/|kappa| < rho^1.5/16 violated: {ratio} >= {}",
            rho.powf(1.5) / 16.0
        ));
    }
    let m = ((rho * nf / 2.0) * (1.0 + 1e-12)).floor().min(nf) as usize;
    let rho0 = 2.0 * m as f64 / nf;
    let sigma: Vec<i8> = (0..n).map(|i| if i < m { 1 } else { -1 }).collect();
    let r = if ratio == 0.0 {
        rho0
    } else {
        let f = |r: f64| r_residual(&config.omega, kappa, &sigma, r);
        let (a, b) = (rho0 / 2.0, 1.5 * rho0);
        let (fa, fb) = (f(a), f(b));
        if fa.signum() == fb.signum() {
            return Err(Error::Numeric(format!("no sign change of the R-equation on [{a}, {b}]")));
        }
        bisect(&f, a, b, fa)
    };
    if !(r >= rho / 4.0 && r <= 1.5 * rho) {
        return Err(Error::Numeric(format!("R = {r} outside [rho/4, 3 rho/2]")));
    }
    let rec = make_record(config, Signature { sigma }, r, false);
    for (i, (&t, &s)) in rec.theta.iter().zip(&rec.signature.sigma).enumerate() {
        let w = config.omega[i].abs();
        let dist = if s > 0 { t.abs() } else { wrap_canonical(t - PI).abs() };
        let lower = 2.0 * w / (3.0 * rho * kappa.abs());
        let upper = 2.0 * PI * w / (rho * kappa.abs());
        if dist < lower - 1e-12 || dist > upper + 1e-12 {
            return Err(Error::Numeric(format!(
                "oscillator {i}: phase offset {dist} outside [{lower}, {upper}]"
            )));
        }
    }
    Ok((rec, m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WPolynomial {
    /// Ascending powers of r.
    pub coeffs: Vec<f64>,
    pub degree: usize,
    /// Integer multiple of W, present when the expansion was exact.
    #[serde(skip)]
    exact: Option<Vec<BigInt>>,
}

trait Coeff: Clone + Send + Sync {
    type Acc: Clone;
    fn from_f64(x: f64) -> Self;
    fn acc_zero() -> Self::Acc;
    fn acc_add(acc: &mut Self::Acc, x: Self);
    fn acc_value(acc: &Self::Acc) -> Self;
    fn mul(a: &Self, b: &Self) -> Self;
    fn neg(a: &Self) -> Self;
    fn double(a: &Self) -> Self;
    fn inv(a: &Self) -> Self;
}

impl Coeff for f64 {
    /// Neumaier compensated sum.
    type Acc = (f64, f64);
    fn from_f64(x: f64) -> Self {
        x
    }
    fn acc_zero() -> Self::Acc {
        (0.0, 0.0)
    }
    fn acc_add(acc: &mut Self::Acc, x: f64) {
        let t = acc.0 + x;
        if acc.0.abs() >= x.abs() {
            acc.1 += (acc.0 - t) + x;
        } else {
            acc.1 += (x - t) + acc.0;
        }
        acc.0 = t;
    }
    fn acc_value(acc: &Self::Acc) -> f64 {
        acc.0 + acc.1
    }
    fn mul(a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn neg(a: &f64) -> f64 {
        -a
    }
    fn double(a: &f64) -> f64 {
        2.0 * a
    }
    fn inv(a: &f64) -> f64 {
        1.0 / a
    }
}

impl Coeff for BigRational {
    type Acc = BigRational;
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite input")
    }
    fn acc_zero() -> Self::Acc {
        BigRational::zero()
    }
    fn acc_add(acc: &mut Self::Acc, x: Self) {
        *acc += x;
    }
    fn acc_value(acc: &Self::Acc) -> Self {
        acc.clone()
    }
    fn mul(a: &Self, b: &Self) -> Self {
        a * b
    }
    fn neg(a: &Self) -> Self {
        -a
    }
    fn double(a: &Self) -> Self {
        a + a
    }
    fn inv(a: &Self) -> Self {
        a.recip()
    }
}

type Poly<T> = Vec<T>;

fn poly_mul<T: Coeff>(a: &[T], b: &[T]) -> Poly<T> {
    let mut acc = vec![T::acc_zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            T::acc_add(&mut acc[i + j], T::mul(x, y));
        }
    }
    acc.iter().map(T::acc_value).collect()
}

fn acc_into<T: Coeff>(acc: &mut Vec<T::Acc>, p: &[T], negate: bool) {
    if acc.len() < p.len() {
        acc.resize(p.len(), T::acc_zero());
    }
    for (a, x) in acc.iter_mut().zip(p) {
        T::acc_add(a, if negate { T::neg(x) } else { x.clone() });
    }
}

/// Multiply out `∏_Σ [r(1-r) + (1/(Nκ)) Σ_j σ_j s_j]` with `s_j² = κ²r² - ω_j²`.
///
/// Expressions are kept multilinear in the `s_j`: entry `mask` holds the
/// coefficient polynomial of `∏_{j ∈ mask} s_j`. Folding out `s_j` replaces
/// `A + s_j B` by `A² - s_j² B²`.
fn w_product<T: Coeff>(omega: &[f64], kappa: f64) -> Poly<T> {
    let n = omega.len();
    let size = 1usize << n;
    let k = T::from_f64(kappa);
    let k2 = T::mul(&k, &k);
    let zero = T::acc_value(&T::acc_zero());
    let s2: Vec<Poly<T>> = omega
        .iter()
        .map(|&w| {
            let w = T::from_f64(w);
            vec![T::neg(&T::mul(&w, &w)), zero.clone(), k2.clone()]
        })
        .collect();
    let one = T::from_f64(1.0);
    let inv_nk = T::inv(&T::mul(&T::from_f64(n as f64), &k));
    let mut e: Vec<Option<Poly<T>>> = vec![None; size];
    e[0] = Some(vec![zero.clone(), one.clone(), T::neg(&one)]);
    for j in 0..n {
        e[1 << j] = Some(vec![inv_nk.clone()]);
    }
    for j in 0..n {
        let bit = 1usize << j;
        let mut a: Vec<Option<Poly<T>>> = vec![None; size];
        let mut b: Vec<Option<Poly<T>>> = vec![None; size];
        for (mask, p) in e.into_iter().enumerate() {
            if let Some(p) = p {
                if mask & bit == 0 {
                    a[mask] = Some(p);
                } else {
                    b[mask & !bit] = Some(p);
                }
            }
        }
        let a2 = square_multilinear(&a, &s2);
        let b2 = square_multilinear(&b, &s2);
        let mut acc: Vec<Vec<T::Acc>> = vec![Vec::new(); size];
        for (mask, p) in a2.iter().enumerate() {
            if let Some(p) = p {
                acc_into(&mut acc[mask], p, false);
            }
        }
        for (mask, p) in b2.iter().enumerate() {
            if let Some(p) = p {
                acc_into(&mut acc[mask], &poly_mul(p, &s2[j]), true);
            }
        }
        e = acc
            .into_iter()
            .map(|a| (!a.is_empty()).then(|| a.iter().map(T::acc_value).collect()))
            .collect();
    }
    e.swap_remove(0).expect("constant term present")
}

fn square_multilinear<T: Coeff>(x: &[Option<Poly<T>>], s2: &[Poly<T>]) -> Vec<Option<Poly<T>>> {
    let size = x.len();
    let live: Vec<usize> = (0..size).filter(|&m| x[m].is_some()).collect();
    let mut acc: Vec<Vec<T::Acc>> = vec![Vec::new(); size];
    for (ia, &ma) in live.iter().enumerate() {
        for &mb in &live[ia..] {
            let pa = x[ma].as_ref().unwrap();
            let pb = x[mb].as_ref().unwrap();
            let mut term = poly_mul(pa, pb);
            let mut common = ma & mb;
            while common != 0 {
                let j = common.trailing_zeros() as usize;
                term = poly_mul(&term, &s2[j]);
                common &= common - 1;
            }
            if ma != mb {
                term = term.iter().map(T::double).collect();
            }
            acc_into(&mut acc[ma ^ mb], &term, false);
        }
    }
    acc.into_iter()
        .map(|a| (!a.is_empty()).then(|| a.iter().map(T::acc_value).collect()))
        .collect()
}

fn check_w_input(config: &SystemConfig, limit: usize) -> Result<()> {
    config.validate()?;
    if config.n > limit {
        return Err(Error::SizeLimit(format!("N = {} exceeds {limit} for the W polynomial", config.n)));
    }
    if config.kappa == 0.0 {
        return domain("kappa must be nonzero");
    }
    if config.omega_max() == 0.0 {
        return Err(Error::Degenerate("all frequencies vanish".into()));
    }
    Ok(())
}

/// The degree-`2^{N+1}` polynomial whose roots contain every equilibrium R.
///
/// For `N <= EXACT_W_N` the coefficients are expanded in rational arithmetic
/// and rounded once; above that the expansion runs in f64 with compensated sums.
pub fn build_w_polynomial(config: &SystemConfig) -> Result<WPolynomial> {
    check_w_input(config, MAX_W_N)?;
    let degree = 1usize << (config.n + 1);
    if config.n <= EXACT_W_N {
        let exact = build_w_polynomial_exact(config)?;
        let coeffs = exact.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        return Ok(WPolynomial { coeffs, degree, exact: Some(clear_denominators(&exact)) });
    }
    let mut coeffs = w_product::<f64>(&config.omega, config.kappa);
    coeffs.resize(degree + 1, 0.0);
    Ok(WPolynomial { coeffs, degree, exact: None })
}

/// Exact rational coefficients of W for the binary values of the inputs (`N <= EXACT_W_N`).
pub fn build_w_polynomial_exact(config: &SystemConfig) -> Result<Vec<BigRational>> {
    check_w_input(config, EXACT_W_N)?;
    let mut coeffs = w_product::<BigRational>(&config.omega, config.kappa);
    coeffs.resize((1usize << (config.n + 1)) + 1, BigRational::zero());
    Ok(coeffs)
}

fn clear_denominators(c: &[BigRational]) -> Vec<BigInt> {
    let l = c.iter().fold(BigInt::from(1), |l, x| l.lcm(x.denom()));
    c.iter().map(|x| x.numer() * (&l / x.denom())).collect()
}

fn remove_content(p: &mut [BigInt]) {
    let g = p.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.bits() > 1 {
        for x in p.iter_mut() {
            *x /= &g;
        }
    }
}

/// `p(y + 1)`.
fn taylor_shift_one(p: &mut [BigInt]) {
    let d = p.len() - 1;
    for i in 0..d {
        for j in (i..d).rev() {
            let next = p[j + 1].clone();
            p[j] += next;
        }
    }
}

/// Descartes bound on the number of roots of `p` in `(0, 1)`.
fn variations_01(p: &[BigInt]) -> usize {
    let mut q: Vec<BigInt> = p.iter().rev().cloned().collect();
    taylor_shift_one(&mut q);
    let signs: Vec<Sign> = q.iter().map(|x| x.sign()).filter(|s| *s != Sign::NoSign).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Sign of `p(j / 2^m)`.
fn sign_at(p: &[BigInt], j: &BigInt, m: usize) -> Sign {
    let d = p.len() - 1;
    let mut v = p[d].clone();
    for i in (0..d).rev() {
        v = v * j + (&p[i] << (m * (d - i)));
    }
    v.sign()
}

const ISOLATION_DEPTH: usize = 52;

/// Real roots of the integer polynomial `p` in `[lo, hi]` by Descartes bisection.
///
/// Clusters narrower than `2^-52 (hi - lo)` are reported once.
fn isolate_real_roots(p: &[BigInt], lo: f64, hi: f64) -> Vec<f64> {
    let mut p = p.to_vec();
    while p.len() > 1 && p.last().unwrap().is_zero() {
        p.pop();
    }
    if p.len() < 2 || !(lo <= hi) {
        return Vec::new();
    }
    let (Some(l), Some(w)) = (BigRational::from_float(lo), BigRational::from_float(hi - lo)) else {
        return Vec::new();
    };
    let den = l.denom().lcm(w.denom());
    let ln = l.numer() * (&den / l.denom());
    let wn = w.numer() * (&den / w.denom());
    // q(y) = den^d p((ln + wn y) / den)
    let d = p.len() - 1;
    let mut q = vec![p[d].clone()];
    let mut scale = BigInt::from(1);
    for i in (0..d).rev() {
        scale *= &den;
        let mut next = vec![BigInt::zero(); q.len() + 1];
        for (k, c) in q.iter().enumerate() {
            next[k] += c * &ln;
            next[k + 1] += c * &wn;
        }
        next[0] += &p[i] * &scale;
        q = next;
    }
    remove_content(&mut q);

    let mut ys: Vec<f64> = Vec::new();
    if q.iter().fold(BigInt::zero(), |s, c| s + c).is_zero() {
        ys.push(1.0);
    }
    let mut stack = vec![(q, BigInt::zero(), 0usize)];
    while let Some((mut q, c, k)) = stack.pop() {
        let to_y = |num: f64| (c.to_f64().unwrap() + num) / 2f64.powi(k as i32);
        if q[0].is_zero() {
            ys.push(to_y(0.0));
            while q.len() > 1 && q[0].is_zero() {
                q.remove(0);
            }
        }
        if q.len() < 2 {
            continue;
        }
        match variations_01(&q) {
            0 => {}
            1 => ys.push(to_y(bisect_sign_change(&q))),
            _ if k >= ISOLATION_DEPTH => ys.push(to_y(0.5)),
            _ => {
                let d = q.len() - 1;
                let mut left: Vec<BigInt> = q.iter().enumerate().map(|(i, x)| x << (d - i)).collect();
                remove_content(&mut left);
                let mut right = left.clone();
                taylor_shift_one(&mut right);
                remove_content(&mut right);
                let c2: BigInt = &c << 1usize;
                stack.push((right, &c2 + 1, k + 1));
                stack.push((left, c2, k + 1));
            }
        }
    }
    let mut xs: Vec<f64> = ys.into_iter().map(|y| (lo + (hi - lo) * y).clamp(lo, hi)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Locate the single sign change of `q` on `(0, 1)`.
fn bisect_sign_change(q: &[BigInt]) -> f64 {
    let s0 = q[0].sign();
    let (mut a, mut m) = (BigInt::zero(), 0usize);
    // Invariant: sign(q(a/2^m)) == s0 and the root lies in (a/2^m, (a+1)/2^m).
    while m < 60 {
        a <<= 1usize;
        m += 1;
        let mid = &a + 1;
        match sign_at(q, &mid, m) {
            Sign::NoSign => return mid.to_f64().unwrap() / 2f64.powi(m as i32),
            s if s == s0 => a = mid,
            _ => {}
        }
    }
    (a.to_f64().unwrap() + 0.5) / 2f64.powi(m as i32)
}

impl WPolynomial {
    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }

    fn eval_c(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::zero();
        let mut dp = Complex64::zero();
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// All complex roots: companion-matrix eigenvalues polished by Newton steps.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let mut c = self.coeffs.clone();
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        let d = c.len() - 1;
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = c[d];
        let comp = DMatrix::from_fn(d, d, |i, j| {
            if i == 0 {
                -c[d - 1 - j] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let schur = nalgebra::linalg::Schur::try_new(comp, 1e-15, 100_000)
            .ok_or_else(|| Error::Numeric("companion eigenvalue iteration did not converge".into()))?;
        let mut roots: Vec<Complex64> = schur
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect();
        for z in roots.iter_mut() {
            for _ in 0..50 {
                let (p, dp) = self.eval_c(*z);
                if dp == Complex64::zero() {
                    break;
                }
                let step = p / dp;
                let next = *z - step;
                if !next.re.is_finite() || !next.im.is_finite() {
                    break;
                }
                if self.eval_c(next).0.norm() >= p.norm() {
                    break;
                }
                *z = next;
            }
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    /// Real roots in `[lo, hi]`.
    ///
    /// Exact expansions are isolated exactly and `im_tol` is unused; otherwise
    /// these are the real parts of companion roots with `|im| <= im_tol`.
    pub fn real_roots_in(&self, lo: f64, hi: f64, im_tol: f64) -> Result<Vec<f64>> {
        if let Some(p) = &self.exact {
            return Ok(isolate_real_roots(p, lo, hi));
        }
        Ok(self
            .roots()?
            .into_iter()
            .filter(|z| z.im.abs() <= im_tol && z.re >= lo && z.re <= hi)
            .map(|z| z.re)
            .collect())
    }

    /// Number of roots (with multiplicity) within `radius` of `x`.
    pub fn multiplicity_near(&self, x: f64, radius: f64) -> Result<usize> {
        Ok(self
            .roots()?
            .iter()
            .filter(|z| (*z - Complex64::new(x, 0.0)).norm() <= radius)
            .count())
    }
}
