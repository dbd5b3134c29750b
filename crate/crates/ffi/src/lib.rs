//! C ABI over the `winfree` crate.
//!
//! Objects cross the boundary as opaque handles created by `wf_*_new` style
//! functions and released by the matching `wf_*_free`. Every fallible call
//! returns a [`WfStatus`]; the message for the most recent failure on the
//! calling thread is available through [`wf_last_error_message`].

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use winfree::equilibria::{self, EquilibriumRecord, Stability};
use winfree::integrate::{self, Method, SolverOptions, Trajectory};
use winfree::model::{self, InteractionSpec, SystemConfig};
use winfree::thresholds::{self, BoundKind, BoundParams};
use winfree::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Unsupported = 4,
    IntegrationFailure = 5,
    Numeric = 6,
    SizeLimit = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfFamily {
    Sinusoidal = 0,
    /// Parameter: integer exponent n ≥ 1.
    PowerCosine = 1,
    /// Parameter: peak r in (-1, 1).
    RectifiedPoisson = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfBoundKind {
    SincosMain = 0,
    SincosMainTail = 1,
    SincosTime = 2,
    SincosTimeLarge = 3,
    OrderParamCdf = 4,
    GeneralMaincor = 5,
    KappaLarge = 6,
    QuantIs = 7,
    EscapeMeasure = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfStability {
    Stable = 0,
    Unstable = 1,
    Indeterminate = 2,
}

/// Bound inputs. Set unused fields to NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WfBoundParams {
    pub epsilon: f64,
    pub delta: f64,
    pub t: f64,
    pub c_mu: f64,
    pub beta: f64,
    pub r_star: f64,
    pub i_star: f64,
    pub t_level: f64,
    pub kappa: f64,
    pub omega_max: f64,
}

/// Opaque: frequencies, coupling and interaction functions.
pub struct WfSystem {
    config: SystemConfig,
    spec: InteractionSpec,
}

/// Opaque: a sampled trajectory.
pub struct WfTrajectory(Trajectory);

/// Opaque: a list of equilibria.
pub struct WfEquilibria(Vec<EquilibriumRecord>);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> WfStatus {
    match e {
        Error::Config(_) | Error::Precondition(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => {
            WfStatus::InvalidArgument
        }
        Error::Domain(_) | Error::Inapplicable(_) | Error::Degenerate(_) | Error::InsufficientData(_) => {
            WfStatus::Domain
        }
        Error::Unsupported(_) => WfStatus::Unsupported,
        Error::Integration { .. } => WfStatus::IntegrationFailure,
        Error::Numeric(_) => WfStatus::Numeric,
        Error::SizeLimit(_) => WfStatus::SizeLimit,
    }
}

fn fail(status: WfStatus, msg: impl Into<String>) -> WfStatus {
    set_error(msg);
    status
}

/// Run `f`, converting library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), WfStatus>) -> WfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(WfStatus::Panic, "internal panic"),
    }
}

trait IntoStatus<T> {
    fn st(self) -> Result<T, WfStatus>;
}

impl<T> IntoStatus<T> for winfree::Result<T> {
    fn st(self) -> Result<T, WfStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn input<'a>(p: *const f64, len: usize) -> Result<&'a [f64], WfStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(WfStatus::NullPointer, "null input array"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, need: usize) -> Result<&'a mut [T], WfStatus> {
    if len < need {
        return Err(fail(WfStatus::BufferTooSmall, format!("buffer holds {len}, need {need}")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(WfStatus::NullPointer, "null output buffer"));
    }
    Ok(slice::from_raw_parts_mut(p, need))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, WfStatus> {
    p.as_mut().ok_or_else(|| fail(WfStatus::NullPointer, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, WfStatus> {
    p.as_ref().ok_or_else(|| fail(WfStatus::NullPointer, "null handle"))
}

/// Length in bytes of the last error message on this thread, excluding the terminator.
#[no_mangle]
pub extern "C" fn wf_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copy the last error message into `buf` as a NUL-terminated string,
/// truncating if needed. Returns the number of bytes written without the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn wf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// Create a system with `n` frequencies and coupling `kappa`.
///
/// `param` is the family parameter (exponent or peak); ignored for the sinusoidal family.
///
/// # Safety
/// `omega` must point to `n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_system_new(
    family: WfFamily,
    param: f64,
    omega: *const f64,
    n: usize,
    kappa: f64,
    out: *mut *mut WfSystem,
) -> WfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let omega = input(omega, n)?.to_vec();
        let config = SystemConfig::new(omega, kappa).st()?;
        let spec = match family {
            WfFamily::Sinusoidal => InteractionSpec::sinusoidal(),
            WfFamily::PowerCosine => {
                if !(param >= 1.0 && param.fract() == 0.0 && param <= u32::MAX as f64) {
                    return Err(fail(WfStatus::InvalidArgument, "power-cosine exponent must be a positive integer"));
                }
                InteractionSpec::power_cosine(param as u32).st()?
            }
            WfFamily::RectifiedPoisson => InteractionSpec::rectified_poisson(param).st()?,
        };
        *out = Box::into_raw(Box::new(WfSystem { config, spec }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from [`wf_system_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wf_system_free(sys: *mut WfSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of oscillators, or 0 for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wf_system_n(sys: *const WfSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.config.n)
}

unsafe fn state<'a>(sys: &WfSystem, theta: *const f64, n: usize) -> Result<&'a [f64], WfStatus> {
    if n != sys.config.n {
        return Err(fail(WfStatus::InvalidArgument, format!("state length {n}, expected {}", sys.config.n)));
    }
    input(theta, n)
}

/// Order parameter `R = (1/N) Σ I(θ_j)`.
///
/// # Safety
/// `theta` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_order_parameter(
    sys: *const WfSystem,
    theta: *const f64,
    n: usize,
    out: *mut f64,
) -> WfStatus {
    guard(|| {
        let s = handle(sys)?;
        let th = state(s, theta, n)?;
        *out_ref(out)? = model::order_parameter(&s.spec, th);
        Ok(())
    })
}

/// Vector field at `theta`, written to `out` (length `n`).
///
/// # Safety
/// `theta` and `out` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_vector_field(
    sys: *const WfSystem,
    theta: *const f64,
    n: usize,
    out: *mut f64,
) -> WfStatus {
    guard(|| {
        let s = handle(sys)?;
        let th = state(s, theta, n)?;
        let o = output(out, n, n)?;
        model::vector_field_into(&s.config, &s.spec, th, o);
        Ok(())
    })
}

/// Divergence of the vector field at `theta`.
///
/// # Safety
/// `theta` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_divergence(sys: *const WfSystem, theta: *const f64, n: usize, out: *mut f64) -> WfStatus {
    guard(|| {
        let s = handle(sys)?;
        let th = state(s, theta, n)?;
        *out_ref(out)? = model::divergence(&s.config, &s.spec, th);
        Ok(())
    })
}

/// Gradient-flow potential at `theta`.
///
/// # Safety
/// `theta` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_potential(sys: *const WfSystem, theta: *const f64, n: usize, out: *mut f64) -> WfStatus {
    guard(|| {
        let s = handle(sys)?;
        let th = state(s, theta, n)?;
        *out_ref(out)? = model::potential(&s.config, &s.spec, th).st()?;
        Ok(())
    })
}

/// Integrate with the adaptive Dormand–Prince method.
///
/// # Safety
/// `theta0` must point to `n` doubles; `out` must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wf_simulate(
    sys: *const WfSystem,
    theta0: *const f64,
    n: usize,
    horizon: f64,
    sample_stride: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_dt: f64,
    out: *mut *mut WfTrajectory,
) -> WfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let s = handle(sys)?;
        let th = state(s, theta0, n)?;
        let opts = SolverOptions {
            method: Method::DormandPrince45 { abs_tol, rel_tol, max_dt },
            horizon,
            sample_stride,
        };
        let traj = integrate::simulate(&s.config, &s.spec, &th.to_vec().into(), &opts).st()?;
        *out = Box::into_raw(Box::new(WfTrajectory(traj)));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`wf_simulate`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_free(traj: *mut WfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_len(traj: *const WfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.times.len())
}

/// Copy sample times into `out` (capacity `len`).
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_times(traj: *const WfTrajectory, out: *mut f64, len: usize) -> WfStatus {
    guard(|| {
        let t = &handle(traj)?.0;
        output(out, len, t.times.len())?.copy_from_slice(&t.times);
        Ok(())
    })
}

/// Copy the order-parameter series into `out` (capacity `len`).
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_order_parameter(
    traj: *const WfTrajectory,
    out: *mut f64,
    len: usize,
) -> WfStatus {
    guard(|| {
        let t = &handle(traj)?.0;
        output(out, len, t.r_series.len())?.copy_from_slice(&t.r_series);
        Ok(())
    })
}

/// Copy unwrapped phases, row-major (`samples × N`), into `out` (capacity `len`).
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_trajectory_states(traj: *const WfTrajectory, out: *mut f64, len: usize) -> WfStatus {
    guard(|| {
        let t = &handle(traj)?.0;
        let n = t.n();
        let o = output(out, len, n * t.states.len())?;
        for (row, s) in o.chunks_mut(n.max(1)).zip(&t.states) {
            row.copy_from_slice(s);
        }
        Ok(())
    })
}

/// Second-half secant rotation numbers, one per oscillator.
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_rotation_numbers(traj: *const WfTrajectory, out: *mut f64, len: usize) -> WfStatus {
    guard(|| {
        let t = &handle(traj)?.0;
        let rho = integrate::rotation_numbers(t).st()?;
        output(out, len, rho.len())?.copy_from_slice(&rho);
        Ok(())
    })
}

/// Death flags (1 if sup - inf < 2π after `window_start`), one per oscillator.
///
/// # Safety
/// `out` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wf_detect_death(
    traj: *const WfTrajectory,
    window_start: f64,
    out: *mut u8,
    len: usize,
) -> WfStatus {
    guard(|| {
        let t = &handle(traj)?.0;
        let flags = integrate::detect_death(t, window_start).st()?;
        for (o, f) in output(out, len, flags.len())?.iter_mut().zip(flags) {
            *o = f as u8;
        }
        Ok(())
    })
}

/// Critical coupling of the sinusoidal model. Zero frequencies give 0.
///
/// # Safety
/// `omega` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_critical_coupling(omega: *const f64, n: usize, out: *mut f64) -> WfStatus {
    guard(|| {
        let w = input(omega, n)?;
        *out_ref(out)? = equilibria::critical_coupling(w).st()?.kappa_c;
        Ok(())
    })
}

/// Threshold coefficient `K_c(R0)` for `R0 ∈ (0, 2]`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_kc_coefficient(r0: f64, out: *mut f64) -> WfStatus {
    guard(|| {
        *out_ref(out)? = thresholds::kc_coefficient(r0).st()?;
        Ok(())
    })
}

/// Guaranteed limit of the order parameter for `kappa > 2 omega_max`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_limit_r_lower_bound(omega_max: f64, kappa: f64, out: *mut f64) -> WfStatus {
    guard(|| {
        *out_ref(out)? = thresholds::limit_r_lower_bound(omega_max, kappa).st()?;
        Ok(())
    })
}

/// Closed-form probability bound for `n` oscillators with the sinusoidal spec.
///
/// `out_t0` (nullable) receives the crossover time for finite-time bounds, NaN otherwise.
///
/// # Safety
/// `params` and `out` must be valid; `out_t0` may be null.
#[no_mangle]
pub unsafe extern "C" fn wf_probability_bound(
    kind: WfBoundKind,
    n: usize,
    params: *const WfBoundParams,
    out: *mut f64,
    out_t0: *mut f64,
) -> WfStatus {
    guard(|| {
        let p = handle(params)?;
        let opt = |x: f64| (!x.is_nan()).then_some(x);
        let bp = BoundParams {
            epsilon: opt(p.epsilon),
            delta: opt(p.delta),
            t: opt(p.t),
            c_mu: opt(p.c_mu),
            beta: opt(p.beta),
            r_star: opt(p.r_star),
            i_star: opt(p.i_star),
            t_level: opt(p.t_level),
            kappa: opt(p.kappa),
            omega_max: opt(p.omega_max),
        };
        let k = match kind {
            WfBoundKind::SincosMain => BoundKind::SincosMain,
            WfBoundKind::SincosMainTail => BoundKind::SincosMainTail,
            WfBoundKind::SincosTime => BoundKind::SincosTime,
            WfBoundKind::SincosTimeLarge => BoundKind::SincosTimeLarge,
            WfBoundKind::OrderParamCdf => BoundKind::OrderParamCdf,
            WfBoundKind::GeneralMaincor => BoundKind::GeneralMaincor,
            WfBoundKind::KappaLarge => BoundKind::KappaLarge,
            WfBoundKind::QuantIs => BoundKind::QuantIs,
            WfBoundKind::EscapeMeasure => BoundKind::EscapeMeasure,
        };
        let v = thresholds::probability_bound(k, n, &bp, &InteractionSpec::sinusoidal()).st()?;
        *out_ref(out)? = v.value;
        if let Some(t0) = out_t0.as_mut() {
            *t0 = v.t0.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Enumerate equilibria of a sinusoidal system.
///
/// # Safety
/// `sys` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_enumerate_equilibria(sys: *const WfSystem, out: *mut *mut WfEquilibria) -> WfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let s = handle(sys)?;
        if !s.spec.is_sinusoidal() {
            return Err(fail(WfStatus::Unsupported, "equilibria need the sinusoidal family"));
        }
        let eqs = equilibria::enumerate_equilibria(&s.config).st()?;
        *out = Box::into_raw(Box::new(WfEquilibria(eqs)));
        Ok(())
    })
}

/// # Safety
/// `eqs` must come from [`wf_enumerate_equilibria`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wf_equilibria_free(eqs: *mut WfEquilibria) {
    if !eqs.is_null() {
        drop(Box::from_raw(eqs));
    }
}

/// Number of equilibria, or 0 for a null handle.
///
/// # Safety
/// `eqs` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wf_equilibria_len(eqs: *const WfEquilibria) -> usize {
    eqs.as_ref().map_or(0, |e| e.0.len())
}

/// Read equilibrium `index`: order parameter, canonical phases (capacity `len`) and stability.
///
/// # Safety
/// `out_r`, `out_stability` must be valid; `theta` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_equilibria_get(
    eqs: *const WfEquilibria,
    index: usize,
    out_r: *mut f64,
    theta: *mut f64,
    len: usize,
    out_stability: *mut WfStability,
) -> WfStatus {
    guard(|| {
        let e = &handle(eqs)?.0;
        let rec = e
            .get(index)
            .ok_or_else(|| fail(WfStatus::InvalidArgument, format!("index {index} out of range")))?;
        *out_ref(out_r)? = rec.r;
        output(theta, len, rec.theta.len())?.copy_from_slice(&rec.theta);
        *out_ref(out_stability)? = match rec.stability {
            Stability::Stable => WfStability::Stable,
            Stability::Unstable => WfStability::Unstable,
            Stability::Indeterminate => WfStability::Indeterminate,
        };
        Ok(())
    })
}

/// Coefficients of the equilibrium polynomial W, ascending, into `coeffs`
/// (capacity `len`, needs `2^(N+1) + 1`). `out_degree` receives the degree.
///
/// # Safety
/// `coeffs` valid for `len` doubles; `out_degree` valid.
#[no_mangle]
pub unsafe extern "C" fn wf_w_polynomial(
    sys: *const WfSystem,
    coeffs: *mut f64,
    len: usize,
    out_degree: *mut usize,
) -> WfStatus {
    guard(|| {
        let s = handle(sys)?;
        let w = equilibria::build_w_polynomial(&s.config).st()?;
        *out_ref(out_degree)? = w.degree;
        output(coeffs, len, w.coeffs.len())?.copy_from_slice(&w.coeffs);
        Ok(())
    })
}
