//! C ABI over `stab_lab`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_derive`/
//! `stab_simulate` and released by the matching `*_free`. Every fallible call
//! returns a [`StabStatus`]; on failure `stab_last_error` describes the cause
//! until the next call on the same thread. Strings returned by the library are
//! released with `stab_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stab_lab::ergodicity::{empirical_wasserstein1, fit_exponential};
use stab_lab::lyapunov::{derive_constants, global_v, verify_drift_condition, DriftFunction, LyapunovConstants, RegionSampler};
use stab_lab::model::{blowup_time, drift_fields, DriftVariant, ModelParams, Profile, State};
use stab_lab::sde::{simulate_path, IntegratorConfig, Scheme, Trajectory};
use stab_lab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    Derivation = 3,
    Numeric = 4,
    BlowUp = 5,
    FitUnavailable = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabScheme {
    TamedEuler = 0,
    Euler = 1,
}

/// Opaque model parameters.
pub struct StabModel(ModelParams);

/// Opaque constant ledger.
pub struct StabLedger(LyapunovConstants);

/// Opaque simulated path.
pub struct StabTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> StabStatus {
    match e {
        Error::InvalidParams(_) | Error::Input(_) | Error::WrongRegime(_) | Error::Unsupported(_) => {
            StabStatus::InvalidParams
        }
        Error::DerivationFailure(_) | Error::Assembly(_) => StabStatus::Derivation,
        Error::BlowUp { .. } | Error::BlowUpDetected { .. } => StabStatus::BlowUp,
        Error::FitUnavailable { .. } => StabStatus::FitUnavailable,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => StabStatus::Io,
        Error::Overflow { .. } | Error::SamplerContract { .. } => StabStatus::Numeric,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status plus the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StabStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StabStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            StabStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            StabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Input(format!("{what} is not UTF-8"))))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn stab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `profile` is `linear`, `neg-linear` or `sine-perturbed`.
///
/// # Safety
/// `profile` must be a NUL-terminated string and `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_model_new(
    m: u32,
    n: u32,
    q: f64,
    eps_x: f64,
    eps_y: f64,
    profile: *const c_char,
    out_model: *mut *mut StabModel,
) -> StabStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        *slot = ptr::null_mut();
        let profile = Profile::from_name(str_arg(profile, "profile")?)?;
        *slot = boxed(StabModel(ModelParams::new(m, n, q, eps_x, eps_y, profile)?));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stab_model_free(model: *mut StabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Switches between the full drift and the pure Hamiltonian flow.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stab_model_set_pure_hamiltonian(model: *mut StabModel, pure: bool) -> StabStatus {
    guard(|| {
        let m = out(model, "model")?;
        m.0.variant = if pure { DriftVariant::PureHamiltonian } else { DriftVariant::Perturbed };
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `fx`, `fy` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_drift(model: *const StabModel, x: f64, y: f64, fx: *mut f64, fy: *mut f64) -> StabStatus {
    guard(|| {
        let d = drift_fields(&deref(model, "model")?.0, State::new(x, y))?;
        *out(fx, "fx")? = d.fx;
        *out(fy, "fy")? = d.fy;
        Ok(())
    })
}

/// Forward blow-up time of the Hamiltonian flow; `has_blowup` is false when the
/// solution from `(x, y)` is global. Fails for `m == n`.
///
/// # Safety
/// `model` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn stab_blowup_time(
    model: *const StabModel,
    x: f64,
    y: f64,
    has_blowup: *mut bool,
    t_star: *mut f64,
) -> StabStatus {
    guard(|| {
        let t = blowup_time(&deref(model, "model")?.0, State::new(x, y))?;
        *out(has_blowup, "has_blowup")? = t.is_some();
        *out(t_star, "t_star")? = t.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `out_ledger` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_ledger_derive(model: *const StabModel, out_ledger: *mut *mut StabLedger) -> StabStatus {
    guard(|| {
        let slot = out(out_ledger, "out_ledger")?;
        *slot = ptr::null_mut();
        *slot = boxed(StabLedger(derive_constants(&deref(model, "model")?.0)?));
        Ok(())
    })
}

/// # Safety
/// `ledger` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stab_ledger_free(ledger: *mut StabLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

fn ledger_value(k: &LyapunovConstants, key: &str) -> Result<f64, Fail> {
    Ok(match key {
        "a" => k.a,
        "rho" => k.rho,
        "b" => k.b,
        "k2" => k.k2,
        "k3" => k.k3,
        "c1" => k.c1,
        "c2" => k.c2,
        "c3" => k.c3,
        "C2" => k.cap2,
        "C3" => k.cap3,
        "b12" => k.b12,
        "b13" => k.b13,
        other => return Err(Error::InvalidParams(format!("unknown ledger constant '{other}'")).into()),
    })
}

/// Reads one named constant (`c1`, `k2`, `C3`, ...).
///
/// # Safety
/// `ledger` must be a live handle, `name` NUL-terminated, `value` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_ledger_get(ledger: *const StabLedger, name: *const c_char, value: *mut f64) -> StabStatus {
    guard(|| {
        let v = ledger_value(&deref(ledger, "ledger")?.0, str_arg(name, "name")?)?;
        *out(value, "value")? = v;
        Ok(())
    })
}

/// Replaces one named constant.
///
/// # Safety
/// `ledger` must be a live handle and `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn stab_ledger_set(ledger: *mut StabLedger, name: *const c_char, value: f64) -> StabStatus {
    guard(|| {
        let key = str_arg(name, "name")?;
        out(ledger, "ledger")?.0.set(key, value)?;
        Ok(())
    })
}

/// Whether every ledger invariant holds for `model`.
///
/// # Safety
/// Handles must be live and `holds` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_ledger_invariants_hold(
    ledger: *const StabLedger,
    model: *const StabModel,
    holds: *mut bool,
) -> StabStatus {
    guard(|| {
        let ok = deref(ledger, "ledger")?.0.all_invariants_hold(&deref(model, "model")?.0);
        *out(holds, "holds")? = ok;
        Ok(())
    })
}

/// Ledger as a JSON object; release with `stab_string_free`.
///
/// # Safety
/// `ledger` must be a live handle and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_ledger_to_json(ledger: *const StabLedger, json: *mut *mut c_char) -> StabStatus {
    guard(|| {
        let slot = out(json, "json")?;
        *slot = ptr::null_mut();
        let text = serde_json::to_string(&deref(ledger, "ledger")?.0).map_err(Error::from)?;
        *slot = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Value of the global Lyapunov function at `(x, y)`.
///
/// # Safety
/// Handles must be live and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_global_v(
    model: *const StabModel,
    ledger: *const StabLedger,
    x: f64,
    y: f64,
    value: *mut f64,
) -> StabStatus {
    guard(|| {
        let v = global_v(&deref(model, "model")?.0, &deref(ledger, "ledger")?.0, State::new(x, y))?;
        *out(value, "value")? = v.value;
        Ok(())
    })
}

/// Checks one drift inequality (`v1`, `v2`, `v3`, `v12`, `v13` or `V`) on
/// `samples` points of its region.
///
/// # Safety
/// Handles must be live, `function` NUL-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn stab_verify(
    model: *const StabModel,
    ledger: *const StabLedger,
    function: *const c_char,
    samples: usize,
    seed: u64,
    pass: *mut bool,
    max_violation: *mut f64,
) -> StabStatus {
    guard(|| {
        let name = str_arg(function, "function")?;
        let f = DriftFunction::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::InvalidParams(format!("unknown drift function '{name}'")))?;
        let sampler = RegionSampler::new(f.region(), samples, seed);
        let r = verify_drift_condition(&deref(model, "model")?.0, &deref(ledger, "ledger")?.0, f, &sampler)?;
        *out(pass, "pass")? = r.pass;
        *out(max_violation, "max_violation")? = r.max_violation;
        Ok(())
    })
}

/// One sample path of `steps` steps from `(x0, y0)`.
///
/// # Safety
/// `model` must be a live handle and `out_traj` writable.
#[no_mangle]
pub unsafe extern "C" fn stab_simulate(
    model: *const StabModel,
    scheme: StabScheme,
    dt: f64,
    steps: u64,
    seed: u64,
    x0: f64,
    y0: f64,
    out_traj: *mut *mut StabTrajectory,
) -> StabStatus {
    guard(|| {
        let slot = out(out_traj, "out_traj")?;
        *slot = ptr::null_mut();
        let scheme = match scheme {
            StabScheme::TamedEuler => Scheme::TamedEuler,
            StabScheme::Euler => Scheme::Euler,
        };
        let cfg = IntegratorConfig::new(scheme, dt, steps, seed);
        *slot = boxed(StabTrajectory(simulate_path(&deref(model, "model")?.0, &cfg, State::new(x0, y0))?));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stab_trajectory_free(traj: *mut StabTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded states; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stab_trajectory_len(traj: *const StabTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.states.len())
}

/// Whether the path was cut short by a non-finite state.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stab_trajectory_blowup(traj: *const StabTrajectory) -> bool {
    traj.as_ref().is_some_and(|t| t.0.blowup_flag)
}

/// # Safety
/// `traj` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn stab_trajectory_get(
    traj: *const StabTrajectory,
    index: usize,
    t: *mut f64,
    x: *mut f64,
    y: *mut f64,
) -> StabStatus {
    guard(|| {
        let tr = &deref(traj, "traj")?.0;
        let s = tr
            .states
            .get(index)
            .ok_or_else(|| Error::Input(format!("index {index} out of range for {} states", tr.states.len())))?;
        *out(t, "t")? = tr.times[index];
        *out(x, "x")? = s.x;
        *out(y, "y")? = s.y;
        Ok(())
    })
}

/// Exact empirical Wasserstein-1 distance between two clouds of `n` points
/// given as coordinate arrays.
///
/// # Safety
/// Each array must hold `n` readable values and `w1` be writable.
#[no_mangle]
pub unsafe extern "C" fn stab_wasserstein1(
    ax: *const f64,
    ay: *const f64,
    bx: *const f64,
    by: *const f64,
    n: usize,
    w1: *mut f64,
) -> StabStatus {
    guard(|| {
        let cloud = |xs: &[f64], ys: &[f64]| xs.iter().zip(ys).map(|(&x, &y)| State::new(x, y)).collect::<Vec<_>>();
        let a = cloud(slice(ax, n, "ax")?, slice(ay, n, "ay")?);
        let b = cloud(slice(bx, n, "bx")?, slice(by, n, "by")?);
        *out(w1, "w1")? = empirical_wasserstein1(&a, &b)?;
        Ok(())
    })
}

/// Least-squares fit of `d(t) ~ C exp(-c t)` on the positive entries.
///
/// # Safety
/// `times` and `values` must hold `n` readable values; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn stab_fit_exponential(
    times: *const f64,
    values: *const f64,
    n: usize,
    big_c: *mut f64,
    c: *mut f64,
    r2: *mut f64,
) -> StabStatus {
    guard(|| {
        let fit = fit_exponential(slice(times, n, "times")?, slice(values, n, "values")?)?;
        *out(big_c, "big_c")? = fit.big_c;
        *out(c, "c")? = fit.c;
        *out(r2, "r2")? = fit.r2;
        Ok(())
    })
}
