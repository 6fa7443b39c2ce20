//! C ABI over the `isosoliton` crate.
//!
//! Parameters and traces are opaque heap handles created by `iso_*_new` and
//! released by the matching `iso_*_free`. Every fallible call returns an
//! [`IsoStatus`]; on failure a message is kept per thread and can be copied
//! out with [`iso_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isosoliton::classifier::{classify, DEFAULT_CROSSING_TOL};
use isosoliton::integrator::endpoint_vprime_formula;
use isosoliton::phase::{psi_rhs, sign_region};
use isosoliton::{
    endpoint_seed, maximal_trace, Direction, Error, EventKind, IntegratorConfig, PhasePoint, SignVerdict,
    SolitonParams, Trace,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    Domain = 3,
    Singular = 4,
    Precondition = 5,
    NoSignChange = 6,
    IncompleteTrace = 7,
    UnsupportedK = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// How one side of a trace ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoEventKind {
    RegularEndpoint = 0,
    BlowUpPlus = 1,
    BlowUpMinus = 2,
    BudgetExhausted = 3,
}

/// Opaque parameter handle.
pub struct IsoParams(SolitonParams);

/// Opaque trace handle.
pub struct IsoTrace(Trace);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> IsoStatus {
    match e {
        Error::InvalidParams(_) => IsoStatus::InvalidParams,
        Error::Domain(_) => IsoStatus::Domain,
        Error::Singular(_) => IsoStatus::Singular,
        Error::Precondition(_) => IsoStatus::Precondition,
        Error::NoSignChange { .. } => IsoStatus::NoSignChange,
        Error::IncompleteTrace(_) => IsoStatus::IncompleteTrace,
        Error::UnsupportedK(_) => IsoStatus::UnsupportedK,
        Error::Io(_) => IsoStatus::Io,
    }
}

fn fail(status: IsoStatus, msg: impl Into<String>) -> IsoStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), IsoStatus>) -> IsoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            IsoStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(IsoStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: isosoliton::Result<T>) -> Result<T, IsoStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, IsoStatus> {
    p.as_ref().ok_or_else(|| fail(IsoStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, IsoStatus> {
    p.as_mut().ok_or_else(|| fail(IsoStatus::NullPointer, format!("{what} is null")))
}

fn side(which: c_int) -> Result<Direction, IsoStatus> {
    match which {
        -1 => Ok(Direction::Left),
        1 => Ok(Direction::Right),
        _ => Err(fail(IsoStatus::Domain, format!("side must be -1 or 1, got {which}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn iso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn iso_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a parameter handle for `(k, n, m1, m2)`.
///
/// # Safety
/// `out_params` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iso_params_new(k: u32, n: u32, m1: u32, m2: u32, out_params: *mut *mut IsoParams) -> IsoStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        *slot = ptr::null_mut();
        let p = lift(SolitonParams::new(k, n, m1, m2))?;
        *slot = Box::into_raw(Box::new(IsoParams(p)));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or come from [`iso_params_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn iso_params_free(params: *mut IsoParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// The constant `R` of a parameter set.
///
/// # Safety
/// `params` and `out_r` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_params_r(params: *const IsoParams, out_r: *mut f64) -> IsoStatus {
    guard(|| {
        let p = deref(params, "params")?;
        *out(out_r, "out_r")? = p.0.r_const();
        Ok(())
    })
}

/// `ψ'(r)` of the phase equation.
///
/// # Safety
/// `params` and `out_value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_psi_rhs(params: *const IsoParams, r: f64, psi: f64, out_value: *mut f64) -> IsoStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_value, "out_value")?;
        *slot = lift(psi_rhs(&p.0, r, psi))?;
        Ok(())
    })
}

/// Sign of `ψ'` from the region test: `1`, `0` or `-1`.
///
/// # Safety
/// `params` and `out_sign` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_sign_region(params: *const IsoParams, r: f64, psi: f64, out_sign: *mut c_int) -> IsoStatus {
    guard(|| {
        let p = deref(params, "params")?;
        *out(out_sign, "out_sign")? = match sign_region(&p.0, r, psi) {
            SignVerdict::Positive => 1,
            SignVerdict::Zero => 0,
            SignVerdict::Negative => -1,
        };
        Ok(())
    })
}

/// Closed form `V'(-1)` (`side = -1`) or `V'(1)` (`side = 1`).
///
/// # Safety
/// `params` and `out_value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_endpoint_vprime(params: *const IsoParams, which: c_int, out_value: *mut f64) -> IsoStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let dir = side(which)?;
        *out(out_value, "out_value")? = endpoint_vprime_formula(&p.0, dir);
        Ok(())
    })
}

fn config(tol: f64) -> Result<IntegratorConfig, IsoStatus> {
    let cfg = IntegratorConfig::default();
    if tol == 0.0 {
        return Ok(cfg);
    }
    let c = cfg.with_tol(tol);
    lift(c.validate())?;
    Ok(c)
}

/// Integrates the maximal solution through `(r0, psi0)`. `tol = 0` selects
/// the default tolerance.
///
/// # Safety
/// `params` and `out_trace` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_new(
    params: *const IsoParams,
    r0: f64,
    psi0: f64,
    tol: f64,
    out_trace: *mut *mut IsoTrace,
) -> IsoStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_trace, "out_trace")?;
        *slot = ptr::null_mut();
        let cfg = config(tol)?;
        let seed = lift(PhasePoint::new(r0, psi0))?;
        let t = lift(maximal_trace(&p.0, seed, &cfg))?;
        *slot = Box::into_raw(Box::new(IsoTrace(t)));
        Ok(())
    })
}

/// Integrates the solution leaving the regular endpoint `side` (`-1` or `1`).
/// `tol = 0` selects the default tolerance.
///
/// # Safety
/// `params` and `out_trace` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_from_endpoint(
    params: *const IsoParams,
    which: c_int,
    tol: f64,
    out_trace: *mut *mut IsoTrace,
) -> IsoStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_trace, "out_trace")?;
        *slot = ptr::null_mut();
        let cfg = config(tol)?;
        let seed = lift(endpoint_seed(&p.0, side(which)?, cfg.epsilon))?;
        let t = lift(maximal_trace(&p.0, seed, &cfg))?;
        *slot = Box::into_raw(Box::new(IsoTrace(t)));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or come from an `iso_trace_*` constructor and not be
/// freed twice.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_free(trace: *mut IsoTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of stored samples, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_len(trace: *const IsoTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.samples.len())
}

/// Copies samples into caller arrays of length `cap`. Any of the four output
/// arrays may be null. Fails with `BufferTooSmall` if `cap` is below
/// [`iso_trace_len`].
///
/// # Safety
/// Non-null arrays must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_samples(
    trace: *const IsoTrace,
    r: *mut f64,
    psi: *mut f64,
    vprime: *mut f64,
    v: *mut f64,
    cap: usize,
) -> IsoStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let s = &t.0.samples;
        if cap < s.len() {
            return Err(fail(IsoStatus::BufferTooSmall, format!("need {} samples, got {cap}", s.len())));
        }
        for (i, x) in s.iter().enumerate() {
            for (dst, val) in [(r, x.r), (psi, x.psi), (vprime, x.vprime), (v, x.v)] {
                if !dst.is_null() {
                    *dst.add(i) = val;
                }
            }
        }
        Ok(())
    })
}

/// Termination on `side` (`-1` left, `1` right): event kind and location.
///
/// # Safety
/// `trace`, `out_kind` and `out_location` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_event(
    trace: *const IsoTrace,
    which: c_int,
    out_kind: *mut IsoEventKind,
    out_location: *mut f64,
) -> IsoStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let ev = match side(which)? {
            Direction::Left => &t.0.left_event,
            Direction::Right => &t.0.right_event,
        };
        *out(out_kind, "out_kind")? = match ev.kind {
            EventKind::RegularEndpoint => IsoEventKind::RegularEndpoint,
            EventKind::BlowUpPlus => IsoEventKind::BlowUpPlus,
            EventKind::BlowUpMinus => IsoEventKind::BlowUpMinus,
            EventKind::BudgetExhausted => IsoEventKind::BudgetExhausted,
        };
        *out(out_location, "out_location")? = ev.location;
        Ok(())
    })
}

/// `ψ` at `r` by dense interpolation inside the trace span.
///
/// # Safety
/// `trace` and `out_psi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_psi_at(trace: *const IsoTrace, r: f64, out_psi: *mut f64) -> IsoStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let slot = out(out_psi, "out_psi")?;
        *slot = t
            .0
            .psi_at(r)
            .ok_or_else(|| fail(IsoStatus::Domain, format!("r = {r} outside the trace")))?;
        Ok(())
    })
}

/// Shape type of a complete trace: `1..=7` for types I to VII, `0` for an
/// unlisted shape. `crossing_tol <= 0` selects the default.
///
/// # Safety
/// `trace` and `out_type` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iso_trace_classify(trace: *const IsoTrace, crossing_tol: f64, out_type: *mut c_int) -> IsoStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let slot = out(out_type, "out_type")?;
        let tol = if crossing_tol > 0.0 { crossing_tol } else { DEFAULT_CROSSING_TOL };
        let shape = lift(classify(&t.0, tol))?;
        *slot = shape.index.map_or(0, |i| i as c_int + 1);
        Ok(())
    })
}
