//! C interface to `opfgap`.
//!
//! Networks and solve outcomes are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call
//! returns an [`OpfgapError`]; on failure [`opfgap_last_error`] describes
//! the problem. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use opfgap::case_io::{parse_case, write_case};
use opfgap::formulation::Model;
use opfgap::ipm::{solve, SolveOutcome, SolveStatus, SolverOptions};
use opfgap::network::Network;
use opfgap::sweep::compute_gap;
use opfgap::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpfgapError {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    UndefinedGap = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpfgapSolveStatus {
    Optimal = 0,
    LocallyInfeasible = 1,
    IterationLimit = 2,
    TimeLimit = 3,
    NumericFailure = 4,
}

impl From<SolveStatus> for OpfgapSolveStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => OpfgapSolveStatus::Optimal,
            SolveStatus::LocallyInfeasible => OpfgapSolveStatus::LocallyInfeasible,
            SolveStatus::IterationLimit => OpfgapSolveStatus::IterationLimit,
            SolveStatus::TimeLimit => OpfgapSolveStatus::TimeLimit,
            SolveStatus::NumericFailure => OpfgapSolveStatus::NumericFailure,
        }
    }
}

/// Parsed power network.
pub struct OpfgapNetwork {
    net: Network,
}

/// Result of one solve.
pub struct OpfgapOutcome {
    outcome: SolveOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (OpfgapError, String);

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn from_core(e: Error) -> Failure {
    let code = match e {
        Error::Parse { .. } | Error::MissingSection(_) | Error::Csv { .. } => OpfgapError::Parse,
        Error::UndefinedGap(_) => OpfgapError::UndefinedGap,
        _ => OpfgapError::InvalidInput,
    };
    (code, e.to_string())
}

fn null(what: &str) -> Failure {
    (OpfgapError::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OpfgapError {
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err((OpfgapError::Panic, format!("internal panic: {msg}")))
    });
    match res {
        Ok(()) => {
            set_last_error("");
            OpfgapError::Ok
        }
        Err((code, msg)) => {
            set_last_error(&msg);
            code
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (OpfgapError::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn opfgap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opfgap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses MATPOWER case text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfgap_network_parse(text: *const c_char, out: *mut *mut OpfgapNetwork) -> OpfgapError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let net = parse_case(text).map_err(from_core)?;
        *out = Box::into_raw(Box::new(OpfgapNetwork { net }));
        Ok(())
    })
}

/// Loads one of the bundled cases (`case9`, `case14`, `case30`, `case57`, `case118`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfgap_network_bundled(name: *const c_char, out: *mut *mut OpfgapNetwork) -> OpfgapError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let text = opfgap::fixtures::by_name(name)
            .ok_or_else(|| (OpfgapError::InvalidInput, format!("no bundled case '{name}'")))?;
        let net = parse_case(text).map_err(from_core)?;
        *out = Box::into_raw(Box::new(OpfgapNetwork { net }));
        Ok(())
    })
}

/// Releases a network. Null is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opfgap_network_free(net: *mut OpfgapNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of buses, 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opfgap_network_bus_count(net: *const OpfgapNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.net.buses().len())
}

/// Number of generators, 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opfgap_network_generator_count(net: *const OpfgapNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.net.generators().len())
}

/// Serialises the network as case text. Free the result with
/// [`opfgap_string_free`].
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfgap_network_write(net: *const OpfgapNetwork, out: *mut *mut c_char) -> OpfgapError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        let text = CString::new(write_case(&net.net))
            .map_err(|_| (OpfgapError::InvalidInput, "case text contains NUL".to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opfgap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds and solves `model` (`ac`, `qc`, `socp`, `sdp2`, `sdp3`) with every
/// load scaled by `t`. A `tolerance` of 0 or less and a `max_iterations`
/// of 0 select the defaults. Non-convergence is reported through the
/// outcome status, not the return code.
///
/// # Safety
/// `net` must be a live handle, `model` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfgap_solve(
    net: *const OpfgapNetwork,
    model: *const c_char,
    t: f64,
    tolerance: f64,
    max_iterations: usize,
    out: *mut *mut OpfgapOutcome,
) -> OpfgapError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let net = &net.as_ref().ok_or_else(|| null("net"))?.net;
        let model: Model = str_arg(model, "model")?.parse().map_err(from_core)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err((OpfgapError::InvalidInput, format!("load factor must be positive, got {t}")));
        }
        let mut opts = SolverOptions::default();
        if tolerance > 0.0 {
            opts.kkt_tolerance = tolerance;
        }
        if max_iterations > 0 {
            opts.max_iterations = max_iterations;
        }
        let f = model.build(net, t, &net.scalable_loads()).map_err(from_core)?;
        let outcome = solve(&f.problem, &opts).map_err(from_core)?;
        *out = Box::into_raw(Box::new(OpfgapOutcome { outcome }));
        Ok(())
    })
}

/// Releases an outcome. Null is ignored.
///
/// # Safety
/// `o` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opfgap_outcome_free(o: *mut OpfgapOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// Solver status; `NumericFailure` for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opfgap_outcome_status(o: *const OpfgapOutcome) -> OpfgapSolveStatus {
    o.as_ref()
        .map_or(OpfgapSolveStatus::NumericFailure, |o| o.outcome.status.into())
}

/// Objective at the returned point; NaN for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opfgap_outcome_objective(o: *const OpfgapOutcome) -> f64 {
    o.as_ref().map_or(f64::NAN, |o| o.outcome.objective)
}

/// Iterations used; 0 for a null handle.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opfgap_outcome_iterations(o: *const OpfgapOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.outcome.iterations)
}

/// Optimality gap in percent, `100·(1 - relax_cost/ac_cost)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opfgap_compute_gap(ac_cost: f64, relax_cost: f64, out: *mut f64) -> OpfgapError {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = compute_gap(ac_cost, relax_cost).map_err(from_core)?;
        Ok(())
    })
}
