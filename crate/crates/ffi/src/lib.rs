//! C ABI for fountcast.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free`. Every fallible call returns an [`FcStatus`] and, on
//! failure, leaves a message for [`fc_last_error`] on the calling thread.
//! Panics are caught at the boundary and reported as [`FcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fountcast::alloc::{Allocation, AllocationProblem, Solver};
use fountcast::config::{Scenario, ScenarioFile};
use fountcast::outage::{self, CodeParams};
use fountcast::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad scenario, bad argument or an index out of range.
    InvalidArgument = 3,
    /// No allocation meets the outage targets within the budget. The
    /// allocation handle is still returned.
    Infeasible = 4,
    Numeric = 5,
    Panic = 6,
}

/// Solver selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcSolver {
    Convex = 0,
    SimplifiedGd = 1,
    Exhaustive = 2,
    Eep = 3,
    Dynamic = 4,
}

impl From<FcSolver> for Solver {
    fn from(s: FcSolver) -> Self {
        match s {
            FcSolver::Convex => Solver::Convex,
            FcSolver::SimplifiedGd => Solver::SimplifiedGd,
            FcSolver::Exhaustive => Solver::Exhaustive,
            FcSolver::Eep => Solver::Eep,
            FcSolver::Dynamic => Solver::Dynamic,
        }
    }
}

/// A parsed and resolved scenario.
pub struct FcScenario {
    inner: Scenario,
}

/// A solved allocation and the problem it was solved for.
pub struct FcAllocation {
    problem: AllocationProblem,
    inner: Allocation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    // interior NULs would truncate the message on the C side anyway
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> FcStatus {
    match e {
        Error::Numeric(_) | Error::ExactTooLarge { .. } => FcStatus::Numeric,
        _ => FcStatus::InvalidArgument,
    }
}

fn fail(status: FcStatus, msg: impl Into<String>) -> FcStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> FcStatus) -> FcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(FcStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! try_fc {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail(status_of(&e), e.to_string()),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(FcStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message of the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn fc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fc_scenario_from_json(json: *const c_char, out: *mut *mut FcScenario) -> FcStatus {
    guard(|| {
        non_null!(json, out);
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(FcStatus::InvalidUtf8, "scenario is not valid UTF-8");
        };
        let file = try_fc!(ScenarioFile::from_json(text));
        let inner = try_fc!(file.resolve());
        *out = Box::into_raw(Box::new(FcScenario { inner }));
        FcStatus::Ok
    })
}

/// # Safety
/// `s` must come from [`fc_scenario_from_json`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fc_scenario_free(s: *mut FcScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Service bandwidth of the scenario in symbols.
///
/// # Safety
/// `s` must be a live scenario handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_scenario_n_max(s: *const FcScenario, out: *mut u64) -> FcStatus {
    guard(|| {
        non_null!(s, out);
        *out = (*s).inner.n_max;
        FcStatus::Ok
    })
}

/// Solve the scenario. `n_max` of 0 uses the scenario's bandwidth.
///
/// On [`FcStatus::Ok`] and [`FcStatus::Infeasible`] a handle is written to
/// `out`; otherwise `out` is set to null.
///
/// # Safety
/// `s` must be a live scenario handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_solve(
    s: *const FcScenario,
    solver: FcSolver,
    n_max: u64,
    out: *mut *mut FcAllocation,
) -> FcStatus {
    guard(|| {
        non_null!(s, out);
        *out = ptr::null_mut();
        let n = (n_max > 0).then_some(n_max);
        let (problem, inner) = try_fc!((*s).inner.solve(solver.into(), n));
        let feasible = inner.feasible;
        let why = inner.infeasibility.map(|i| {
            format!(
                "layer {} cannot be served; the base layer alone needs n_max >= {}",
                i.failed_layer + 1,
                i.min_base_n_max
            )
        });
        *out = Box::into_raw(Box::new(FcAllocation { problem, inner }));
        if feasible {
            FcStatus::Ok
        } else {
            fail(FcStatus::Infeasible, why.unwrap_or_else(|| "no feasible allocation".into()))
        }
    })
}

/// # Safety
/// `a` must come from [`fc_solve`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fc_allocation_free(a: *mut FcAllocation) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Number of layers.
///
/// # Safety
/// `a` must be a live allocation handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_allocation_layers(a: *const FcAllocation, out: *mut usize) -> FcStatus {
    guard(|| {
        non_null!(a, out);
        *out = (*a).inner.deltas.len();
        FcStatus::Ok
    })
}

/// Minimum reception ratio (MNRC) and symbol count of layer `layer` (0-based).
///
/// # Safety
/// `a` must be a live allocation handle; `delta` and `symbols` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_allocation_layer(
    a: *const FcAllocation,
    layer: usize,
    delta: *mut f64,
    symbols: *mut u64,
) -> FcStatus {
    guard(|| {
        non_null!(a, delta, symbols);
        let inner = &(*a).inner;
        if layer >= inner.deltas.len() {
            return fail(
                FcStatus::InvalidArgument,
                format!("layer {layer} out of range ({} layers)", inner.deltas.len()),
            );
        }
        *delta = inner.deltas[layer];
        *symbols = inner.symbols[layer];
        FcStatus::Ok
    })
}

/// Expected utility, the utility ceiling, total symbols and feasibility.
///
/// # Safety
/// `a` must be a live allocation handle and every output writable.
#[no_mangle]
pub unsafe extern "C" fn fc_allocation_summary(
    a: *const FcAllocation,
    utility: *mut f64,
    u_max: *mut f64,
    total_symbols: *mut u64,
    feasible: *mut bool,
) -> FcStatus {
    guard(|| {
        non_null!(a, utility, u_max, total_symbols, feasible);
        let FcAllocation { problem, inner } = &*a;
        *utility = inner.utility;
        *u_max = problem.u_max();
        *total_symbols = inner.total_symbols();
        *feasible = inner.feasible;
        FcStatus::Ok
    })
}

/// Closed-form outage probability of a block of `s` source symbols sent as
/// `n` encoded symbols to a client with reception ratio `delta`, with the
/// default code parameters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_outage_model(s: u64, n: u64, delta: f64, out: *mut f64) -> FcStatus {
    guard(|| {
        non_null!(out);
        *out = try_fc!(outage::outage_model(s, n, delta, &CodeParams::default()));
        FcStatus::Ok
    })
}

/// Fewest encoded symbols that keep the outage of `s` source symbols at or
/// below `p_out` for reception ratio `delta`, with the default code parameters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_required_symbols(s: u64, delta: f64, p_out: f64, out: *mut u64) -> FcStatus {
    guard(|| {
        non_null!(out);
        *out = try_fc!(outage::required_symbols_full(s, delta, p_out, &CodeParams::default()));
        FcStatus::Ok
    })
}
