//! C ABI for the pilab policy-iteration workbench.
//!
//! The surface follows the usual opaque-handle pattern: instances and
//! iteration traces are heap objects behind `PilabMdp` / `PilabTrace`
//! pointers, every fallible call returns a [`PilabStatus`] code, and the
//! message for the most recent failure on the current thread is available
//! from [`pilab_last_error`]. All strings returned as `char*` are owned by
//! the caller and must be released with [`pilab_string_free`].
//!
//! The matching header is generated into `include/pilab.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pilab::engine::{default_max_iter, run_policy_iteration, SequentialRule, Strategy, Trace};
use pilab::instance::{builtin_instance, parse_mdp, random_mdp, serialize_mdp, GenSpec};
use pilab::mdp::{Mdp, Policy};
use pilab::oracle::DEFAULT_ENUM_CAP;
use pilab::scalar::{Rational, Scalar};
use pilab::verify::{parse_check_list, verify_instance};
use pilab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PilabStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    InvalidInstance = 3,
    NotWellDefined = 4,
    SingularSystem = 5,
    CapExceeded = 6,
    UnknownName = 7,
    IoError = 8,
    Panic = 9,
}

/// Improvement-selection strategy for [`pilab_solve`].
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PilabStrategy {
    Greedy = 0,
    Random = 1,
    SequentialLowest = 2,
    SequentialHighest = 3,
    SequentialRandom = 4,
}

/// Options for [`pilab_solve`].
#[repr(C)]
#[derive(Clone, Copy)]
pub struct PilabSolveOptions {
    pub strategy: PilabStrategy,
    /// Seed for randomized strategies; ignored by the deterministic ones.
    pub seed: u64,
    /// Run in double precision instead of exact rationals.
    pub use_float: bool,
    /// Iteration cap; 0 selects the default (twice the policy count,
    /// at most 10^7).
    pub max_iter: u64,
}

/// Opaque instance handle.
pub struct PilabMdp {
    inner: Mdp<Rational>,
}

enum TraceData {
    Exact(Trace<Rational>),
    Float(Trace<f64>),
}

/// Opaque iteration-trace handle.
pub struct PilabTrace {
    data: TraceData,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> PilabStatus {
    match err {
        Error::InvalidArgument(_)
        | Error::EmptySelection
        | Error::UnsupportedStrategy(_)
        | Error::ExactRequired(_)
        | Error::InstanceMismatch(_) => PilabStatus::InvalidArgument,
        Error::InvalidInstance(_) => PilabStatus::InvalidInstance,
        Error::Parse { .. } => PilabStatus::ParseError,
        Error::NotWellDefined => PilabStatus::NotWellDefined,
        Error::SingularSystem => PilabStatus::SingularSystem,
        Error::CapExceeded(_) => PilabStatus::CapExceeded,
        Error::UnknownBuiltin(_) | Error::Reserved(_) => PilabStatus::UnknownName,
        Error::Io(_) => PilabStatus::IoError,
    }
}

fn fail(err: Error) -> PilabStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Runs a fallible body, translating errors and panics into status codes.
fn guarded(body: impl FnOnce() -> Result<(), Error>) -> PilabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            clear_error();
            PilabStatus::Ok
        }
        Ok(Err(err)) => fail(err),
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in pilab".to_string());
            set_error(&message);
            PilabStatus::Panic
        }
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Error> {
    if ptr.is_null() {
        return Err(Error::InvalidArgument(format!("{what} is null")));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| Error::InvalidArgument(format!("{what} is not valid UTF-8")))
}

fn export_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

/// Version of the underlying library as a static string; do not free.
#[no_mangle]
pub extern "C" fn pilab_version() -> *const c_char {
    concat!("pilab ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or null when the last
/// call succeeded. The caller owns the returned string.
#[no_mangle]
pub extern "C" fn pilab_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a pilab function, or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe {
            let _ = CString::from_raw(s);
        }
    }
}

unsafe fn write_mdp(out: *mut *mut PilabMdp, mdp: Mdp<Rational>) -> Result<(), Error> {
    if out.is_null() {
        return Err(Error::InvalidArgument("output pointer is null".to_string()));
    }
    unsafe {
        *out = Box::into_raw(Box::new(PilabMdp { inner: mdp }));
    }
    Ok(())
}

/// Parses an instance from its text form.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pilab_mdp_parse(
    text: *const c_char,
    out: *mut *mut PilabMdp,
) -> PilabStatus {
    guarded(|| {
        let text = unsafe { cstr_arg(text, "text") }?;
        let mdp = parse_mdp(text)?;
        unsafe { write_mdp(out, mdp) }
    })
}

/// Creates a built-in instance (`M2`, `M2c`).
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pilab_mdp_builtin(
    name: *const c_char,
    out: *mut *mut PilabMdp,
) -> PilabStatus {
    guarded(|| {
        let name = unsafe { cstr_arg(name, "name") }?;
        let mdp = builtin_instance(name)?;
        unsafe { write_mdp(out, mdp) }
    })
}

/// Generates a seeded random instance. Rewards are `num/reward_den` with
/// `num` uniform in `reward_lo..=reward_hi`; `density` is the fraction of
/// nonzero transitions per row.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pilab_mdp_generate(
    n: usize,
    k: usize,
    seed: u64,
    gamma_num: i64,
    gamma_den: i64,
    density: f64,
    reward_lo: i64,
    reward_hi: i64,
    reward_den: i64,
    out: *mut *mut PilabMdp,
) -> PilabStatus {
    guarded(|| {
        if gamma_den == 0 {
            return Err(Error::InvalidArgument(
                "gamma denominator is zero".to_string(),
            ));
        }
        let spec = GenSpec {
            gamma: Rational::new(gamma_num, gamma_den),
            density,
            reward_lo,
            reward_hi,
            reward_den,
            ..GenSpec::new(n, k, seed)
        };
        let mdp = random_mdp(&spec)?;
        unsafe { write_mdp(out, mdp) }
    })
}

/// Releases an instance handle.
///
/// # Safety
/// `mdp` must be a pointer from a pilab constructor, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_mdp_free(mdp: *mut PilabMdp) {
    if !mdp.is_null() {
        unsafe {
            let _ = Box::from_raw(mdp);
        }
    }
}

/// Number of states; 0 for a null handle.
///
/// # Safety
/// `mdp` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_mdp_num_states(mdp: *const PilabMdp) -> usize {
    unsafe { mdp.as_ref() }.map_or(0, |m| m.inner.num_states())
}

/// Number of actions; 0 for a null handle.
///
/// # Safety
/// `mdp` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_mdp_num_actions(mdp: *const PilabMdp) -> usize {
    unsafe { mdp.as_ref() }.map_or(0, |m| m.inner.num_actions())
}

/// Checks the instance invariants. Returns `Ok` for a valid instance;
/// otherwise `InvalidInstance`, with the violation list in the last error.
///
/// # Safety
/// `mdp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pilab_mdp_validate(mdp: *const PilabMdp) -> PilabStatus {
    guarded(|| {
        let handle = unsafe { mdp.as_ref() }
            .ok_or_else(|| Error::InvalidArgument("mdp is null".to_string()))?;
        handle.inner.ensure_valid()
    })
}

/// Serializes the instance to its text form.
///
/// # Safety
/// `mdp` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pilab_mdp_to_text(
    mdp: *const PilabMdp,
    out: *mut *mut c_char,
) -> PilabStatus {
    guarded(|| {
        let handle = unsafe { mdp.as_ref() }
            .ok_or_else(|| Error::InvalidArgument("mdp is null".to_string()))?;
        if out.is_null() {
            return Err(Error::InvalidArgument("output pointer is null".to_string()));
        }
        unsafe {
            *out = export_string(serialize_mdp(&handle.inner));
        }
        Ok(())
    })
}

fn to_strategy(options: &PilabSolveOptions) -> Strategy {
    match options.strategy {
        PilabStrategy::Greedy => Strategy::Greedy,
        PilabStrategy::Random => Strategy::Random { seed: options.seed },
        PilabStrategy::SequentialLowest => Strategy::Sequential {
            rule: SequentialRule::LowestState,
        },
        PilabStrategy::SequentialHighest => Strategy::Sequential {
            rule: SequentialRule::HighestState,
        },
        PilabStrategy::SequentialRandom => Strategy::Sequential {
            rule: SequentialRule::RandomSingleton { seed: options.seed },
        },
    }
}

/// Runs policy iteration. `start_actions` may be null for the all-zeros
/// start policy; otherwise it must hold `start_len == n` action indices.
///
/// # Safety
/// `mdp` must be a live handle, `options` and `out` valid pointers, and
/// `start_actions` either null or valid for `start_len` reads.
#[no_mangle]
pub unsafe extern "C" fn pilab_solve(
    mdp: *const PilabMdp,
    options: *const PilabSolveOptions,
    start_actions: *const u32,
    start_len: usize,
    out: *mut *mut PilabTrace,
) -> PilabStatus {
    guarded(|| {
        let handle = unsafe { mdp.as_ref() }
            .ok_or_else(|| Error::InvalidArgument("mdp is null".to_string()))?;
        let options = unsafe { options.as_ref() }
            .ok_or_else(|| Error::InvalidArgument("options is null".to_string()))?;
        if out.is_null() {
            return Err(Error::InvalidArgument("output pointer is null".to_string()));
        }
        let n = handle.inner.num_states();
        let start = if start_actions.is_null() {
            Policy::zero(n)
        } else {
            if start_len != n {
                return Err(Error::InvalidArgument(format!(
                    "start policy lists {start_len} actions for {n} states"
                )));
            }
            let slice = unsafe { std::slice::from_raw_parts(start_actions, start_len) };
            Policy::new(slice.iter().map(|&a| a as usize).collect())
        };
        let strategy = to_strategy(options);
        let max_iter = if options.max_iter == 0 {
            default_max_iter(n, handle.inner.num_actions())
        } else {
            options.max_iter
        };
        let data = if options.use_float {
            TraceData::Float(run_policy_iteration(
                &handle.inner.to_float(),
                &start,
                strategy,
                max_iter,
            )?)
        } else {
            TraceData::Exact(run_policy_iteration(
                &handle.inner,
                &start,
                strategy,
                max_iter,
            )?)
        };
        unsafe {
            *out = Box::into_raw(Box::new(PilabTrace { data }));
        }
        Ok(())
    })
}

/// Releases a trace handle.
///
/// # Safety
/// `trace` must be a pointer from [`pilab_solve`], not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_free(trace: *mut PilabTrace) {
    if !trace.is_null() {
        unsafe {
            let _ = Box::from_raw(trace);
        }
    }
}

unsafe fn trace_ref<'a>(trace: *const PilabTrace) -> Option<&'a TraceData> {
    unsafe { trace.as_ref() }.map(|t| &t.data)
}

/// Number of improvement iterations performed; 0 for a null handle.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_iterations(trace: *const PilabTrace) -> u64 {
    match unsafe { trace_ref(trace) } {
        Some(TraceData::Exact(t)) => t.iterations() as u64,
        Some(TraceData::Float(t)) => t.iterations() as u64,
        None => 0,
    }
}

/// Whether the run stopped at an optimal policy (rather than the cap).
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_terminated(trace: *const PilabTrace) -> bool {
    match unsafe { trace_ref(trace) } {
        Some(TraceData::Exact(t)) => t.terminated,
        Some(TraceData::Float(t)) => t.terminated,
        None => false,
    }
}

/// Total number of discarded empty random draws.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_resamples(trace: *const PilabTrace) -> u64 {
    match unsafe { trace_ref(trace) } {
        Some(TraceData::Exact(t)) => t.total_resamples(),
        Some(TraceData::Float(t)) => t.total_resamples(),
        None => 0,
    }
}

/// Final action at `state`, or -1 when out of range.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_final_action(trace: *const PilabTrace, state: usize) -> i64 {
    let action = match unsafe { trace_ref(trace) } {
        Some(TraceData::Exact(t)) if state < t.num_states => Some(t.final_policy.action(state)),
        Some(TraceData::Float(t)) if state < t.num_states => Some(t.final_policy.action(state)),
        _ => None,
    };
    action.map_or(-1, |a| a as i64)
}

/// Final value at `state` as a double (exact values are converted), or NaN
/// when out of range.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_final_value(trace: *const PilabTrace, state: usize) -> f64 {
    match unsafe { trace_ref(trace) } {
        Some(TraceData::Exact(t)) if state < t.num_states => t.final_value.get(state).to_f64(),
        Some(TraceData::Float(t)) if state < t.num_states => *t.final_value.get(state),
        _ => f64::NAN,
    }
}

/// Final value at `state` in text form (`num/den` in exact mode).
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_final_value_text(
    trace: *const PilabTrace,
    state: usize,
    out: *mut *mut c_char,
) -> PilabStatus {
    guarded(|| {
        if out.is_null() {
            return Err(Error::InvalidArgument("output pointer is null".to_string()));
        }
        let text = match unsafe { trace_ref(trace) } {
            Some(TraceData::Exact(t)) if state < t.num_states => {
                t.final_value.get(state).to_string()
            }
            Some(TraceData::Float(t)) if state < t.num_states => {
                t.final_value.get(state).to_string()
            }
            Some(_) => {
                return Err(Error::InvalidArgument(format!(
                    "state {state} is out of range"
                )))
            }
            None => return Err(Error::InvalidArgument("trace is null".to_string())),
        };
        unsafe {
            *out = export_string(text);
        }
        Ok(())
    })
}

/// The full line-oriented trace log.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pilab_trace_to_text(
    trace: *const PilabTrace,
    out: *mut *mut c_char,
) -> PilabStatus {
    guarded(|| {
        if out.is_null() {
            return Err(Error::InvalidArgument("output pointer is null".to_string()));
        }
        let text = match unsafe { trace_ref(trace) } {
            Some(TraceData::Exact(t)) => t.to_text(),
            Some(TraceData::Float(t)) => t.to_text(),
            None => return Err(Error::InvalidArgument("trace is null".to_string())),
        };
        unsafe {
            *out = export_string(text);
        }
        Ok(())
    })
}

/// Evaluates the closed-form iteration bound for a strategy name
/// (`greedy`, `greedy-multi`, `random`, `random-multi`, `sequential`,
/// `trivial`).
///
/// # Safety
/// `strategy` must be a valid NUL-terminated string and `out_value` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pilab_eval_bound(
    n: usize,
    k: usize,
    strategy: *const c_char,
    out_value: *mut f64,
) -> PilabStatus {
    guarded(|| {
        let strategy = unsafe { cstr_arg(strategy, "strategy") }?;
        if out_value.is_null() {
            return Err(Error::InvalidArgument("output pointer is null".to_string()));
        }
        let value = pilab::bounds::eval_bounds(n, k, strategy)?;
        unsafe {
            *out_value = value;
        }
        Ok(())
    })
}

/// Runs the structural checks (`checks` is a comma list or `all`) on one
/// instance, including its greedy and seeded random traces. Writes the
/// report text to `out_report` and the violation count to
/// `out_violations`; the status is `Ok` whenever the checks ran, even if
/// violations were found.
///
/// # Safety
/// `mdp` must be a live handle, `checks` a valid NUL-terminated string, and
/// `out_report` / `out_violations` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pilab_verify_instance(
    mdp: *const PilabMdp,
    checks: *const c_char,
    cap: u64,
    trace_seed: u64,
    out_report: *mut *mut c_char,
    out_violations: *mut u64,
) -> PilabStatus {
    guarded(|| {
        let handle = unsafe { mdp.as_ref() }
            .ok_or_else(|| Error::InvalidArgument("mdp is null".to_string()))?;
        let checks = unsafe { cstr_arg(checks, "checks") }?;
        if out_report.is_null() || out_violations.is_null() {
            return Err(Error::InvalidArgument("output pointer is null".to_string()));
        }
        let cap = if cap == 0 { DEFAULT_ENUM_CAP } else { cap };
        let selection = parse_check_list(checks, handle.inner.num_actions())?;
        let outcome = verify_instance(&handle.inner, &selection, cap, 0, trace_seed)?;
        unsafe {
            *out_violations = outcome.total_violations() as u64;
            *out_report = export_string(outcome.to_text());
        }
        Ok(())
    })
}
