//! C interface: parse a task, decide feasibility, synthesize and simulate a
//! protocol, and query resource counts.
//!
//! Every fallible call returns an [`StqStatus`]. On failure the message is kept
//! per thread and can be read with [`stq_last_error`]. Strings handed out by
//! the library must be released with [`stq_string_free`]; tasks with
//! [`stq_task_free`].

use spacetime_tasks::engine::{execute, validate_plan, Scenario};
use spacetime_tasks::feasibility::check_task;
use spacetime_tasks::model::{parse_task, CallPattern, TaskSpec};
use spacetime_tasks::planner::{plan_task, scheme_cost};
use spacetime_tasks::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidTask = 4,
    Refused = 5,
    Unsupported = 6,
    Audit = 7,
    Failed = 8,
    Panic = 9,
}

/// Opaque parsed task.
pub struct StqTask {
    spec: TaskSpec,
}

/// Resource counts for the edge code with XOR-shared pad keys.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct StqCost {
    pub quantum_shares: usize,
    pub qubits: usize,
    pub xor_bits: usize,
    pub threshold_bits_estimate: f64,
}

/// Metrics of one simulated scenario. Absent values are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct StqOutcome {
    pub fidelity: f64,
    pub factorization_distance: f64,
    pub reconstructing_sets: usize,
    pub disjoint_copies: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StqStatus {
    match e {
        Error::Parse { .. } => StqStatus::Parse,
        Error::InvalidTask(_) | Error::DimMismatch(..) | Error::NonFinite => StqStatus::InvalidTask,
        Error::Refused(_) => StqStatus::Refused,
        Error::Unsupported(_) | Error::Undecidable(_) => StqStatus::Unsupported,
        Error::Audit { .. } => StqStatus::Audit,
        _ => StqStatus::Failed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), StqStatus>) -> StqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StqStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            StqStatus::Panic
        }
    }
}

fn lib<T>(r: spacetime_tasks::Result<T>) -> Result<T, StqStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, StqStatus> {
    if p.is_null() {
        set_error("null string argument".into());
        return Err(StqStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not UTF-8".into());
        StqStatus::InvalidUtf8
    })
}

unsafe fn task_arg<'a>(p: *const StqTask) -> Result<&'a TaskSpec, StqStatus> {
    p.as_ref().map(|t| &t.spec).ok_or_else(|| {
        set_error("null task".into());
        StqStatus::NullPointer
    })
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, StqStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null output pointer".into());
        StqStatus::NullPointer
    })
}

fn give(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or NULL. Owned by the library.
#[no_mangle]
pub extern "C" fn stq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn stq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse `.stq` text into a new task.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stq_task_parse(text: *const c_char, out: *mut *mut StqTask) -> StqStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let spec = lib(parse_task(str_arg(text)?))?;
        *out = Box::into_raw(Box::new(StqTask { spec }));
        Ok(())
    })
}

/// # Safety
/// `task` must come from [`stq_task_parse`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn stq_task_free(task: *mut StqTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}

/// Decide feasibility. `report`, when not NULL, receives the verdict text.
///
/// # Safety
/// Pointers must be valid or NULL where allowed.
#[no_mangle]
pub unsafe extern "C" fn stq_check(task: *const StqTask, feasible: *mut bool, report: *mut *mut c_char) -> StqStatus {
    guard(|| {
        let t = task_arg(task)?;
        let feasible = out_arg(feasible)?;
        let v = lib(check_task(t, None))?;
        *feasible = v.feasible;
        if let Some(r) = report.as_mut() {
            *r = give(v.to_string());
        }
        Ok(())
    })
}

/// Synthesize a protocol and return its event log.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stq_plan(task: *const StqTask, log: *mut *mut c_char) -> StqStatus {
    guard(|| {
        let t = task_arg(task)?;
        let log = out_arg(log)?;
        *log = ptr::null_mut();
        let plan = lib(plan_task(t))?;
        *log = give(plan.to_log());
        Ok(())
    })
}

/// Plan and run one scenario. Exactly one of `access` (a region or set label)
/// and `calls` (comma-separated diamond names, possibly empty) must be non-NULL.
///
/// # Safety
/// Pointers must be valid or NULL where allowed.
#[no_mangle]
pub unsafe extern "C" fn stq_simulate(
    task: *const StqTask,
    access: *const c_char,
    calls: *const c_char,
    seed: u64,
    out: *mut StqOutcome,
) -> StqStatus {
    guard(|| {
        let t = task_arg(task)?;
        let out = out_arg(out)?;
        let scenario = match (access.is_null(), calls.is_null()) {
            (false, true) => Scenario::access(str_arg(access)?, seed),
            (true, false) => {
                let names: Vec<&str> = str_arg(calls)?.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
                Scenario::calls(lib(CallPattern::from_called(t, &names))?, seed)
            }
            _ => {
                set_error("give exactly one of access and calls".into());
                return Err(StqStatus::InvalidTask);
            }
        };
        let plan = lib(plan_task(t))?;
        let audit = validate_plan(&plan, t);
        if !audit.passed() {
            set_error(audit.to_string());
            return Err(StqStatus::Audit);
        }
        let o = lib(execute(&plan, t, &scenario))?;
        *out = StqOutcome {
            fidelity: o.fidelity.unwrap_or(f64::NAN),
            factorization_distance: o.factorization_distance.unwrap_or(f64::NAN),
            reconstructing_sets: o.reconstructing.len(),
            disjoint_copies: o.disjoint_copies,
        };
        Ok(())
    })
}

/// Resource counts for `n` authorized and `m` unauthorized regions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stq_scheme_cost(n: usize, m: usize, key_bits: usize, out: *mut StqCost) -> StqStatus {
    guard(|| {
        let out = out_arg(out)?;
        let c = lib(scheme_cost(n, m, key_bits))?;
        *out = StqCost {
            quantum_shares: c.quantum_shares,
            qubits: c.qubits,
            xor_bits: c.xor_bits,
            threshold_bits_estimate: c.shamir_bits_asymptotic,
        };
        Ok(())
    })
}
