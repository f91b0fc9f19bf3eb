//! C interface to rmlearn.
//!
//! Objects are opaque handles created by `rm_*_new`/`rm_*_parse` and
//! released with the matching `rm_*_free`. Every fallible call returns an
//! [`RmStatus`]; on failure [`rm_last_error`] describes the cause until the
//! next failing call on the same thread. Strings handed out by the library
//! are freed with [`rm_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rmlearn::automata::{
    machines_equivalent, parse_machine, write_machine, Label, RewardMachine, Trace,
};
use rmlearn::environments::load_task;
use rmlearn::harness::{check_episodic_equivalence, check_equivalence_on_attainable};
use rmlearn::inference::{minimal_consistent_machine, rpni_rm, Insert, Sample};
use rmlearn::Error;

/// Result codes; `RM_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmStatus {
    RmOk = 0,
    RmNullPointer = 1,
    RmInvalidArgument = 2,
    RmParseError = 3,
    RmIoError = 4,
    RmUnknownTask = 5,
    RmMismatch = 6,
    RmConflict = 7,
    RmNoMachine = 8,
    RmBudgetExhausted = 9,
    RmInternal = 10,
}

/// Outcome of adding a trace to a sample.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmInsert {
    RmInsertAdded = 0,
    RmInsertDuplicate = 1,
    RmInsertConflict = 2,
}

pub struct RmMachine(RewardMachine);

pub struct RmSample(Sample);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RmStatus {
    match e {
        Error::Input(_) => RmStatus::RmInvalidArgument,
        Error::Parse { .. } | Error::Json(_) => RmStatus::RmParseError,
        Error::File { .. } | Error::Io(_) => RmStatus::RmIoError,
        Error::UnknownTask(_) | Error::UnknownMethod(_) => RmStatus::RmUnknownTask,
        Error::UniverseMismatch { .. } | Error::AlphabetMismatch => RmStatus::RmMismatch,
        Error::Conflict(_) => RmStatus::RmConflict,
        Error::NoMachine { .. } => RmStatus::RmNoMachine,
        Error::BudgetExhausted { .. } => RmStatus::RmBudgetExhausted,
        Error::NoConvergence { .. } => RmStatus::RmInternal,
    }
}

enum Fail {
    Null,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> RmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmStatus::RmOk,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            RmStatus::RmNullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            RmStatus::RmInternal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Input("string is not valid UTF-8".into())))
}

unsafe fn obj<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null)
}

fn give_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn rm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a machine in the text format.
#[no_mangle]
pub unsafe extern "C" fn rm_machine_parse(
    text: *const c_char,
    machine: *mut *mut RmMachine,
) -> RmStatus {
    guard(|| {
        let slot = out(machine)?;
        let m = parse_machine(str_arg(text)?)?;
        *slot = Box::into_raw(Box::new(RmMachine(m)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rm_machine_free(machine: *mut RmMachine) {
    if !machine.is_null() {
        drop(Box::from_raw(machine));
    }
}

/// Writes the machine in the text format; free the result with
/// [`rm_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rm_machine_to_string(
    machine: *const RmMachine,
    text: *mut *mut c_char,
) -> RmStatus {
    guard(|| {
        let m = obj(machine)?;
        *out(text)? = give_string(write_machine(&m.0));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rm_machine_num_states(
    machine: *const RmMachine,
    states: *mut usize,
) -> RmStatus {
    guard(|| {
        *out(states)? = obj(machine)?.0.num_states();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rm_machine_num_props(
    machine: *const RmMachine,
    props: *mut usize,
) -> RmStatus {
    guard(|| {
        *out(props)? = obj(machine)?.0.props().len();
        Ok(())
    })
}

/// One transition. `label` is a bit set over the machine's propositions in
/// declaration order.
#[no_mangle]
pub unsafe extern "C" fn rm_machine_step(
    machine: *const RmMachine,
    state: usize,
    label: u32,
    next: *mut usize,
    reward: *mut f64,
) -> RmStatus {
    guard(|| {
        let m = &obj(machine)?.0;
        let (next, reward) = (out(next)?, out(reward)?);
        if state >= m.num_states() {
            return Err(Error::Input(format!("state {state} out of range")).into());
        }
        m.props().check_label(Label(label))?;
        (*next, *reward) = m.step(state, Label(label));
        Ok(())
    })
}

/// Whether the machines emit the same rewards on every label sequence.
#[no_mangle]
pub unsafe extern "C" fn rm_machines_equivalent(
    m1: *const RmMachine,
    m2: *const RmMachine,
    equivalent: *mut bool,
) -> RmStatus {
    guard(|| {
        *out(equivalent)? = machines_equivalent(&obj(m1)?.0, &obj(m2)?.0)?;
        Ok(())
    })
}

/// Looks for a label sequence of length at most `horizon` that task
/// `task_id`'s environment can produce and on which the machines differ.
/// With `episodic`, sequences stop at goal states of `m2`. On success
/// `*witness_len` is 0 when none exists; otherwise the witness labels are
/// copied into `witness` (up to `capacity` entries).
#[no_mangle]
pub unsafe extern "C" fn rm_check_equivalence(
    task_id: *const c_char,
    m1: *const RmMachine,
    m2: *const RmMachine,
    horizon: usize,
    episodic: bool,
    witness: *mut u32,
    capacity: usize,
    witness_len: *mut usize,
) -> RmStatus {
    guard(|| {
        let (mdp, _) = load_task(str_arg(task_id)?, None)?;
        let (m1, m2) = (&obj(m1)?.0, &obj(m2)?.0);
        let len = out(witness_len)?;
        let w = if episodic {
            check_episodic_equivalence(&mdp, m1, m2, horizon)?
        } else {
            check_equivalence_on_attainable(&mdp, m1, m2, horizon)?
        };
        let w = w.unwrap_or_default();
        *len = w.len();
        if !w.is_empty() && !witness.is_null() {
            for (i, l) in w.iter().take(capacity).enumerate() {
                *witness.add(i) = l.bits();
            }
        }
        Ok(())
    })
}

/// Creates an empty sample over the whitespace-separated proposition names.
#[no_mangle]
pub unsafe extern "C" fn rm_sample_new(
    props: *const c_char,
    sample: *mut *mut RmSample,
) -> RmStatus {
    guard(|| {
        let slot = out(sample)?;
        let props = rmlearn::automata::PropSet::new(str_arg(props)?.split_whitespace())?;
        *slot = Box::into_raw(Box::new(RmSample(Sample::new(props))));
        Ok(())
    })
}

/// Parses a sample in the text format.
#[no_mangle]
pub unsafe extern "C" fn rm_sample_parse(
    text: *const c_char,
    sample: *mut *mut RmSample,
) -> RmStatus {
    guard(|| {
        let slot = out(sample)?;
        let x = Sample::parse(str_arg(text)?)?;
        *slot = Box::into_raw(Box::new(RmSample(x)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rm_sample_free(sample: *mut RmSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

#[no_mangle]
pub unsafe extern "C" fn rm_sample_len(sample: *const RmSample, len: *mut usize) -> RmStatus {
    guard(|| {
        *out(len)? = obj(sample)?.0.len();
        Ok(())
    })
}

/// Adds the trace `(labels[i], rewards[i])` for `i < len`.
#[no_mangle]
pub unsafe extern "C" fn rm_sample_add_trace(
    sample: *mut RmSample,
    labels: *const u32,
    rewards: *const f64,
    len: usize,
    result: *mut RmInsert,
) -> RmStatus {
    guard(|| {
        let x = &mut out(sample)?.0;
        let result = out(result)?;
        if len > 0 && (labels.is_null() || rewards.is_null()) {
            return Err(Fail::Null);
        }
        let (ls, rs) = if len == 0 {
            (Vec::new(), Vec::new())
        } else {
            (
                std::slice::from_raw_parts(labels, len)
                    .iter()
                    .map(|&b| Label(b))
                    .collect(),
                std::slice::from_raw_parts(rewards, len).to_vec(),
            )
        };
        *result = match x.insert(Trace::new(ls, rs)?)? {
            Insert::Added => RmInsert::RmInsertAdded,
            Insert::Duplicate => RmInsert::RmInsertDuplicate,
            Insert::Conflict => RmInsert::RmInsertConflict,
        };
        Ok(())
    })
}

/// Infers a machine consistent with the sample by state merging.
#[no_mangle]
pub unsafe extern "C" fn rm_learn_rpni(
    sample: *const RmSample,
    machine: *mut *mut RmMachine,
) -> RmStatus {
    guard(|| {
        let slot = out(machine)?;
        *slot = Box::into_raw(Box::new(RmMachine(rpni_rm(&obj(sample)?.0, 0.0))));
        Ok(())
    })
}

/// Infers a minimum-size consistent machine with at most `k_max` states,
/// giving up after `budget` search expansions.
#[no_mangle]
pub unsafe extern "C" fn rm_learn_exact(
    sample: *const RmSample,
    k_max: usize,
    budget: u64,
    machine: *mut *mut RmMachine,
) -> RmStatus {
    guard(|| {
        let slot = out(machine)?;
        let m = minimal_consistent_machine(&obj(sample)?.0, k_max, budget)?
            .ok_or(Error::NoMachine { k_max })?;
        *slot = Box::into_raw(Box::new(RmMachine(m)));
        Ok(())
    })
}
