//! C ABI for the qbloch simulator.
//!
//! Scenarios and trajectories are opaque heap handles; every fallible call
//! returns a [`QblochStatus`] and stores a human-readable message retrievable
//! with [`qbloch_last_error`]. Trajectory states are exposed as flat arrays
//! of re/im parts whose layout depends on the scenario's model (see
//! [`qbloch_trajectory_state`]).
//!
//! # Safety
//!
//! All `extern "C"` functions follow the same contract: pointer arguments
//! must be valid for the duration of the call, strings must be NUL-terminated
//! UTF-8, and out-pointers must point to writable memory of the documented
//! size. Functions check for null pointers and return
//! [`QblochStatus::NullPointer`] instead of dereferencing them. Handles must
//! be freed exactly once with their matching `_free` function and must not be
//! used afterwards.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use qbloch::config::{parse_scenario, Scenario};
use qbloch::integrators::{simulate, State, Trajectory};
use qbloch::verification::{run_verification, VerificationError, VERIFICATION_TOL};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QblochStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    SimulationFailed = 4,
    VerificationFailed = 5,
    InvalidUtf8 = 6,
}

/// Diagnostics of one recorded state.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct QblochDiagnostics {
    pub hermiticity_defect: f64,
    pub trace_re: f64,
    pub trace_im: f64,
    pub min_eigenvalue: f64,
    pub coherence_bound_defect: f64,
    pub population_min: f64,
    pub population_max: f64,
    /// Meaningful only when `has_degeneracy_bound` is true.
    pub degeneracy_bound_defect: f64,
    pub has_degeneracy_bound: bool,
}

/// Opaque handle to a validated scenario.
pub struct QblochScenario {
    inner: Scenario,
}

/// Opaque handle to a simulated trajectory.
pub struct QblochTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

fn fail(status: QblochStatus, message: impl std::fmt::Display) -> QblochStatus {
    set_last_error(message);
    status
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next failing qbloch call on the same thread.
#[no_mangle]
pub extern "C" fn qbloch_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn read_str<'a>(pointer: *const c_char) -> Result<&'a str, QblochStatus> {
    if pointer.is_null() {
        return Err(fail(QblochStatus::NullPointer, "null string pointer"));
    }
    CStr::from_ptr(pointer)
        .to_str()
        .map_err(|err| fail(QblochStatus::InvalidUtf8, format!("invalid UTF-8: {err}")))
}

/// Parses and validates a scenario from TOML text.
///
/// On success writes a new handle to `out`; free it with
/// [`qbloch_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn qbloch_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut QblochScenario,
) -> QblochStatus {
    if out.is_null() {
        return fail(QblochStatus::NullPointer, "null out pointer");
    }
    let text = match read_str(text) {
        Ok(text) => text,
        Err(status) => return status,
    };
    match parse_scenario(text) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(QblochScenario { inner }));
            QblochStatus::Ok
        }
        Err(err) => fail(QblochStatus::InvalidConfig, err),
    }
}

/// Loads a scenario from a TOML file on disk.
#[no_mangle]
pub unsafe extern "C" fn qbloch_scenario_from_file(
    path: *const c_char,
    out: *mut *mut QblochScenario,
) -> QblochStatus {
    if out.is_null() {
        return fail(QblochStatus::NullPointer, "null out pointer");
    }
    let path = match read_str(path) {
        Ok(path) => path,
        Err(status) => return status,
    };
    match qbloch::config::load_scenario(path) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(QblochScenario { inner }));
            QblochStatus::Ok
        }
        Err(err) => fail(QblochStatus::InvalidConfig, err),
    }
}

#[no_mangle]
pub unsafe extern "C" fn qbloch_scenario_free(scenario: *mut QblochScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario's simulation and returns a trajectory handle; free it
/// with [`qbloch_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn qbloch_scenario_run(
    scenario: *const QblochScenario,
    out: *mut *mut QblochTrajectory,
) -> QblochStatus {
    if scenario.is_null() || out.is_null() {
        return fail(QblochStatus::NullPointer, "null scenario or out pointer");
    }
    let scenario = &(*scenario).inner;
    match simulate(&scenario.model, scenario.initial.clone(), &scenario.field, &scenario.stepper)
    {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(QblochTrajectory { inner }));
            QblochStatus::Ok
        }
        Err(err) => fail(QblochStatus::SimulationFailed, err),
    }
}

#[no_mangle]
pub unsafe extern "C" fn qbloch_trajectory_free(trajectory: *mut QblochTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of recorded states.
#[no_mangle]
pub unsafe extern "C" fn qbloch_trajectory_records(
    trajectory: *const QblochTrajectory,
) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    (*trajectory).inner.len()
}

fn flatten_state(state: &State, re: &mut Vec<f64>, im: &mut Vec<f64>) {
    let mut push = |z: qbloch::Complex64| {
        re.push(z.re);
        im.push(z.im);
    };
    match state {
        State::Density(rho) => {
            for value in rho.data() {
                push(*value);
            }
        }
        State::ElectronHole(state) => {
            for value in
                state.rho_c.data().iter().chain(state.rho_h.data()).chain(state.rho_ch.data())
            {
                push(*value);
            }
        }
        State::GehrigHess(state) => {
            for &value in &state.n_e {
                push(qbloch::Complex64::new(value, 0.0));
            }
            for &value in &state.n_h {
                push(qbloch::Complex64::new(value, 0.0));
            }
            for value in state.p.data() {
                push(*value);
            }
        }
    }
}

/// Number of complex entries in one flattened state.
///
/// Layouts (all matrices row-major): density models expose the full density
/// matrix (`n*n`); the electron-hole model concatenates `rho_c`, `rho_h`,
/// `rho_ch`; the reduced model concatenates `n_e`, `n_h` (imaginary parts
/// zero) and the polarization block.
#[no_mangle]
pub unsafe extern "C" fn qbloch_trajectory_state_len(
    trajectory: *const QblochTrajectory,
) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    match (*trajectory).inner.states.first() {
        None => 0,
        Some(state) => {
            let (mut re, mut im) = (Vec::new(), Vec::new());
            flatten_state(state, &mut re, &mut im);
            re.len()
        }
    }
}

/// Time stamp of one record.
#[no_mangle]
pub unsafe extern "C" fn qbloch_trajectory_time(
    trajectory: *const QblochTrajectory,
    record: usize,
    out: *mut f64,
) -> QblochStatus {
    if trajectory.is_null() || out.is_null() {
        return fail(QblochStatus::NullPointer, "null trajectory or out pointer");
    }
    let trajectory = &(*trajectory).inner;
    match trajectory.times.get(record) {
        Some(&time) => {
            *out = time;
            QblochStatus::Ok
        }
        None => fail(QblochStatus::InvalidArgument, format!("record {record} out of range")),
    }
}

/// Copies the flattened state of one record into `out_re`/`out_im`, each of
/// length `len` (which must equal [`qbloch_trajectory_state_len`]).
#[no_mangle]
pub unsafe extern "C" fn qbloch_trajectory_state(
    trajectory: *const QblochTrajectory,
    record: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    len: usize,
) -> QblochStatus {
    if trajectory.is_null() || out_re.is_null() || out_im.is_null() {
        return fail(QblochStatus::NullPointer, "null trajectory or out pointer");
    }
    let trajectory = &(*trajectory).inner;
    let Some(state) = trajectory.states.get(record) else {
        return fail(QblochStatus::InvalidArgument, format!("record {record} out of range"));
    };
    let (mut re, mut im) = (Vec::new(), Vec::new());
    flatten_state(state, &mut re, &mut im);
    if re.len() != len {
        return fail(
            QblochStatus::InvalidArgument,
            format!("state length {} does not match the supplied buffer length {len}", re.len()),
        );
    }
    std::ptr::copy_nonoverlapping(re.as_ptr(), out_re, len);
    std::ptr::copy_nonoverlapping(im.as_ptr(), out_im, len);
    QblochStatus::Ok
}

/// Diagnostics of one record.
#[no_mangle]
pub unsafe extern "C" fn qbloch_trajectory_diagnostics(
    trajectory: *const QblochTrajectory,
    record: usize,
    out: *mut QblochDiagnostics,
) -> QblochStatus {
    if trajectory.is_null() || out.is_null() {
        return fail(QblochStatus::NullPointer, "null trajectory or out pointer");
    }
    let trajectory = &(*trajectory).inner;
    let Some(diag) = trajectory.diagnostics.get(record) else {
        return fail(QblochStatus::InvalidArgument, format!("record {record} out of range"));
    };
    *out = QblochDiagnostics {
        hermiticity_defect: diag.hermiticity_defect,
        trace_re: diag.trace.re,
        trace_im: diag.trace.im,
        min_eigenvalue: diag.min_eigenvalue,
        coherence_bound_defect: diag.coherence_bound_defect,
        population_min: diag.population_min,
        population_max: diag.population_max,
        degeneracy_bound_defect: diag.degeneracy_bound_defect.unwrap_or(0.0),
        has_degeneracy_bound: diag.degeneracy_bound_defect.is_some(),
    };
    QblochStatus::Ok
}

/// Runs the symbolic re-derivation checks on seeded random systems.
///
/// `out_max_deviations`, when non-null, must point to four doubles; they
/// receive the per-check maximum relative deviations (one-species generator,
/// boson equivalence, two-species generator, electron-hole chain rule).
/// Returns `Ok` when every deviation is below 1e-10.
#[no_mangle]
pub unsafe extern "C" fn qbloch_verify(
    levels: u32,
    seed: u64,
    trials: u32,
    out_max_deviations: *mut f64,
) -> QblochStatus {
    let summary = match run_verification(levels as usize, seed, trials as usize) {
        Ok(summary) => summary,
        Err(err @ (VerificationError::BadLevelCount { .. } | VerificationError::NoTrials)) => {
            return fail(QblochStatus::InvalidArgument, err);
        }
        Err(err) => return fail(QblochStatus::VerificationFailed, err),
    };
    if !out_max_deviations.is_null() {
        for (slot, check) in (0..4).zip(&summary.checks) {
            *out_max_deviations.add(slot) = check.max_rel_deviation;
        }
    }
    if summary.all_within(VERIFICATION_TOL) {
        QblochStatus::Ok
    } else {
        let worst = summary
            .checks
            .iter()
            .max_by(|a, b| a.max_rel_deviation.total_cmp(&b.max_rel_deviation))
            .expect("four checks");
        fail(
            QblochStatus::VerificationFailed,
            format!("{} deviates by {:.3e}", worst.name, worst.max_rel_deviation),
        )
    }
}
