//! C ABI over the `faci` library.
//!
//! Every fallible call returns a [`FaciStatus`]; on failure the message is
//! available from [`faci_last_error`] on the same thread. Objects are opaque
//! handles created by `*_new` and released by the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use faci::aci::{aci_step, AciState};
use faci::conformal::{compute_beta, empirical_quantile, pinball_loss, ScoreWindow, TargetLevel};
use faci::faci::{fixed_eta_heuristic, EnsembleConfig, EnsembleState, EtaMode, EtaSchedule, Output};
use faci::theory::{dynamic_regret_bound, long_term_coverage_bound, RegretBoundInputs};
use faci::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaciStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    EmptyWindow = 3,
    DegenerateInput = 4,
    HypothesesViolated = 5,
    NonFiniteWeight = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaciEtaMode {
    Fixed = 0,
    Windowed = 1,
    Decaying = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaciOutput {
    Averaged = 0,
    Randomized = 1,
}

/// Outcome of one ensemble step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaciStepResult {
    pub alpha_t: f64,
    /// 1 when `beta < alpha_t`.
    pub err: u8,
    pub eta: f64,
    pub sigma: f64,
    /// Selected expert, or -1 for the averaged output.
    pub selected: i64,
    pub loss: f64,
}

/// Inputs of the interval regret bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaciRegretInputs {
    pub interval_length: usize,
    pub k: usize,
    pub sigma: f64,
    pub eta: f64,
    pub sum_sq_losses: f64,
    pub path_length: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaciRegretBound {
    pub aggregation: f64,
    pub variance: f64,
    pub tracking: f64,
    pub total: f64,
}

/// Opaque rolling score window.
pub struct FaciScoreWindow(ScoreWindow);

/// Opaque expert ensemble.
pub struct FaciEnsemble(EnsembleState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FaciStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::NotAQuantile { .. } => FaciStatus::InvalidArgument,
        Error::EmptyWindow => FaciStatus::EmptyWindow,
        Error::Degenerate(_)
        | Error::DegenerateLossWindow
        | Error::UndefinedRelativeScore
        | Error::UnboundedRelativeSet(_)
        | Error::StreamTooShort { .. } => FaciStatus::DegenerateInput,
        Error::HypothesesViolated(_) => FaciStatus::HypothesesViolated,
        Error::NonFiniteWeight => FaciStatus::NonFiniteWeight,
        Error::Io(_) | Error::Parse(_) => FaciStatus::Other,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), FaciStatus>) -> FaciStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FaciStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside faci".into());
            FaciStatus::Panic
        }
    }
}

fn fail(e: Error) -> FaciStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> FaciStatus {
    set_error(format!("{what} is null"));
    FaciStatus::NullPointer
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, FaciStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn faci_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `alpha (beta - theta) - min(0, beta - theta)`.
#[no_mangle]
pub extern "C" fn faci_pinball_loss(beta: f64, theta: f64, alpha: f64) -> f64 {
    pinball_loss(beta, theta, alpha)
}

/// One ACI update `alpha_t + gamma (alpha - err)`, with `err = 1{beta < alpha_t}`.
///
/// # Safety
/// `alpha_next` and `err` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn faci_aci_step(
    alpha_t: f64,
    gamma: f64,
    alpha: f64,
    beta: f64,
    alpha_next: *mut f64,
    err: *mut u8,
) -> FaciStatus {
    guard(|| {
        let next = unsafe { out_ref(alpha_next, "alpha_next") }?;
        let e = unsafe { out_ref(err, "err") }?;
        let target = TargetLevel::new(alpha).map_err(fail)?;
        let beta = faci::conformal::BetaValue::new(beta).map_err(fail)?;
        let state = AciState::with_init(target, gamma, alpha_t).map_err(fail)?;
        let miss = state.err(beta);
        *e = u8::from(miss);
        *next = aci_step(state, miss).alpha_t;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer to an `f64`.
#[no_mangle]
pub unsafe extern "C" fn faci_fixed_eta_heuristic(alpha: f64, k: usize, interval_length: usize, out: *mut f64) -> FaciStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        *out = fixed_eta_heuristic(alpha, k, interval_length).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `inputs` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn faci_dynamic_regret_bound(inputs: *const FaciRegretInputs, out: *mut FaciRegretBound) -> FaciStatus {
    guard(|| {
        let i = unsafe { inputs.as_ref() }.ok_or_else(|| null("inputs"))?;
        let out = unsafe { out_ref(out, "out") }?;
        let b = dynamic_regret_bound(&RegretBoundInputs {
            interval_length: i.interval_length,
            k: i.k,
            sigma: i.sigma,
            eta: i.eta,
            sum_sq_losses: i.sum_sq_losses,
            path_length: i.path_length,
            gamma_min: i.gamma_min,
            gamma_max: i.gamma_max,
            gamma_1: i.gamma_1,
        })
        .map_err(fail)?;
        *out = FaciRegretBound {
            aggregation: b.aggregation,
            variance: b.variance,
            tracking: b.tracking,
            total: b.total,
        };
        Ok(())
    })
}

/// # Safety
/// `etas` and `sigmas` must point to `horizon` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn faci_long_term_coverage_bound(
    horizon: usize,
    gamma_min: f64,
    gamma_max: f64,
    etas: *const f64,
    sigmas: *const f64,
    out: *mut f64,
) -> FaciStatus {
    guard(|| {
        if etas.is_null() || sigmas.is_null() {
            return Err(null("schedule"));
        }
        let out = unsafe { out_ref(out, "out") }?;
        let (e, s) = unsafe { (std::slice::from_raw_parts(etas, horizon), std::slice::from_raw_parts(sigmas, horizon)) };
        *out = long_term_coverage_bound(horizon, gamma_min, gamma_max, e, s).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer; the handle is released with
/// [`faci_window_free`].
#[no_mangle]
pub unsafe extern "C" fn faci_window_new(capacity: usize, out: *mut *mut FaciScoreWindow) -> FaciStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let w = ScoreWindow::new(capacity).map_err(fail)?;
        *out = Box::into_raw(Box::new(FaciScoreWindow(w)));
        Ok(())
    })
}

/// # Safety
/// `w` must come from [`faci_window_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn faci_window_free(w: *mut FaciScoreWindow) {
    if !w.is_null() {
        drop(unsafe { Box::from_raw(w) });
    }
}

/// # Safety
/// `w` must be a live window handle.
#[no_mangle]
pub unsafe extern "C" fn faci_window_push(w: *mut FaciScoreWindow, score: f64) -> FaciStatus {
    guard(|| {
        let w = unsafe { out_ref(w, "window") }?;
        w.0.push(score).map_err(fail)?;
        Ok(())
    })
}

/// Number of stored scores; 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live window handle.
#[no_mangle]
pub unsafe extern "C" fn faci_window_len(w: *const FaciScoreWindow) -> usize {
    unsafe { w.as_ref() }.map_or(0, |w| w.0.len())
}

/// # Safety
/// `w` must be a live window handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn faci_window_quantile(w: *const FaciScoreWindow, tau: f64, out: *mut f64) -> FaciStatus {
    guard(|| {
        let w = unsafe { w.as_ref() }.ok_or_else(|| null("window"))?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = empirical_quantile(tau, &w.0).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `w` must be a live window handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn faci_window_beta(w: *const FaciScoreWindow, score: f64, out: *mut f64) -> FaciStatus {
    guard(|| {
        let w = unsafe { w.as_ref() }.ok_or_else(|| null("window"))?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = compute_beta(score, &w.0).map_err(fail)?.get();
        Ok(())
    })
}

/// Ensemble over `k` step sizes with the default schedule for `mode`.
///
/// # Safety
/// `gammas` must point to `k` values and `out` be valid; the handle is
/// released with [`faci_ensemble_free`].
#[no_mangle]
pub unsafe extern "C" fn faci_ensemble_new(
    gammas: *const f64,
    k: usize,
    alpha: f64,
    interval_length: usize,
    mode: FaciEtaMode,
    out: *mut *mut FaciEnsemble,
) -> FaciStatus {
    guard(|| {
        if gammas.is_null() {
            return Err(null("gammas"));
        }
        let out = unsafe { out_ref(out, "out") }?;
        let gammas = unsafe { std::slice::from_raw_parts(gammas, k) }.to_vec();
        let mode = match mode {
            FaciEtaMode::Fixed => EtaMode::Fixed,
            FaciEtaMode::Windowed => EtaMode::Windowed,
            FaciEtaMode::Decaying => EtaMode::Decaying,
        };
        let target = TargetLevel::new(alpha).map_err(fail)?;
        let schedule = EtaSchedule::default_for(mode, alpha, k, interval_length).map_err(fail)?;
        let state = EnsembleState::new(EnsembleConfig {
            gammas,
            target,
            schedule,
            alpha_init: None,
            literal_expert_update: false,
        })
        .map_err(fail)?;
        *out = Box::into_raw(Box::new(FaciEnsemble(state)));
        Ok(())
    })
}

/// # Safety
/// `e` must come from [`faci_ensemble_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn faci_ensemble_free(e: *mut FaciEnsemble) {
    if !e.is_null() {
        drop(unsafe { Box::from_raw(e) });
    }
}

/// One step on `beta`; `draw` in `[0, 1)` is used by the randomized output.
///
/// # Safety
/// `e` must be a live ensemble handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn faci_ensemble_step(
    e: *mut FaciEnsemble,
    beta: f64,
    output: FaciOutput,
    draw: f64,
    out: *mut FaciStepResult,
) -> FaciStatus {
    guard(|| {
        let e = unsafe { out_ref(e, "ensemble") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let beta = faci::conformal::BetaValue::new(beta).map_err(fail)?;
        let output = match output {
            FaciOutput::Averaged => Output::Averaged,
            FaciOutput::Randomized => Output::Randomized,
        };
        let s = e.0.step(beta, output, draw).map_err(fail)?;
        *out = FaciStepResult {
            alpha_t: s.alpha_t,
            err: u8::from(s.err),
            eta: s.eta,
            sigma: s.sigma,
            selected: s.selected.map_or(-1, |i| i as i64),
            loss: s.loss,
        };
        Ok(())
    })
}

/// Probability-weighted level of the current state.
///
/// # Safety
/// `e` must be a live ensemble handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn faci_ensemble_alpha_bar(e: *const FaciEnsemble, out: *mut f64) -> FaciStatus {
    guard(|| {
        let e = unsafe { e.as_ref() }.ok_or_else(|| null("ensemble"))?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = e.0.alpha_bar();
        Ok(())
    })
}

/// Copies the expert probabilities into `buf` (length `len >= k`).
///
/// # Safety
/// `e` must be a live ensemble handle and `buf` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn faci_ensemble_probabilities(e: *const FaciEnsemble, buf: *mut f64, len: usize) -> FaciStatus {
    guard(|| {
        let e = unsafe { e.as_ref() }.ok_or_else(|| null("ensemble"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let p = e.0.probabilities();
        if len < p.len() {
            return Err(fail(Error::InvalidArgument(format!("buffer holds {len} values, need {}", p.len()))));
        }
        unsafe { std::slice::from_raw_parts_mut(buf, p.len()) }.copy_from_slice(&p);
        Ok(())
    })
}

/// Number of experts; 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn faci_ensemble_k(e: *const FaciEnsemble) -> usize {
    unsafe { e.as_ref() }.map_or(0, |e| e.0.k())
}
