//! C ABI for the `ggp` library.
//!
//! States and observables cross the boundary as opaque heap handles created
//! by `ggp_*_new` and released by the matching `ggp_*_free`. Every fallible
//! call returns a [`GgpStatus`]; on failure the message of the most recent
//! error on the calling thread is available from [`ggp_last_error`].
//! Outputs are written through caller-provided pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ggp::dynamics::{f_mn, two_level_phase, TwoLevelKind, TwoLevelParams};
use ggp::hilbert::{relative_phase, weak_value};
use ggp::job::{run, JobConfig};
use ggp::phase::{generalized_phase_chain, pancharatnam_phase};
use ggp::scattering::{optical_theorem_residual, separable_tmatrix, SeparableModel};
use ggp::{Complex, Error, Observable, StateVector, Tolerances};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    UndefinedPhase = 4,
    Singular = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque state vector.
pub struct GgpState(StateVector);

/// Opaque Hermitian observable.
pub struct GgpObservable(Observable);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GgpPhaseResult {
    pub value: f64,
    pub min_link_modulus: f64,
    pub chain_length: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgpTwoLevelKind {
    SwapX = 0,
    Hadamard = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let clean = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(e: &Error) -> GgpStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::LengthMismatch { .. } | Error::NotSquare { .. } => {
            GgpStatus::DimensionMismatch
        }
        Error::UndefinedPhase { .. }
        | Error::UndefinedWeakValue { .. }
        | Error::IdentityNotApplicable { .. }
        | Error::OrthogonalEndpoints { .. }
        | Error::SingularConnection { .. } => GgpStatus::UndefinedPhase,
        Error::SingularKernel { .. } | Error::PoleAtEnergy { .. } | Error::DegenerateSpectrum { .. } => {
            GgpStatus::Singular
        }
        _ => GgpStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> GgpStatus {
    set_last_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> GgpStatus {
    set_last_error(&format!("null pointer: {what}"));
    GgpStatus::NullPointer
}

/// Runs `f`, converting panics into [`GgpStatus::Panic`].
fn guard<F: FnOnce() -> GgpStatus>(f: F) -> GgpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_last_error("internal panic");
        GgpStatus::Panic
    })
}

unsafe fn complex_slice(re: *const f64, im: *const f64, len: usize) -> Vec<Complex> {
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    re.iter().zip(im).map(|(&a, &b)| Complex::new(a, b)).collect()
}

/// Message of the last error on this thread; valid until the next call that
/// fails on the same thread. Never null.
#[no_mangle]
pub extern "C" fn ggp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a state from `dim` real and imaginary parts.
///
/// # Safety
/// `re` and `im` must point to `dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_state_new(
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut GgpState,
) -> GgpStatus {
    guard(|| {
        if re.is_null() || im.is_null() || out.is_null() {
            return null("ggp_state_new");
        }
        match StateVector::new(complex_slice(re, im, dim)) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(GgpState(s)));
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `state` must come from [`ggp_state_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ggp_state_free(state: *mut GgpState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `state` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ggp_state_dim(state: *const GgpState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// Creates an observable from a row-major `dim x dim` matrix.
///
/// # Safety
/// `re` and `im` must point to `dim * dim` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_observable_new(
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut GgpObservable,
) -> GgpStatus {
    guard(|| {
        if re.is_null() || im.is_null() || out.is_null() {
            return null("ggp_observable_new");
        }
        let flat = complex_slice(re, im, dim * dim);
        let rows: Vec<Vec<Complex>> = flat.chunks(dim.max(1)).map(<[Complex]>::to_vec).collect();
        match Observable::from_rows(&rows) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(GgpObservable(o)));
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_observable_identity(dim: usize, out: *mut *mut GgpObservable) -> GgpStatus {
    guard(|| {
        if out.is_null() {
            return null("ggp_observable_identity");
        }
        if dim == 0 {
            set_last_error("dimension must be positive");
            return GgpStatus::InvalidArgument;
        }
        *out = Box::into_raw(Box::new(GgpObservable(Observable::identity(dim))));
        GgpStatus::Ok
    })
}

/// # Safety
/// `o` must come from an observable constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ggp_observable_free(o: *mut GgpObservable) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// `Arg <a|O|b>`.
///
/// # Safety
/// All handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_relative_phase(
    a: *const GgpState,
    b: *const GgpState,
    o: *const GgpObservable,
    out: *mut f64,
) -> GgpStatus {
    guard(|| {
        let (Some(a), Some(b), Some(o)) = (a.as_ref(), b.as_ref(), o.as_ref()) else {
            return null("ggp_relative_phase");
        };
        if out.is_null() {
            return null("ggp_relative_phase");
        }
        match relative_phase(&a.0, &b.0, &o.0, &Tolerances::default()) {
            Ok(v) => {
                *out = v;
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `<a|O|b> / <a|b>`.
///
/// # Safety
/// All handles must be live; `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_weak_value(
    a: *const GgpState,
    o: *const GgpObservable,
    b: *const GgpState,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GgpStatus {
    guard(|| {
        let (Some(a), Some(b), Some(o)) = (a.as_ref(), b.as_ref(), o.as_ref()) else {
            return null("ggp_weak_value");
        };
        if out_re.is_null() || out_im.is_null() {
            return null("ggp_weak_value");
        }
        match weak_value(&a.0, &o.0, &b.0, &Tolerances::default()) {
            Ok(w) => {
                *out_re = w.re;
                *out_im = w.im;
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Chain phase of `n` states; a null observable means bare overlaps.
///
/// # Safety
/// `states` must point to `n` live state handles; `o` must be live or null;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_chain_phase(
    states: *const *const GgpState,
    n: usize,
    o: *const GgpObservable,
    out: *mut GgpPhaseResult,
) -> GgpStatus {
    guard(|| {
        if states.is_null() || out.is_null() {
            return null("ggp_chain_phase");
        }
        let handles = std::slice::from_raw_parts(states, n);
        let mut chain = Vec::with_capacity(n);
        for h in handles {
            match h.as_ref() {
                Some(s) => chain.push(s.0.clone()),
                None => return null("ggp_chain_phase: state"),
            }
        }
        let tol = Tolerances::default();
        let r = match o.as_ref() {
            Some(o) => generalized_phase_chain(&chain, &o.0, &tol),
            None => pancharatnam_phase(&chain, &tol),
        };
        match r {
            Ok(r) => {
                *out = GgpPhaseResult {
                    value: r.value,
                    min_link_modulus: r.min_link_modulus,
                    chain_length: r.chain_length,
                };
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_two_level_phase(kind: GgpTwoLevelKind, theta: f64, phi: f64, out: *mut f64) -> GgpStatus {
    guard(|| {
        if out.is_null() {
            return null("ggp_two_level_phase");
        }
        let kind = match kind {
            GgpTwoLevelKind::SwapX => TwoLevelKind::SwapX,
            GgpTwoLevelKind::Hadamard => TwoLevelKind::Hadamard,
        };
        let r = TwoLevelParams::new(theta, phi).and_then(|p| two_level_phase(kind, p, &Tolerances::default()));
        match r {
            Ok(v) => {
                *out = v;
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Triple ordered phase integral from 0 to `t`.
///
/// # Safety
/// `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_f_mn(w1: f64, w2: f64, w3: f64, t: f64, out_re: *mut f64, out_im: *mut f64) -> GgpStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return null("ggp_f_mn");
        }
        if ![w1, w2, w3, t].iter().all(|x| x.is_finite()) || t < 0.0 {
            set_last_error("frequencies and t must be finite, t >= 0");
            return GgpStatus::InvalidArgument;
        }
        let f = f_mn(w1, w2, w3, t);
        *out_re = f.re;
        *out_im = f.im;
        GgpStatus::Ok
    })
}

/// Exact forward amplitude of the rank-1 separable potential.
///
/// # Safety
/// `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_separable_amplitude(
    beta: f64,
    coupling: f64,
    mass: f64,
    k: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GgpStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return null("ggp_separable_amplitude");
        }
        let r =
            SeparableModel::new(coupling, beta, mass).and_then(|m| separable_tmatrix(&m, k, &Tolerances::default()));
        match r {
            Ok(f) => {
                *out_re = f.re;
                *out_im = f.im;
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `|Im f - k |f|^2|` for the exact separable amplitude.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_optical_residual(beta: f64, coupling: f64, mass: f64, k: f64, out: *mut f64) -> GgpStatus {
    guard(|| {
        if out.is_null() {
            return null("ggp_optical_residual");
        }
        let r = SeparableModel::new(coupling, beta, mass)
            .and_then(|m| optical_theorem_residual(&m, k, &Tolerances::default()));
        match r {
            Ok(v) => {
                *out = v;
                GgpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Runs a JSON job (relative paths resolve against the working directory)
/// and returns the JSON report, to be released with [`ggp_string_free`].
/// `exit_code` receives 0 or 2 as the CLI would report.
///
/// # Safety
/// `job` must be a NUL-terminated string; `report` and `exit_code` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ggp_run_job_json(
    job: *const c_char,
    report: *mut *mut c_char,
    exit_code: *mut u8,
) -> GgpStatus {
    guard(|| {
        if job.is_null() || report.is_null() || exit_code.is_null() {
            return null("ggp_run_job_json");
        }
        let text = match CStr::from_ptr(job).to_str() {
            Ok(t) => t,
            Err(e) => {
                set_last_error(&e.to_string());
                return GgpStatus::Parse;
            }
        };
        let config: JobConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_last_error(&e.to_string());
                return GgpStatus::Parse;
            }
        };
        match run(&config, Path::new(".")) {
            Ok(outcome) => {
                let json = outcome.report.to_json();
                *exit_code = outcome.report.exit_code();
                *report = CString::new(json).map_or(ptr::null_mut(), CString::into_raw);
                GgpStatus::Ok
            }
            Err(e) => {
                set_last_error(&e.to_string());
                match e {
                    ggp::job::JobError::Io { .. } => GgpStatus::Io,
                    ggp::job::JobError::Parse(_) => GgpStatus::Parse,
                }
            }
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ggp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
