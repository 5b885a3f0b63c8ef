use std::f64::consts::PI;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ggp_ffi::*;

fn state(re: &[f64], im: &[f64]) -> *mut GgpState {
    let mut out = ptr::null_mut();
    let st = unsafe { ggp_state_new(re.as_ptr(), im.as_ptr(), re.len(), &mut out) };
    assert_eq!(st, GgpStatus::Ok);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ggp_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn chain_phase_with_null_observable_is_pancharatnam() {
    let h = 0.5f64.sqrt();
    let a = state(&[1.0, 0.0], &[0.0, 0.0]);
    let b = state(&[h, 0.0], &[0.0, h]);
    let c = state(&[h, h], &[0.0, 0.0]);
    let chain = [a as *const GgpState, b, c];
    let mut r = GgpPhaseResult::default();
    let st = unsafe { ggp_chain_phase(chain.as_ptr(), 3, ptr::null(), &mut r) };
    assert_eq!(st, GgpStatus::Ok);
    assert_eq!(r.chain_length, 3);
    // <a|b><b|c><c|a> = (1 - i)/4.
    assert!((r.value + PI / 4.0).abs() < 1e-12, "{}", r.value);

    let mut id = ptr::null_mut();
    assert_eq!(unsafe { ggp_observable_identity(2, &mut id) }, GgpStatus::Ok);
    let mut r2 = GgpPhaseResult::default();
    assert_eq!(
        unsafe { ggp_chain_phase(chain.as_ptr(), 3, id, &mut r2) },
        GgpStatus::Ok
    );
    assert!((r.value - r2.value).abs() < 1e-15);
    unsafe {
        ggp_observable_free(id);
        for s in chain {
            ggp_state_free(s as *mut _);
        }
    }
}

#[test]
fn weak_value_and_relative_phase() {
    let a = state(&[1.0, 0.0], &[0.0, 0.0]);
    let b = state(&[0.6, 0.8], &[0.0, 0.0]);
    let (re, im) = ([0.0, 1.0, 1.0, 0.0], [0.0; 4]);
    let mut x = ptr::null_mut();
    assert_eq!(
        unsafe { ggp_observable_new(re.as_ptr(), im.as_ptr(), 2, &mut x) },
        GgpStatus::Ok
    );
    let (mut wr, mut wi) = (0.0, 0.0);
    assert_eq!(unsafe { ggp_weak_value(a, x, b, &mut wr, &mut wi) }, GgpStatus::Ok);
    assert!((wr - 0.8 / 0.6).abs() < 1e-14 && wi.abs() < 1e-15);
    let mut phase = 1.0;
    assert_eq!(unsafe { ggp_relative_phase(a, b, x, &mut phase) }, GgpStatus::Ok);
    assert_eq!(phase, 0.0);
    assert_eq!(unsafe { ggp_state_dim(a) }, 2);
    unsafe {
        ggp_observable_free(x);
        ggp_state_free(a);
        ggp_state_free(b);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let z = [0.0, 0.0];
    let st = unsafe { ggp_state_new(z.as_ptr(), z.as_ptr(), 2, &mut out) };
    assert_eq!(st, GgpStatus::InvalidArgument);
    assert!(!last_error().is_empty());

    let (re, im) = ([0.0, 1.0, 0.0, 0.0], [0.0; 4]);
    let mut o = ptr::null_mut();
    assert_eq!(
        unsafe { ggp_observable_new(re.as_ptr(), im.as_ptr(), 2, &mut o) },
        GgpStatus::InvalidArgument
    );
    assert!(o.is_null());

    let mut v = 0.0;
    assert_eq!(
        unsafe { ggp_relative_phase(ptr::null(), ptr::null(), ptr::null(), &mut v) },
        GgpStatus::NullPointer
    );

    let a = state(&[1.0, 0.0], &[0.0, 0.0]);
    let b = state(&[0.0, 1.0], &[0.0, 0.0]);
    let mut id = ptr::null_mut();
    unsafe { ggp_observable_identity(2, &mut id) };
    assert_eq!(
        unsafe { ggp_relative_phase(a, b, id, &mut v) },
        GgpStatus::UndefinedPhase
    );
    let c = state(&[1.0, 0.0, 0.0], &[0.0; 3]);
    assert_eq!(
        unsafe { ggp_relative_phase(a, c, id, &mut v) },
        GgpStatus::DimensionMismatch
    );
    unsafe {
        ggp_observable_free(id);
        ggp_state_free(a);
        ggp_state_free(b);
        ggp_state_free(c);
        ggp_state_free(ptr::null_mut());
    }
}

#[test]
fn closed_forms_through_the_abi() {
    let mut g = 0.0;
    let st = unsafe { ggp_two_level_phase(GgpTwoLevelKind::SwapX, PI / 2.0, PI / 3.0, &mut g) };
    assert_eq!(st, GgpStatus::Ok);
    assert!((g - PI / 3.0).abs() < 1e-12);
    assert_eq!(
        unsafe { ggp_two_level_phase(GgpTwoLevelKind::SwapX, PI, 0.3, &mut g) },
        GgpStatus::UndefinedPhase
    );

    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { ggp_f_mn(0.0, 0.0, 0.0, 2.0, &mut re, &mut im) }, GgpStatus::Ok);
    assert!((re - 8.0 / 6.0).abs() < 1e-14 && im.abs() < 1e-15);
    assert_eq!(
        unsafe { ggp_f_mn(0.0, f64::NAN, 0.0, 1.0, &mut re, &mut im) },
        GgpStatus::InvalidArgument
    );

    assert_eq!(
        unsafe { ggp_separable_amplitude(1.0, -0.1, 1.0, 0.5, &mut re, &mut im) },
        GgpStatus::Ok
    );
    let mut resid = 1.0;
    assert_eq!(
        unsafe { ggp_optical_residual(1.0, -0.1, 1.0, 0.5, &mut resid) },
        GgpStatus::Ok
    );
    assert!(resid < 1e-8);
    assert!((im - 0.5 * (re * re + im * im)).abs() < 1e-8);
}

#[test]
fn run_job_json_round_trip() {
    let job = CString::new(r#"{"command":"two-level","kind":"swap_x","theta":1.0,"phi":0.5}"#).unwrap();
    let mut report = ptr::null_mut();
    let mut code = 9u8;
    assert_eq!(
        unsafe { ggp_run_job_json(job.as_ptr(), &mut report, &mut code) },
        GgpStatus::Ok
    );
    assert_eq!(code, 0);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { ggp_string_free(report) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "ok");

    let bad = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { ggp_run_job_json(bad.as_ptr(), &mut report, &mut code) },
        GgpStatus::Parse
    );

    let domain = CString::new(r#"{"command":"two-level","kind":"swap_x","theta":0.0,"phi":0.5}"#).unwrap();
    assert_eq!(
        unsafe { ggp_run_job_json(domain.as_ptr(), &mut report, &mut code) },
        GgpStatus::Ok
    );
    assert_eq!(code, 2);
    unsafe { ggp_string_free(report) };
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ggp.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "ggp_chain_phase",
        "ggp_run_job_json",
        "GGP_STATUS_UNDEFINED_PHASE",
        "GgpPhaseResult",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99"])
        .arg(&header)
        .output()
    else {
        eprintln!("cc unavailable, syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
