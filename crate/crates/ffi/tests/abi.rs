use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use sngbench_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { sng_string_free(s) };
    out
}

fn last_error() -> String {
    let p = sng_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn bundled(id: &str) -> *mut SngScenario {
    let id = CString::new(id).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { sng_scenario_bundled(id.as_ptr(), &mut h) },
        SngStatus::Ok
    );
    h
}

#[test]
fn evaluate_returns_report_json() {
    let h = bundled("straight_empty");
    let arm =
        CString::new(r#"{"planner":"sng","nav":"sng","sampling":"4x10","tbt":true}"#).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { sng_evaluate(h, arm.as_ptr(), 3, &mut out) };
    assert_eq!(status, SngStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(report["scenario_id"], "straight_empty");
    assert_eq!(report["seed"], 3);
    assert!(sng_last_error().is_null());
    unsafe { sng_scenario_free(h) };
}

#[test]
fn scenario_json_round_trip() {
    let h = bundled("roundabout_n4_exit1_r15");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sng_scenario_to_json(h, &mut json) }, SngStatus::Ok);
    let text = CString::new(take(json)).unwrap();
    let mut h2 = ptr::null_mut();
    assert_eq!(
        unsafe { sng_scenario_from_json(text.as_ptr(), &mut h2) },
        SngStatus::Ok
    );
    assert!(!h2.is_null());
    unsafe {
        sng_scenario_free(h);
        sng_scenario_free(h2);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { sng_scenario_bundled(ptr::null(), &mut h) },
        SngStatus::NullPointer
    );
    assert!(h.is_null());

    let bad = CString::new("{\"id\": 3").unwrap();
    assert_eq!(
        unsafe { sng_scenario_from_json(bad.as_ptr(), &mut h) },
        SngStatus::InvalidScenario
    );
    assert!(!last_error().is_empty());

    let missing = CString::new("no_such_scenario").unwrap();
    assert_eq!(
        unsafe { sng_scenario_bundled(missing.as_ptr(), &mut h) },
        SngStatus::InvalidArgument
    );
    assert!(last_error().contains("no_such_scenario"));

    let s = bundled("straight_empty");
    let arm = CString::new(r#"{"planner":"command","nav":"sng","tbt":true}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { sng_evaluate(s, arm.as_ptr(), 0, &mut out) },
        SngStatus::InvalidArgument
    );
    assert!(out.is_null());
    unsafe { sng_scenario_free(s) };

    let raw = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { sng_scenario_bundled(raw.as_ptr().cast(), &mut h) },
        SngStatus::InvalidUtf8
    );
}

#[test]
fn ablation_handle() {
    let spec = CString::new(
        r#"{"scenario_ids":["straight_empty"],"seeds":[0,1],
            "arms":[{"planner":"command","nav":"command"},{"planner":"command","nav":"none"}]}"#,
    )
    .unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { sng_ablate(spec.as_ptr(), 1, &mut r) },
        SngStatus::Ok
    );
    assert_eq!(unsafe { sng_results_len(r) }, 4);
    let fmt = CString::new("csv").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { sng_results_table(r, fmt.as_ptr(), &mut out) },
        SngStatus::Ok
    );
    let csv = take(out);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("arm,nc,"));
    let bad = CString::new("xml").unwrap();
    assert_eq!(
        unsafe { sng_results_table(r, bad.as_ptr(), &mut out) },
        SngStatus::InvalidArgument
    );
    unsafe { sng_results_free(r) };
    assert_eq!(unsafe { sng_results_len(ptr::null()) }, 0);
}

#[test]
fn free_null_is_noop() {
    unsafe {
        sng_string_free(ptr::null_mut());
        sng_scenario_free(ptr::null_mut());
        sng_results_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(sng_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sngbench.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for name in [
        "sng_evaluate",
        "sng_ablate",
        "sng_last_error",
        "SNG_STATUS_PANIC",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"sngbench.h\"\nint main(void) { SngScenario *s = 0; return sng_scenario_bundled(\"x\", &s) == SNG_STATUS_OK; }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler, syntax check skipped");
        return;
    };
    assert!(status.success());
}
