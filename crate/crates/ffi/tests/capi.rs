use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use noonsim_ffi::*;

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { noonsim_string_free(p) };
    s
}

fn last_error() -> Option<String> {
    let p = noonsim_last_error();
    (!p.is_null()).then(|| take_string(p))
}

#[test]
fn state_round_trip_and_fidelity() {
    let mut state = ptr::null_mut();
    assert_eq!(unsafe { noonsim_state_dual_fock(2, &mut state) }, NoonsimStatus::Ok);
    let mut modes = 0usize;
    assert_eq!(unsafe { noonsim_state_mode_count(state, &mut modes) }, NoonsimStatus::Ok);
    assert_eq!(modes, 2);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { noonsim_state_to_json(state, &mut json) }, NoonsimStatus::Ok);
    let text = CString::new(take_string(json)).unwrap();
    let mut copy = ptr::null_mut();
    assert_eq!(unsafe { noonsim_state_from_json(text.as_ptr(), &mut copy) }, NoonsimStatus::Ok);

    let (mut fidelity, mut phase) = (0.0, 0.0);
    assert_eq!(unsafe { noonsim_noon_fidelity(copy, &mut fidelity, &mut phase) }, NoonsimStatus::Ok);
    // |2,2⟩ has no weight on |4,0⟩ or |0,4⟩.
    assert_eq!(fidelity, 0.0);
    unsafe {
        noonsim_state_free(state);
        noonsim_state_free(copy);
    }
}

#[test]
fn noon_input_has_unit_fidelity() {
    let json = CString::new(r#"{"modes":2,"terms":[{"occ":[3,0],"re":0.7071067811865476,"im":0.0},{"occ":[0,3],"re":0.0,"im":0.7071067811865476}]}"#).unwrap();
    let mut state = ptr::null_mut();
    assert_eq!(unsafe { noonsim_state_from_json(json.as_ptr(), &mut state) }, NoonsimStatus::Ok);
    let (mut fidelity, mut phase) = (0.0, 0.0);
    assert_eq!(unsafe { noonsim_noon_fidelity(state, &mut fidelity, &mut phase) }, NoonsimStatus::Ok);
    assert!((fidelity - 1.0).abs() < 1e-12);
    assert!((phase - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    unsafe { noonsim_state_free(state) };
}

#[test]
fn error_codes_and_messages() {
    let mut out = 0.0;
    assert_eq!(unsafe { noonsim_p_cond(3, 5, &mut out) }, NoonsimStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("r"));
    assert_eq!(unsafe { noonsim_p_cond(4, 2, &mut out) }, NoonsimStatus::Ok);
    assert!(last_error().is_none());
    assert!((out - 4900.0 / 7040.0).abs() < 1e-12);

    assert_eq!(unsafe { noonsim_delta0(1, 1, ptr::null_mut()) }, NoonsimStatus::NullPointer);
    assert_eq!(unsafe { noonsim_state_to_json(ptr::null(), &mut ptr::null_mut()) }, NoonsimStatus::NullPointer);

    let bad = CString::new("modes 3\nbs 1 2\n").unwrap();
    let mut program = ptr::null_mut();
    assert_eq!(unsafe { noonsim_program_parse(bad.as_ptr(), &mut program) }, NoonsimStatus::ParseError);
    assert!(last_error().unwrap().contains("line 2, column 7"));
    assert!(program.is_null());

    let invalid_utf8 = [0xffu8, 0xfe, 0];
    let status = unsafe { noonsim_program_parse(invalid_utf8.as_ptr().cast(), &mut program) };
    assert_eq!(status, NoonsimStatus::InvalidUtf8);

    unsafe {
        noonsim_string_free(ptr::null_mut());
        noonsim_state_free(ptr::null_mut());
        noonsim_program_free(ptr::null_mut());
    }
}

#[test]
fn bundled_pipeline_runs_through_the_c_api() {
    let name = CString::new("pipeline.qoc").unwrap();
    let source = unsafe { noonsim_bundled_program(name.as_ptr()) };
    assert!(!source.is_null());
    let missing = CString::new("nope.qoc").unwrap();
    assert!(unsafe { noonsim_bundled_program(missing.as_ptr()) }.is_null());

    let mut program = ptr::null_mut();
    assert_eq!(unsafe { noonsim_program_parse(source, &mut program) }, NoonsimStatus::Ok);
    let mut input = ptr::null_mut();
    assert_eq!(unsafe { noonsim_state_dual_fock(3, &mut input) }, NoonsimStatus::Ok);
    let params = CString::new(r#"{"N": 3, "f": 0.5}"#).unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { noonsim_program_run(program, input, params.as_ptr(), &mut json) }, NoonsimStatus::Ok);
    let branches: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    let total: f64 = branches
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["probability"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);

    // N has no default, so running without parameters is a runtime error.
    let status = unsafe { noonsim_program_run(program, input, ptr::null(), &mut json) };
    assert_eq!(status, NoonsimStatus::RuntimeError);
    unsafe {
        noonsim_program_free(program);
        noonsim_state_free(input);
    }
}

#[test]
fn generator_summary() {
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { noonsim_generate_summary(3, 0.5, 0, &mut json) }, NoonsimStatus::Ok);
    let summary: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert!((summary["total_probability"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(unsafe { noonsim_generate_summary(3, 0.5, 7, &mut json) }, NoonsimStatus::InvalidArgument);
    let version = unsafe { CStr::from_ptr(noonsim_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "noonsim.h"

int main(void) {
    double p = 0.0;
    if (noonsim_p_cond(4, 2, &p) != NOONSIM_STATUS_OK) return 1;
    if (p < 0.69 || p > 0.70) return 2;
    NoonsimProgram *prog = NULL;
    if (noonsim_program_parse("modes 1\nps 0 $\n", &prog) != NOONSIM_STATUS_PARSE_ERROR) return 3;
    char *msg = noonsim_last_error();
    if (msg == NULL || strstr(msg, "line 2") == NULL) return 4;
    noonsim_string_free(msg);
    NoonsimState *s = NULL;
    if (noonsim_state_dual_fock(1, &s) != NOONSIM_STATUS_OK) return 5;
    size_t modes = 0;
    noonsim_state_mode_count(s, &modes);
    noonsim_state_free(s);
    printf("ok %zu\n", modes);
    return modes == 2 ? 0 : 6;
}
"#;

#[test]
fn header_is_valid_c() {
    let header = header_dir().join("noonsim.h");
    assert!(header.exists(), "build script did not write {}", header.display());
    let dir = std::env::temp_dir().join(format!("noonsim-capi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header_dir())
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(e) => eprintln!("skipping C compile check: no C compiler ({e})"),
    }
}

#[test]
fn c_program_links_against_static_library() {
    // Integration tests run from target/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libnoonsim_ffi.a");
    if !lib.exists() {
        eprintln!("skipping link check: {} not built", lib.display());
        return;
    }
    let dir = std::env::temp_dir().join(format!("noonsim-link-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
    else {
        eprintln!("skipping link check: no C compiler");
        return;
    };
    assert!(status.success(), "linking the C smoke test failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C smoke test exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok 2");
}
