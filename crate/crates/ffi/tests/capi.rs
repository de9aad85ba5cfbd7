use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gencal_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = gencal_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn reference_event(params: *const GencalParams) -> *mut GencalEvent {
    let mut ev = ptr::null_mut();
    let kind = cstr("voltage-dip");
    let rc = gencal_event_synth(params, kind.as_ptr(), 0.2, 1.0, 0.5, 10.0, 30.0, 0.8, -0.2, &mut ev);
    assert_eq!(rc, GENCAL_OK);
    ev
}

#[test]
fn params_round_trip_and_errors() {
    unsafe {
        let p = gencal_params_new();
        let h = cstr("H");
        assert_eq!(gencal_params_set(p, h.as_ptr(), 4.4), GENCAL_OK);
        let mut v = 0.0;
        assert_eq!(gencal_params_get(p, h.as_ptr(), &mut v), GENCAL_OK);
        assert_eq!(v, 4.4);

        let bogus = cstr("bogus");
        assert_eq!(gencal_params_get(p, bogus.as_ptr(), &mut v), GENCAL_ERR_CONFIG);
        assert!(last_error().contains("bogus"));
        assert_eq!(gencal_params_get(p, ptr::null(), &mut v), GENCAL_ERR_ARGUMENT);
        assert_eq!(gencal_params_get(ptr::null(), h.as_ptr(), &mut v), GENCAL_ERR_ARGUMENT);
        gencal_params_free(p);
        gencal_params_free(ptr::null_mut());
    }
}

#[test]
fn playback_matches_the_library() {
    unsafe {
        let p = gencal_params_new();
        let ev = reference_event(p);
        let n = gencal_event_len(ev);
        assert_eq!(n, 300);
        let (mut pp, mut qq) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(gencal_playback(p, ev, pp.as_mut_ptr(), qq.as_mut_ptr(), n), GENCAL_OK);

        let spec = gencal::DisturbanceSpec::default();
        let lib = gencal::events::synth_event(&gencal::ModelParameters::default(), &spec, 10.0, 30.0, 0.8, -0.2, None)
            .unwrap();
        for k in 0..n {
            assert!((pp[k] - lib.p_meas[k]).abs() < 1e-10);
            assert!((qq[k] - lib.q_meas[k]).abs() < 1e-10);
        }

        assert_eq!(
            gencal_playback(p, ev, pp.as_mut_ptr(), qq.as_mut_ptr(), n - 1),
            GENCAL_ERR_ARGUMENT
        );
        gencal_event_free(ev);
        gencal_params_free(p);
    }
}

#[test]
fn bad_disturbance_is_a_config_error() {
    unsafe {
        let p = gencal_params_new();
        let mut ev = ptr::null_mut();
        let kind = cstr("voltage-dip");
        let rc = gencal_event_synth(p, kind.as_ptr(), 1.5, 1.0, 0.5, 10.0, 30.0, 0.8, -0.2, &mut ev);
        assert_eq!(rc, GENCAL_ERR_CONFIG);
        assert!(last_error().contains("event.magnitude"));
        assert!(ev.is_null());
        let kind = cstr("earthquake");
        let rc = gencal_event_synth(p, kind.as_ptr(), 0.2, 1.0, 0.5, 10.0, 30.0, 0.8, -0.2, &mut ev);
        assert_eq!(rc, GENCAL_ERR_CONFIG);
        gencal_params_free(p);
    }
}

#[test]
fn infeasible_operating_point_is_a_simulation_error() {
    unsafe {
        let p = gencal_params_new();
        let mut ev = ptr::null_mut();
        let kind = cstr("voltage-dip");
        let rc = gencal_event_synth(p, kind.as_ptr(), 0.2, 1.0, 0.5, 10.0, 30.0, 50.0, -0.2, &mut ev);
        assert_eq!(rc, GENCAL_ERR_SIMULATION);
        gencal_params_free(p);
    }
}

#[test]
fn event_file_round_trip_and_sensitivity() {
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(dir.path().join("ev.csv").to_str().unwrap());
    unsafe {
        let p = gencal_params_new();
        let ev = reference_event(p);
        assert_eq!(gencal_event_save(ev, path.as_ptr()), GENCAL_OK);
        let mut back = ptr::null_mut();
        assert_eq!(gencal_event_load(path.as_ptr(), &mut back), GENCAL_OK);
        assert_eq!(gencal_event_len(back), 300);

        let (mut s_ka, mut s_ctl) = (0.0, 1.0);
        let (ka, ctl) = (cstr("KA"), cstr("Efd_min"));
        assert_eq!(gencal_sensitivity(p, back, ka.as_ptr(), 0.05, &mut s_ka), GENCAL_OK);
        assert_eq!(gencal_sensitivity(p, back, ctl.as_ptr(), 0.05, &mut s_ctl), GENCAL_OK);
        assert!(s_ka > 0.0);
        assert_eq!(s_ctl, 0.0);

        let missing = cstr(dir.path().join("nope.csv").to_str().unwrap());
        let mut none = ptr::null_mut();
        assert_eq!(gencal_event_load(missing.as_ptr(), &mut none), GENCAL_ERR_CONFIG);
        gencal_event_free(back);
        gencal_event_free(ev);
        gencal_params_free(p);
    }
}

#[test]
fn small_calibration_and_warm_start() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let p = gencal_params_new();
        let ev = reference_event(p);
        let names = [cstr("H"), cstr("KA")];
        let name_ptrs: Vec<_> = names.iter().map(|n| n.as_ptr()).collect();
        let (lower, upper) = ([2.9, 68.8], [8.9, 206.3]);
        let mut hyper = gencal_hyperparams_default();
        assert_eq!(hyper.gamma, 0.9);
        assert_eq!(hyper.n_episodes, 2000);
        hyper.n_episodes = 40;
        let mut cal = ptr::null_mut();
        let rc = gencal_calibrate(
            p,
            ev,
            name_ptrs.as_ptr(),
            lower.as_ptr(),
            upper.as_ptr(),
            2,
            0.05,
            &hyper,
            ptr::null(),
            &mut cal,
        );
        assert_eq!(rc, GENCAL_OK, "{}", last_error());
        assert_eq!(gencal_calibration_dims(cal), 2);
        let mut est = [0.0; 2];
        assert_eq!(gencal_calibration_estimate(cal, est.as_mut_ptr(), 2), GENCAL_OK);
        assert!(est[0] > 2.9 && est[0] < 8.9);
        assert!(gencal_calibration_best_eps(cal).is_finite());
        assert!(gencal_calibration_model_evaluations(cal) > 0);
        assert!(gencal_calibration_episodes_to_terminal(cal) >= -1);

        let qpath = dir.path().join("q.csv");
        let qc = cstr(qpath.to_str().unwrap());
        assert_eq!(gencal_calibration_save_qtable(cal, qc.as_ptr()), GENCAL_OK);
        assert!(std::fs::read_to_string(&qpath).unwrap().contains("state_index,action_index,value"));

        let mut warm = ptr::null_mut();
        let rc = gencal_calibrate(
            p,
            ev,
            name_ptrs.as_ptr(),
            lower.as_ptr(),
            upper.as_ptr(),
            2,
            0.05,
            &hyper,
            cal,
            &mut warm,
        );
        assert_eq!(rc, GENCAL_OK);

        // A warm table from a different grid is rejected.
        let mut bad = ptr::null_mut();
        let rc = gencal_calibrate(
            p,
            ev,
            name_ptrs.as_ptr(),
            lower.as_ptr(),
            upper.as_ptr(),
            2,
            0.1,
            &hyper,
            cal,
            &mut bad,
        );
        assert_eq!(rc, GENCAL_ERR_CONFIG);
        assert!(bad.is_null());

        gencal_calibration_free(warm);
        gencal_calibration_free(cal);
        gencal_event_free(ev);
        gencal_params_free(p);
    }
}

#[test]
fn header_declares_the_api() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/gencal.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "gencal_last_error",
        "gencal_params_new",
        "gencal_event_synth",
        "gencal_playback",
        "gencal_sensitivity",
        "gencal_calibrate",
        "gencal_calibration_free",
        "typedef struct GencalEvent GencalEvent",
        "#define GENCAL_ERR_SIMULATION 3",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("libgencal_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "gencal.h"

int main(void) {
    GencalParams *p = gencal_params_new();
    GencalEvent *ev = NULL;
    if (gencal_event_synth(p, "voltage-dip", 0.2, 1.0, 0.5, 10.0, 30.0, 0.8, -0.2, &ev) != GENCAL_OK) return 10;
    double s = -1.0;
    if (gencal_sensitivity(p, ev, "Efd_min", 0.05, &s) != GENCAL_OK || s != 0.0) return 11;
    if (gencal_sensitivity(p, ev, "nope", 0.05, &s) != GENCAL_ERR_CONFIG) return 12;
    printf("%zu %s\n", gencal_event_len(ev), gencal_last_error());
    gencal_event_free(ev);
    gencal_params_free(p);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("running cc");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("300 unknown parameter `nope`"), "{stdout}");
}
