use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use faultroute::model::Link;
use faultroute_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fr_last_error()) }.to_string_lossy().into_owned()
}

fn params(f1: f64, f2: f64, beta: f64, eta: f64) -> *mut FrParams {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { fr_params_new(f1, f2, beta, eta, &mut out) }, FrStatus::Ok);
    out
}

#[test]
fn invalid_params_report_code_and_message() {
    let mut out = ptr::null_mut();
    let st = unsafe { fr_params_new(0.5, 0.5, 0.0, 0.5, &mut out) };
    assert_eq!(st, FrStatus::InvalidParams);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let p = params(0.5, 0.5, 1.0, 0.5);
    assert!(last_error().is_empty());
    unsafe { fr_params_free(p) };
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { fr_params_new(0.5, 0.5, 1.0, 0.5, ptr::null_mut()) }, FrStatus::NullPointer);
    let mut v = std::mem::MaybeUninit::<FrVerdict>::uninit();
    let p = [0.25; 4];
    assert_eq!(unsafe { fr_check(ptr::null(), p.as_ptr(), v.as_mut_ptr()) }, FrStatus::NullPointer);
    unsafe {
        fr_params_free(ptr::null_mut());
        fr_rates_free(ptr::null_mut());
        fr_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn verdicts_match_core() {
    let p = [0.25; 4];
    for (eta, expected) in [
        (0.5, FrClassification::CertifiedStable),
        (1.0, FrClassification::CertifiedUnstable),
        (0.69, FrClassification::Indeterminate),
    ] {
        let h = params(0.5, 0.5, 1.0, eta);
        let mut v = std::mem::MaybeUninit::<FrVerdict>::uninit();
        assert_eq!(unsafe { fr_check(h, p.as_ptr(), v.as_mut_ptr()) }, FrStatus::Ok);
        let v = unsafe { v.assume_init() };
        assert_eq!(v.classification, expected, "eta {eta}");
        if v.sufficient_holds {
            let mut drift = 0.0;
            let st = unsafe { fr_sufficient_value(h, p.as_ptr(), v.theta.as_ptr(), &mut drift) };
            assert_eq!(st, FrStatus::Ok);
            assert_eq!(drift, v.drift);
            assert!(drift < 0.0);
        }
        unsafe { fr_params_free(h) };
    }
}

#[test]
fn bounds_bracket_closed_form() {
    let p = [0.4, 0.2, 0.2, 0.2];
    let h = params(0.5, 0.5, 1.0, 0.5);
    let mut b = std::mem::MaybeUninit::<FrBounds>::uninit();
    assert_eq!(unsafe { fr_throughput_bounds(h, p.as_ptr(), b.as_mut_ptr()) }, FrStatus::Ok);
    let b = unsafe { b.assume_init() };
    let mut closed = 0.0;
    assert_eq!(unsafe { fr_homogeneous_lower_bound(0.2, 0.2, &mut closed) }, FrStatus::Ok);
    assert!((closed - 1.0 / 1.4).abs() < 1e-12);
    assert!(b.lower >= closed - b.tolerance && b.lower <= b.upper);
    assert!(b.has_witness);
    unsafe { fr_params_free(h) };

    let mut c = 0.0;
    assert_eq!(unsafe { fr_correlation_bound(0.2, 0.0, &mut c) }, FrStatus::Ok);
    assert!((c - 1.0 / 1.32).abs() < 1e-12);
    assert_eq!(unsafe { fr_correlation_bound(0.2, 0.9, &mut c) }, FrStatus::Domain);
}

#[test]
fn rates_and_floor() {
    let mut lambda = [0.0; 16];
    for s in 0..4 {
        for t in 0..4 {
            if s != t {
                lambda[4 * s + t] = 1.0;
            }
        }
    }
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { fr_rates_new(lambda.as_ptr(), &mut r) }, FrStatus::Ok);
    let mut pi = [0.0; 4];
    assert_eq!(unsafe { fr_stationary_distribution(r, pi.as_mut_ptr()) }, FrStatus::Ok);
    for v in pi {
        assert!((v - 0.25).abs() < 1e-12);
    }
    unsafe { fr_rates_free(r) };

    lambda[1] = -1.0;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { fr_rates_new(lambda.as_ptr(), &mut r) }, FrStatus::InvalidParams);

    let h = params(0.5, 0.5, 1.0, 0.5);
    let mut floor = [0.0; 2];
    assert_eq!(unsafe { fr_congestion_floor(h, floor.as_mut_ptr()) }, FrStatus::Ok);
    let core = faultroute::model::NetworkParams::new(0.5, 0.5, 1.0, 0.5).unwrap();
    for (x, link) in floor.into_iter().zip([Link::One, Link::Two]) {
        assert_eq!(x, faultroute::stability::solve_congestion_floor(&core, link).unwrap());
    }
    unsafe { fr_params_free(h) };
}

#[test]
fn simulation_is_reproducible() {
    let h = params(0.5, 0.5, 1.0, 0.5);
    let p = [0.4, 0.2, 0.2, 0.2];
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { fr_rates_from_distribution(p.as_ptr(), 1.0, &mut r) }, FrStatus::Ok);
    let mut cfg = fr_sim_config_default();
    cfg.horizon = 100.0;
    cfg.seed = 11;

    let run = || {
        let mut t = ptr::null_mut();
        assert_eq!(unsafe { fr_simulate(h, r, &cfg, &mut t) }, FrStatus::Ok);
        let mut s = std::mem::MaybeUninit::<FrTrajectorySummary>::uninit();
        assert_eq!(unsafe { fr_trajectory_summary(t, s.as_mut_ptr()) }, FrStatus::Ok);
        let s = unsafe { s.assume_init() };
        let samples: Vec<(f64, u8, f64, f64)> = (0..s.samples)
            .map(|i| {
                let mut x = std::mem::MaybeUninit::<FrSample>::uninit();
                assert_eq!(unsafe { fr_trajectory_sample(t, i, x.as_mut_ptr()) }, FrStatus::Ok);
                let x = unsafe { x.assume_init() };
                (x.t, x.mode, x.x1, x.x2)
            })
            .collect();
        unsafe { fr_trajectory_free(t) };
        (s.jumps, s.end_time, samples)
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.1, 100.0);
    assert!(a.0 > 0);

    cfg.s0 = 9;
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { fr_simulate(h, r, &cfg, &mut t) }, FrStatus::Domain);
    unsafe {
        fr_rates_free(r);
        fr_params_free(h);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/abi-* -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libfaultroute_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(concat!("version=", env!("CARGO_PKG_VERSION"))), "{stdout}");
}
