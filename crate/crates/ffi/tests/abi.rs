use std::ffi::{CStr, CString};
use std::ptr;

use fountcast_ffi::*;

const CREW: &str = r#"{
  "layers": { "preset": "crew" },
  "classes": [
    { "highest_layer": 2, "prior": 0.5, "distribution": { "preset": "delta-ii" }, "alphas": [0.33, 0.19], "betas": [1, 0] },
    { "highest_layer": 3, "prior": 0.5, "distribution": { "preset": "delta-iv" }, "alphas": [0.33, 0.19, 0.35], "betas": [1, 0, 0] }
  ],
  "service": { "n_max": 13000 }
}"#;

fn last_error() -> Option<String> {
    let p = fc_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn scenario(json: &str) -> (FcStatus, *mut FcScenario) {
    let text = CString::new(json).unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { fc_scenario_from_json(text.as_ptr(), &mut s) };
    (st, s)
}

#[test]
fn solve_and_read_back() {
    let (st, s) = scenario(CREW);
    assert_eq!(st, FcStatus::Ok, "{:?}", last_error());
    unsafe {
        let mut n = 0;
        assert_eq!(fc_scenario_n_max(s, &mut n), FcStatus::Ok);
        assert_eq!(n, 13_000);

        let mut a = ptr::null_mut();
        assert_eq!(fc_solve(s, FcSolver::Convex, 0, &mut a), FcStatus::Ok);
        assert!(last_error().is_none());
        let mut layers = 0;
        assert_eq!(fc_allocation_layers(a, &mut layers), FcStatus::Ok);
        assert_eq!(layers, 3);
        let mut sum = 0;
        let mut prev = 0.0;
        for l in 0..layers {
            let (mut d, mut k) = (0.0, 0);
            assert_eq!(fc_allocation_layer(a, l, &mut d, &mut k), FcStatus::Ok);
            assert!(d >= prev && d <= 1.0);
            prev = d;
            sum += k;
        }
        let (mut u, mut umax, mut total, mut feasible) = (0.0, 0.0, 0, false);
        assert_eq!(fc_allocation_summary(a, &mut u, &mut umax, &mut total, &mut feasible), FcStatus::Ok);
        assert!(feasible);
        assert_eq!(total, sum);
        assert!(total <= 13_000);
        assert!(u > 0.0 && u <= umax);

        let (mut d, mut k) = (0.0, 0);
        assert_eq!(fc_allocation_layer(a, 3, &mut d, &mut k), FcStatus::InvalidArgument);
        assert!(last_error().unwrap().contains("out of range"));

        fc_allocation_free(a);
        fc_scenario_free(s);
    }
}

#[test]
fn gd_beats_eep() {
    let (_, s) = scenario(CREW);
    let utility = |solver| unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(fc_solve(s, solver, 0, &mut a), FcStatus::Ok);
        let (mut u, mut umax, mut total, mut feasible) = (0.0, 0.0, 0, false);
        fc_allocation_summary(a, &mut u, &mut umax, &mut total, &mut feasible);
        fc_allocation_free(a);
        u
    };
    assert!(utility(FcSolver::SimplifiedGd) >= utility(FcSolver::Eep));
    unsafe { fc_scenario_free(s) };
}

#[test]
fn infeasible_still_returns_handle() {
    let (_, s) = scenario(CREW);
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(fc_solve(s, FcSolver::Convex, 10, &mut a), FcStatus::Infeasible);
        assert!(!a.is_null());
        assert!(last_error().unwrap().contains("layer 1"));
        let (mut u, mut umax, mut total, mut feasible) = (0.0, 0.0, 0, true);
        assert_eq!(fc_allocation_summary(a, &mut u, &mut umax, &mut total, &mut feasible), FcStatus::Ok);
        assert!(!feasible);
        fc_allocation_free(a);
        fc_scenario_free(s);
    }
}

#[test]
fn dynamic_without_lambda_is_invalid() {
    let (_, s) = scenario(CREW);
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(fc_solve(s, FcSolver::Dynamic, 0, &mut a), FcStatus::InvalidArgument);
        assert!(a.is_null());
        assert!(last_error().unwrap().contains("lambda"));
        fc_scenario_free(s);
    }
}

#[test]
fn bad_inputs() {
    let (st, s) = scenario(r#"{ "layers": { "preset": "crew" } "#);
    assert_eq!(st, FcStatus::InvalidArgument);
    assert!(s.is_null());
    assert!(last_error().unwrap().contains("line"));

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { fc_scenario_from_json(ptr::null(), &mut out) }, FcStatus::NullPointer);
    assert_eq!(unsafe { fc_scenario_n_max(ptr::null(), ptr::null_mut()) }, FcStatus::NullPointer);

    let bytes = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { fc_scenario_from_json(bytes.as_ptr().cast(), &mut out) }, FcStatus::InvalidUtf8);

    // freeing null is a no-op
    unsafe {
        fc_scenario_free(ptr::null_mut());
        fc_allocation_free(ptr::null_mut());
    }
}

#[test]
fn outage_helpers() {
    let mut p = 0.0;
    assert_eq!(unsafe { fc_outage_model(1000, 1500, 0.8, &mut p) }, FcStatus::Ok);
    assert!(p > 0.0 && p < 1.0);
    let mut n = 0;
    assert_eq!(unsafe { fc_required_symbols(1000, 0.8, 1e-4, &mut n) }, FcStatus::Ok);
    let mut at = 0.0;
    unsafe { fc_outage_model(1000, n, 0.8, &mut at) };
    assert!(at <= 1e-4);
    assert_eq!(unsafe { fc_required_symbols(1000, 1.5, 1e-4, &mut n) }, FcStatus::InvalidArgument);
    assert!(last_error().is_some());
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(fc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
