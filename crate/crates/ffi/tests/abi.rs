use std::ffi::{CStr, CString};
use std::ptr;

use stab_lab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(stab_last_error()) }.to_string_lossy().into_owned()
}

fn model(m: u32, n: u32) -> *mut StabModel {
    let profile = CString::new("linear").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { stab_model_new(m, n, 2.0, 1.0, 1.0, profile.as_ptr(), &mut h) }, StabStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn ledger_round_trip() {
    unsafe {
        let m = model(2, 3);
        let mut k = ptr::null_mut();
        assert_eq!(stab_ledger_derive(m, &mut k), StabStatus::Ok);
        let mut v = 0.0;
        for (name, want) in [("k2", 51.0), ("k3", 34.0)] {
            let c = CString::new(name).unwrap();
            assert_eq!(stab_ledger_get(k, c.as_ptr(), &mut v), StabStatus::Ok);
            assert_eq!(v, want);
        }
        let mut holds = false;
        assert_eq!(stab_ledger_invariants_hold(k, m, &mut holds), StabStatus::Ok);
        assert!(holds);

        let mut json = ptr::null_mut();
        assert_eq!(stab_ledger_to_json(k, &mut json), StabStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        stab_string_free(json);
        assert!(text.contains("\"k2\":51.0"), "{text}");

        let mut pass = false;
        let mut worst = 0.0;
        let v1 = CString::new("v1").unwrap();
        assert_eq!(stab_verify(m, k, v1.as_ptr(), 2000, 3, &mut pass, &mut worst), StabStatus::Ok);
        assert!(pass);
        let c1 = CString::new("c1").unwrap();
        assert_eq!(stab_ledger_set(k, c1.as_ptr(), 0.1), StabStatus::Ok);
        assert_eq!(stab_verify(m, k, v1.as_ptr(), 2000, 3, &mut pass, &mut worst), StabStatus::Ok);
        assert!(!pass && worst > 0.0);

        let bogus = CString::new("zz").unwrap();
        assert_eq!(stab_ledger_get(k, bogus.as_ptr(), &mut v), StabStatus::InvalidParams);
        assert!(last_error().contains("zz"));
        stab_ledger_free(k);
        stab_model_free(m);
    }
}

#[test]
fn invalid_model_and_nulls() {
    unsafe {
        let profile = CString::new("linear").unwrap();
        let mut h = ptr::NonNull::<StabModel>::dangling().as_ptr();
        assert_eq!(stab_model_new(2, 3, 1.0, 1.0, 1.0, profile.as_ptr(), &mut h), StabStatus::InvalidParams);
        assert!(h.is_null());
        assert!(last_error().contains("q"));
        assert_eq!(stab_model_new(2, 3, 2.0, 1.0, 1.0, ptr::null(), &mut h), StabStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(stab_global_v(ptr::null(), ptr::null(), 0.0, 0.0, &mut v), StabStatus::NullPointer);
        stab_model_free(ptr::null_mut());
        stab_trajectory_free(ptr::null_mut());
        stab_string_free(ptr::null_mut());
        assert_eq!(stab_trajectory_len(ptr::null()), 0);
        stab_drift(ptr::null(), 0.0, 0.0, ptr::null_mut(), ptr::null_mut());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn drift_blowup_and_simulation() {
    unsafe {
        let m = model(3, 2);
        let (mut fx, mut fy) = (0.0, 0.0);
        assert_eq!(stab_drift(m, 1.0, 1.0, &mut fx, &mut fy), StabStatus::Ok);
        assert!(fx.is_finite() && fy.is_finite());

        let mut has = false;
        let mut t = 0.0;
        assert_eq!(stab_blowup_time(m, 1.0, 1.0, &mut has, &mut t), StabStatus::Ok);
        assert!(has && (t - 1.0).abs() < 1e-12);
        assert_eq!(stab_blowup_time(m, 0.0, 1.0, &mut has, &mut t), StabStatus::Ok);
        assert!(!has);

        let mut tr = ptr::null_mut();
        assert_eq!(stab_simulate(m, StabScheme::TamedEuler, 1e-3, 500, 1, 1.0, 1.0, &mut tr), StabStatus::Ok);
        assert_eq!(stab_trajectory_len(tr), 501);
        assert!(!stab_trajectory_blowup(tr));
        let (mut tt, mut x, mut y) = (0.0, 0.0, 0.0);
        assert_eq!(stab_trajectory_get(tr, 500, &mut tt, &mut x, &mut y), StabStatus::Ok);
        assert!((tt - 0.5).abs() < 1e-12 && x.is_finite() && y.is_finite());
        assert_eq!(stab_trajectory_get(tr, 501, &mut tt, &mut x, &mut y), StabStatus::InvalidParams);
        stab_trajectory_free(tr);

        assert_eq!(stab_simulate(m, StabScheme::Euler, 0.0, 10, 1, 1.0, 1.0, &mut tr), StabStatus::InvalidParams);
        assert!(tr.is_null());
        stab_model_free(m);

        let eq = model(2, 2);
        assert_eq!(stab_blowup_time(eq, 1.0, 1.0, &mut has, &mut t), StabStatus::InvalidParams);
        stab_model_free(eq);
    }
}

#[test]
fn metric_and_fit() {
    let ax = [0.0, 1.0, 2.0];
    let ay = [0.0; 3];
    let bx = [3.0, 4.0, 5.0];
    let mut w = 0.0;
    unsafe {
        assert_eq!(stab_wasserstein1(ax.as_ptr(), ay.as_ptr(), bx.as_ptr(), ay.as_ptr(), 3, &mut w), StabStatus::Ok);
    }
    assert!((w - 3.0).abs() < 1e-15);

    let t: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
    let d: Vec<f64> = t.iter().map(|t| 2.0 * (-0.7 * t).exp()).collect();
    let (mut cc, mut c, mut r2) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(stab_fit_exponential(t.as_ptr(), d.as_ptr(), 8, &mut cc, &mut c, &mut r2), StabStatus::Ok);
        assert!((cc - 2.0).abs() < 1e-12 && (c - 0.7).abs() < 1e-12);
        assert_eq!(stab_fit_exponential(t.as_ptr(), d.as_ptr(), 2, &mut cc, &mut c, &mut r2), StabStatus::FitUnavailable);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(stab_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
