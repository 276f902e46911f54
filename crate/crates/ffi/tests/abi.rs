use std::ffi::{CStr, CString};
use std::ptr;

use spreadcp_ffi::*;

fn model(d: usize, eps: f64, lambda: f64, n_max: usize) -> *mut SpcpModel {
    let mut m = ptr::null_mut();
    let s = unsafe { spcp_model_new(d, 1, eps, lambda, n_max, 0, &mut m) };
    assert_eq!(s, SpcpStatus::Ok);
    m
}

fn values(f: *const SpcpField) -> Vec<f64> {
    let n = unsafe { spcp_field_len(f) };
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { spcp_field_copy(f, buf.as_mut_ptr(), n) }, SpcpStatus::Ok);
    buf
}

#[test]
fn exact_round_trip_through_handles() {
    let m = model(1, 1.0, 0.9, 3);
    let mut tau = ptr::null_mut();
    let mut pi = ptr::null_mut();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(spcp_exact_two_point(m, &mut tau), SpcpStatus::Ok);
        assert_eq!(spcp_invert_to_pi(tau, m, &mut pi), SpcpStatus::Ok);
        assert_eq!(spcp_forward_solve(pi, m, &mut back), SpcpStatus::Ok);
    }
    let (a, b) = (values(tau), values(back));
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff}");

    let (mut d, mut n, mut r) = (0, 0, 0);
    assert_eq!(unsafe { spcp_field_shape(tau, &mut d, &mut n, &mut r) }, SpcpStatus::Ok);
    assert_eq!((d, n, r), (1, 3, 3));
    assert_eq!(a.len(), 4 * 7);

    // tau at (2, x = 2) is (lambda / 2)^2
    let mut v = 0.0;
    assert_eq!(unsafe { spcp_field_get(tau, 2, [2i64].as_ptr(), &mut v) }, SpcpStatus::Ok);
    assert!((v - 0.2025).abs() < 1e-15);
    unsafe {
        spcp_field_free(tau);
        spcp_field_free(pi);
        spcp_field_free(back);
        spcp_model_free(m);
    }
}

#[test]
fn random_walk_constants() {
    let m = model(2, 0.5, 1.0, 6);
    let mut delta = ptr::null_mut();
    let mut tau = ptr::null_mut();
    let mut c = SpcpLaceConstants::default();
    let mut chi = 0.0;
    unsafe {
        assert_eq!(spcp_field_delta(m, &mut delta), SpcpStatus::Ok);
        assert_eq!(spcp_lace_constants(delta, m, 1.0, &mut c), SpcpStatus::Ok);
        assert_eq!(spcp_forward_solve(delta, m, &mut tau), SpcpStatus::Ok);
        assert_eq!(spcp_susceptibility(tau, &mut chi), SpcpStatus::Ok);
    }
    assert_eq!((c.lambda_c_eps, c.a_eps, c.v_eps), (1.0, 1.0, 1.0));
    // total mass is 1 at every slice when lambda = 1
    assert!((chi - 0.5 * 7.0).abs() < 1e-12);
    unsafe {
        spcp_field_free(delta);
        spcp_field_free(tau);
        spcp_model_free(m);
    }
}

#[test]
fn errors_map_to_codes() {
    let mut m = ptr::null_mut();
    let s = unsafe { spcp_model_new(1, 1, 1.5, 1.0, 2, 0, &mut m) };
    assert_eq!(s, SpcpStatus::Validation);
    assert!(m.is_null());
    let msg = unsafe { CStr::from_ptr(spcp_last_error()) }.to_string_lossy().into_owned();
    assert!(msg.contains("eps"), "{msg}");

    let big = model(2, 1.0, 1.0, 3);
    let mut tau = ptr::null_mut();
    assert_eq!(unsafe { spcp_exact_two_point(big, &mut tau) }, SpcpStatus::Cap);
    assert_eq!(unsafe { spcp_exact_two_point(ptr::null(), &mut tau) }, SpcpStatus::NullPointer);

    let small = model(1, 1.0, 1.0, 1);
    assert_eq!(unsafe { spcp_exact_two_point(small, &mut tau) }, SpcpStatus::Ok);
    assert!(spcp_last_error().is_null());
    let mut v = 0.0;
    let s = unsafe { spcp_field_get(tau, 0, [5i64].as_ptr(), &mut v) };
    assert_eq!(s, SpcpStatus::Validation);
    let mut buf = [0.0; 2];
    assert_eq!(unsafe { spcp_field_copy(tau, buf.as_mut_ptr(), 2) }, SpcpStatus::Validation);
    unsafe {
        spcp_field_free(tau);
        spcp_model_free(big);
        spcp_model_free(small);
        spcp_model_free(ptr::null_mut());
    }
}

#[test]
fn mc_estimate_is_seeded() {
    let m = model(1, 0.5, 1.0, 4);
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(spcp_estimate_two_point(m, 500, 9, &mut a), SpcpStatus::Ok);
        assert_eq!(spcp_estimate_two_point(m, 500, 9, &mut b), SpcpStatus::Ok);
    }
    assert_eq!(values(a), values(b));
    unsafe {
        spcp_field_free(a);
        spcp_field_free(b);
        spcp_model_free(m);
    }
}

#[test]
fn runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rw.toml");
    std::fs::write(
        &cfg,
        "kind = \"rw\"\n[model]\nd = 1\nL = 2\neps = 0.25\nlambda = 0.8\nn_max = 6\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let o = CString::new(out.to_str().unwrap()).unwrap();
    std::env::set_var("SPREADCP_STORE", dir.path().join("store"));
    assert_eq!(unsafe { spcp_run_config(c.as_ptr(), o.as_ptr()) }, SpcpStatus::Ok);
    assert!(out.join("summary.json").exists());
    assert_eq!(unsafe { spcp_run_config(ptr::null(), o.as_ptr()) }, SpcpStatus::NullPointer);
    let v = unsafe { CStr::from_ptr(spcp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/spreadcp.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ SpcpModel *m = 0; SpcpStatus s = spcp_model_new(1, 1, 1.0, 1.0, 2, 0, &m); return (int)s; }}\n"
        ),
    )
    .unwrap();
    let Ok(out) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
