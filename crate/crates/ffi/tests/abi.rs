use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use su11_ffi::*;

fn new_config(g1: f64, g2: f64, t_a: f64, t_b: f64, eta: f64) -> *mut Su11Config {
    let mut handle = ptr::null_mut();
    let status = unsafe { su11_config_new(g1, g2, t_a, t_b, eta, eta, 0.0, 0.0, &mut handle) };
    assert_eq!(status, Su11Status::Ok);
    assert!(!handle.is_null());
    handle
}

fn last_error() -> String {
    let p = su11_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn invalid_config_names_the_field() {
    let mut handle = ptr::null_mut();
    let status = unsafe { su11_config_new(0.05, 0.05, 1.5, 1.0, 1.0, 1.0, 0.0, 0.0, &mut handle) };
    assert_eq!(status, Su11Status::OutOfRange);
    assert!(handle.is_null());
    assert!(last_error().contains("t_a"));
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(
            su11_config_new(0.05, 0.05, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, ptr::null_mut()),
            Su11Status::NullPointer
        );
        let mut out = Su11ClickProbabilities::default();
        assert_eq!(su11_analytic_click_probabilities(ptr::null(), &mut out), Su11Status::NullPointer);
        let c = new_config(0.05, 0.05, 1.0, 1.0, 1.0);
        assert_eq!(su11_analytic_click_probabilities(c, ptr::null_mut()), Su11Status::NullPointer);
        su11_config_free(c);
        su11_config_free(ptr::null_mut());
    }
}

#[test]
fn analytic_bogoliubov_and_fock_agree_at_low_gain() {
    let c = new_config(0.01, 0.01, 0.9, 0.8, 0.7);
    unsafe {
        let mut analytic = Su11ClickProbabilities::default();
        let mut fock = Su11ClickProbabilities::default();
        let mut leakage = f64::NAN;
        let mut moments = Su11Moments::default();
        assert_eq!(su11_analytic_click_probabilities(c, &mut analytic), Su11Status::Ok);
        assert_eq!(su11_fock_click_probabilities(c, 6, &mut fock, &mut leakage), Su11Status::Ok);
        assert_eq!(su11_bogoliubov_moments(c, &mut moments), Su11Status::Ok);
        assert!((analytic.p_a - fock.p_a).abs() < 1e-6);
        assert!((analytic.p_cc - fock.p_cc).abs() < 1e-6);
        assert!((analytic.p_b - moments.n_b).abs() < 1e-6);
        assert!(leakage < 1e-6);

        let mut defect = f64::NAN;
        assert_eq!(su11_bogoliubov_pseudo_unitarity_defect(c, &mut defect), Su11Status::Ok);
        assert!(defect < 1e-12);
        su11_config_free(c);
    }
}

#[test]
fn fisher_and_visibility() {
    let c = new_config(0.05, 0.05, 1.0, 1.0, 1.0);
    unsafe {
        let mut v = Su11Visibilities::default();
        assert_eq!(su11_analytic_visibilities(c, &mut v), Su11Status::Ok);
        assert!((v.v_cc - 1.0).abs() < 1e-12 && v.defined_cc);

        let mut r = Su11FisherReport::default();
        assert_eq!(su11_analytic_fisher(c, Su11Observable::Coincidences, &mut r), Su11Status::Ok);
        let expected = 4.0 * 0.05f64.powi(2);
        assert!((r.fi_max - expected).abs() < 1e-12);

        let mut n = Su11FisherReport::default();
        assert_eq!(su11_fock_fisher(c, 8, Su11Observable::Coincidences, 1e-4, &mut n), Su11Status::Ok);
        assert!((n.fi_max - expected).abs() / expected < 0.05);

        assert_eq!(su11_fock_fisher(c, 8, Su11Observable::SinglesA, 1.0, &mut n), Su11Status::InvalidArgument);
        su11_config_free(c);
    }
}

#[test]
fn out_of_regime_and_gain_update() {
    let c = new_config(0.05, 0.05, 1.0, 1.0, 1.0);
    unsafe {
        assert_eq!(su11_config_set_g2(c, 0.5), Su11Status::Ok);
        let mut p = Su11ClickProbabilities::default();
        assert_eq!(su11_analytic_click_probabilities(c, &mut p), Su11Status::OutOfRegime);
        assert!(last_error().contains("regime"));
        assert_eq!(su11_config_set_g2(c, -1.0), Su11Status::OutOfRange);
        su11_config_free(c);
    }
}

#[test]
fn advantage_landmarks() {
    unsafe {
        for (t, conditional, unconditional) in [(0.6, true, false), (0.75, true, true), (0.4, false, false)] {
            let c = new_config(0.05, 5.0, t, t, 1.0);
            let mut a = Su11Advantage::default();
            assert_eq!(
                su11_advantage(c, 1.0, Su11Observable::SinglesA, Su11AdvantageKind::Conditional, &mut a),
                Su11Status::Ok
            );
            assert_eq!(a.holds, conditional, "T = {t}");
            assert_eq!(
                su11_advantage(c, 1.0, Su11Observable::SinglesA, Su11AdvantageKind::Unconditional, &mut a),
                Su11Status::Ok
            );
            assert_eq!(a.holds, unconditional, "T = {t}");
            assert_eq!(a.has_threshold, !a.threshold_gain_ratio.is_nan());
            su11_config_free(c);
        }
    }
}

#[test]
fn region_with_unit_efficiency_reports_the_limit() {
    unsafe {
        let c = new_config(0.05, 0.05, 0.2, 0.22, 1.0);
        let mut r = Su11RegionVerdict {
            region: Su11Region::Always,
            alpha: 0.0,
            beta: 0.0,
            limit_only: false,
        };
        assert_eq!(su11_singles_region(c, Su11Observable::SinglesA, &mut r), Su11Status::Ok);
        assert!(r.limit_only);
        assert_eq!(r.region, Su11Region::Never);
        su11_config_free(c);

        let c = new_config(0.05, 0.05, 0.2, 0.22, 0.9);
        assert_eq!(su11_singles_region(c, Su11Observable::SinglesA, &mut r), Su11Status::Ok);
        assert!(!r.limit_only);
        assert_eq!(r.region, Su11Region::BetaOnly);
        assert!((r.beta - 1.4436).abs() < 1e-3);
        su11_config_free(c);
    }
}

#[test]
fn errors_are_thread_local() {
    let mut handle = ptr::null_mut();
    unsafe { su11_config_new(-1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, &mut handle) };
    assert!(last_error().contains("g1"));
    let other = std::thread::spawn(|| su11_last_error_message().is_null()).join().unwrap();
    assert!(other);
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/su11.h")).expect("generated by build.rs");
    for name in [
        "typedef struct Su11Config Su11Config",
        "su11_config_new",
        "su11_config_free",
        "su11_last_error_message",
        "su11_fock_fisher",
        "SU11_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
    // syntax check only; skipped when no C compiler is installed
    let tmp = tempfile_path("su11_header_check.c");
    std::fs::write(&tmp, "#include \"su11.h\"\nint main(void) { return SU11_STATUS_OK; }\n").unwrap();
    let result = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&tmp)
        .output();
    let _ = std::fs::remove_file(&tmp);
    match result {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("cc not found; header syntax check skipped"),
    }
}

fn tempfile_path(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("{}_{name}", std::process::id()))
}
