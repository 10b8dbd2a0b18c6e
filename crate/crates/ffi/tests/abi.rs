use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nctorus_ffi::*;

const THETA: f64 = std::f64::consts::SQRT_2 - 1.0;

fn bundle(c: i64, d: i64, tau_im: f64) -> *mut NctBundle {
    let mut h = ptr::null_mut();
    let s = unsafe { nct_bundle_new(c, d, 1, THETA, 0.0, tau_im, 0.0, 0.0, &mut h) };
    assert_eq!(s, NctStatus::Ok);
    h
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(nct_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn cohomology_through_handle() {
    let h = bundle(2, 1, -1.0);
    let (mut h0, mut h1, mut gap) = (0usize, 0usize, 0.0);
    assert_eq!(unsafe { nct_cohomology(h, 48, &mut h0, &mut h1, &mut gap) }, NctStatus::Ok);
    assert_eq!((h0, h1), (2, 0));
    assert!(gap >= 100.0);
    let (mut rk, mut mu) = (0.0, 0.0);
    assert_eq!(unsafe { nct_bundle_rank(h, &mut rk, &mut mu) }, NctStatus::Ok);
    assert!((rk - (2.0 * THETA + 1.0)).abs() < 1e-15);
    unsafe { nct_bundle_free(h) };
}

#[test]
fn q_bound_and_curvature() {
    let h = bundle(1, 1, -1.0);
    let mut q = 0.0;
    assert_eq!(unsafe { nct_q_bound(h, &mut q) }, NctStatus::Ok);
    assert!((q - 0.33546913348270696).abs() < 1e-12);
    let (mut m, mut e) = (0.0, 0.0);
    assert_eq!(unsafe { nct_curvature(h, 7, &mut m, &mut e) }, NctStatus::Ok);
    assert!((m - e).abs() < 1e-8 * e.abs());
    unsafe { nct_bundle_free(h) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut h = ptr::null_mut();
    let s = unsafe { nct_bundle_new(2, 4, 1, THETA, 0.0, -1.0, 0.0, 0.0, &mut h) };
    assert_eq!(s, NctStatus::NotCoprime);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let s = unsafe { nct_bundle_new(-3, 1, 1, THETA, 0.0, -1.0, 0.0, 0.0, &mut h) };
    assert_eq!(s, NctStatus::NonPositiveRank);

    let s = unsafe { nct_bundle_new(1, 1, 1, THETA, 0.0, -1.0, 0.0, 0.0, ptr::null_mut()) };
    assert_eq!(s, NctStatus::NullPointer);

    let s = unsafe { nct_bundle_new(1, 1, 1, THETA, 0.0, 0.0, 0.0, 0.0, &mut h) };
    assert_eq!(s, NctStatus::InvalidParameter);
    assert!(last_error().contains("tau"));

    let h = bundle(1, 1, -1.0);
    let (mut h0, mut h1, mut gap) = (0usize, 0usize, 0.0);
    let s = unsafe { nct_cohomology(ptr::null(), 32, &mut h0, &mut h1, &mut gap) };
    assert_eq!(s, NctStatus::NullPointer);
    unsafe { nct_bundle_free(h) };
    unsafe { nct_bundle_free(ptr::null_mut()) };
}

#[test]
fn morita_and_ample_entries() {
    let mut m = NctMorita::default();
    assert_eq!(unsafe { nct_morita_info(-2, 3, THETA, &mut m) }, NctStatus::Ok);
    assert_eq!((m.a, m.b), (1, -1));
    assert_eq!(m.a * 3 - m.b * -2, 1);
    assert!((m.theta_prime - (THETA - 1.0) / (3.0 - 2.0 * THETA)).abs() < 1e-14);
    assert_eq!(m.dual_c, 2);

    let (mut c, mut d) = (0, 0);
    assert_eq!(unsafe { nct_ample_entry(THETA, 2, 1.0, &mut c, &mut d) }, NctStatus::Ok);
    assert_eq!((c, d), (-2, 3));
    assert_eq!(nct_euler_form(-1, 2, 1, 1), 3);
}

fn target_dir() -> PathBuf {
    // tests/abi-<hash> lives in target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libnctorus_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(root.join("tests/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "h0=2 h1=0 status=4");
}
