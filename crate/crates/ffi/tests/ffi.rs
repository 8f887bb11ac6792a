use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gdarb_ffi::*;

fn last_error() -> String {
    let p = gdarb_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { gdarb_string_free(p) };
    s
}

fn catalog_model(name: &str, params: &[(&str, f64)]) -> (GdarbStatus, *mut GdarbModel) {
    let name = CString::new(name).unwrap();
    let keys: Vec<CString> = params.iter().map(|p| CString::new(p.0).unwrap()).collect();
    let key_ptrs: Vec<*const c_char> = keys.iter().map(|k| k.as_ptr()).collect();
    let values: Vec<f64> = params.iter().map(|p| p.1).collect();
    let mut out = ptr::null_mut();
    let st =
        unsafe { gdarb_model_from_catalog(name.as_ptr(), key_ptrs.as_ptr(), values.as_ptr(), params.len(), &mut out) };
    (st, out)
}

#[test]
fn sticky_model_through_the_c_interface() {
    let (st, m) = catalog_model("bachelier-sticky", &[("xi", 2.0), ("rho", 3.0), ("r", 0.05)]);
    assert_eq!(st, GdarbStatus::Ok);
    let mut v = std::mem::MaybeUninit::<GdarbVerdicts>::uninit();
    assert_eq!(unsafe { gdarb_model_verdicts(m, v.as_mut_ptr()) }, GdarbStatus::Ok);
    let v = unsafe { v.assume_init() };
    assert!(!v.nip && !v.qvip_exists && v.rp_holds);

    let mut count = 0usize;
    assert_eq!(unsafe { gdarb_model_nu_atoms(m, ptr::null_mut(), ptr::null_mut(), 0, &mut count) }, GdarbStatus::Ok);
    assert_eq!(count, 1);
    let (mut loc, mut mass) = ([0.0; 1], [0.0; 1]);
    assert_eq!(unsafe { gdarb_model_nu_atoms(m, loc.as_mut_ptr(), mass.as_mut_ptr(), 1, &mut count) }, GdarbStatus::Ok);
    assert_eq!(loc[0], 2.0);
    assert!((mass[0] + 0.3).abs() < 1e-15);

    let cfg = GdarbMcConfig { n_paths: 300, h: 0.02, ..gdarb_mc_config_default() };
    let mut r = std::mem::MaybeUninit::<GdarbIpReport>::uninit();
    assert_eq!(unsafe { gdarb_model_backtest(m, GdarbStrategy::Theta as i32, &cfg, r.as_mut_ptr()) }, GdarbStatus::Ok);
    let r = unsafe { r.assume_init() };
    assert_eq!(r.verdict, GdarbVerdict::IncreasingProfit);
    assert_eq!(r.n_paths, 300);
    assert_eq!(r.monotone_fraction, 1.0);

    let mut r2 = std::mem::MaybeUninit::<GdarbIpReport>::uninit();
    assert_eq!(unsafe { gdarb_model_backtest(m, GdarbStrategy::Hold as i32, &cfg, r2.as_mut_ptr()) }, GdarbStatus::Ok);
    let mut r2 = unsafe { r2.assume_init() };
    assert_eq!(r2.verdict, GdarbVerdict::Not);
    assert!(r2.route_error.is_nan());

    assert_eq!(unsafe { gdarb_model_backtest(m, 17, &cfg, &mut r2) }, GdarbStatus::InvalidArgument);
    let label = unsafe { gdarb_model_label(m) };
    assert_eq!(unsafe { CStr::from_ptr(label) }.to_str().unwrap(), "bachelier-sticky");
    unsafe {
        gdarb_string_free(label);
        gdarb_model_free(m);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let (st, m) = catalog_model("no-such-example", &[]);
    assert_eq!(st, GdarbStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("no-such-example"));

    let (st, _) = catalog_model("bachelier-skew", &[("kappa", 2.0)]);
    assert_eq!(st, GdarbStatus::InvalidArgument);
    assert!(last_error().contains("kappa"));

    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { gdarb_model_from_catalog(ptr::null(), ptr::null(), ptr::null(), 0, &mut out) },
        GdarbStatus::NullArgument
    );
    assert_eq!(unsafe { gdarb_model_verdicts(ptr::null(), ptr::null_mut()) }, GdarbStatus::NullArgument);

    let missing = CString::new("/nonexistent/model.toml").unwrap();
    assert_eq!(unsafe { gdarb_model_from_file(missing.as_ptr(), &mut out) }, GdarbStatus::IoError);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[state_space]\nleft = 0\nright = \"inf\"\n[market]\nstart = 1\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { gdarb_model_from_file(bad.as_ptr(), &mut out) }, GdarbStatus::ParseError);
    assert!(last_error().contains("bad.toml:"));

    unsafe { gdarb_model_free(ptr::null_mut()) };
    unsafe { gdarb_string_free(ptr::null_mut()) };
    let name = unsafe { CStr::from_ptr(gdarb_status_name(GdarbStatus::ModelError)) };
    assert_eq!(name.to_str().unwrap(), "model error");
}

#[test]
fn errors_are_per_thread() {
    let _ = catalog_model("no-such-example", &[]);
    std::thread::spawn(|| assert!(gdarb_last_error().is_null())).join().unwrap();
    assert!(!gdarb_last_error().is_null());
}

/// Compiles and runs the C example against the generated header and the
/// static library, when a C compiler is available.
#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/gdarb.h");
    assert!(std::fs::read_to_string(&header).unwrap().contains("gdarb_model_backtest"));
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; header checked only");
        return;
    };
    // the static library sits next to the deps directory of this test binary
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libgdarb_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("demo");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}", manifest.join("include").display()))
        .arg(manifest.join("examples/demo.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("nip=0 qvip=0 rp=1"), "{stdout}");
    assert!(stdout.contains("atom -0.3") && stdout.contains(" at 2\n"), "{stdout}");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
