use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use gamedyn_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe { gd_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn projections_and_softmax() {
    let y = [0.9, 0.0, 0.3];
    let mut out = [0.0; 3];
    assert_eq!(unsafe { gd_project_simplex(y.as_ptr(), 3, out.as_mut_ptr()) }, GdStatus::Ok);
    assert!((out[0] - 0.8).abs() < 1e-12 && out[1] == 0.0 && (out[2] - 0.2).abs() < 1e-12);

    let x = [0.0, 0.0, 1.0];
    let p = [0.9, 0.0, 1.0];
    assert_eq!(
        unsafe { gd_project_tangent_cone(x.as_ptr(), p.as_ptr(), 3, out.as_mut_ptr()) },
        GdStatus::Ok
    );
    assert!(out.iter().all(|v| v.abs() < 1e-12));

    let z = [1.0, 0.0];
    let mut s = [0.0; 2];
    assert_eq!(unsafe { gd_softmax(z.as_ptr(), 2, s.as_mut_ptr()) }, GdStatus::Ok);
    assert!((s[0] - 0.7310585786300049).abs() < 1e-12);
}

#[test]
fn null_and_invalid_arguments_report_errors() {
    let mut out = [0.0; 2];
    assert_eq!(unsafe { gd_project_simplex(ptr::null(), 2, out.as_mut_ptr()) }, GdStatus::NullPointer);
    assert!(last_error().contains("null"));
    let y = [f64::NAN, 1.0];
    assert_eq!(unsafe { gd_project_simplex(y.as_ptr(), 2, out.as_mut_ptr()) }, GdStatus::InvalidArgument);
    assert!(!last_error().is_empty());

    let name = CString::new("sho-dp").unwrap();
    let mut m = GdModel::Rd;
    assert_eq!(unsafe { gd_model_from_name(name.as_ptr(), &mut m) }, GdStatus::Ok);
    assert_eq!(m, GdModel::ShoDp);
    let bad = CString::new("replicator").unwrap();
    assert_eq!(unsafe { gd_model_from_name(bad.as_ptr(), &mut m) }, GdStatus::UnknownModel);
}

#[test]
fn integrate_and_read_back() {
    let mut src = ptr::null_mut();
    let c = [1.0, 0.0];
    assert_eq!(unsafe { gd_source_constant(c.as_ptr(), 2, &mut src) }, GdStatus::Ok);
    assert_eq!(unsafe { gd_source_dim(src) }, 2);
    let cfg = GdConfig {
        dt: 1e-2,
        horizon: 20.0,
        record_every: 10,
        lambda: 1.0,
        gamma: 1.0,
    };
    let x0 = [0.5, 0.5];
    let mut traj = ptr::null_mut();
    assert_eq!(
        unsafe { gd_integrate(GdModel::Exrd, cfg, x0.as_ptr(), 2, src, &mut traj) },
        GdStatus::Ok
    );
    let len = unsafe { gd_trajectory_len(traj) };
    assert_eq!(len, 201);
    assert_eq!(unsafe { gd_trajectory_dim(traj) }, 2);

    let mut times = vec![0.0; len];
    assert_eq!(unsafe { gd_trajectory_times(traj, times.as_mut_ptr(), len) }, GdStatus::Ok);
    assert!((times[len - 1] - 20.0).abs() < 1e-9);
    let mut short = vec![0.0; 3];
    assert_eq!(unsafe { gd_trajectory_times(traj, short.as_mut_ptr(), 3) }, GdStatus::BufferTooSmall);

    let mut x = [0.0; 2];
    assert_eq!(unsafe { gd_trajectory_strategy(traj, len - 1, x.as_mut_ptr()) }, GdStatus::Ok);
    assert!((x[0] - 0.7310585786300049).abs() < 1e-4);
    let mut p = [0.0; 2];
    assert_eq!(unsafe { gd_trajectory_payoff(traj, 0, p.as_mut_ptr()) }, GdStatus::Ok);
    assert_eq!(p, [1.0, 0.0]);

    let e1 = [1.0, 0.0];
    let mut regret = vec![0.0; len];
    assert_eq!(
        unsafe { gd_regret(traj, e1.as_ptr(), 2, regret.as_mut_ptr(), len) },
        GdStatus::Ok
    );
    assert!(regret[len - 1] > 4.0);
    let not_simplex = [0.7, 0.7];
    assert_eq!(
        unsafe { gd_regret(traj, not_simplex.as_ptr(), 2, regret.as_mut_ptr(), len) },
        GdStatus::InvalidArgument
    );
    let mut avg = vec![0.0; len];
    assert_eq!(unsafe { gd_average_reward(traj, avg.as_mut_ptr(), len) }, GdStatus::Ok);
    assert!(avg[len - 1] > 0.6 && avg[len - 1] < 0.74);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { gd_trajectory_write_csv(traj, path.as_ptr()) }, GdStatus::Ok);
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(text.starts_with("t,x_1,x_2,p_1,p_2,xdot_1,xdot_2,pdot_1,pdot_2\n"));
    assert_eq!(text.lines().count(), len + 1);

    unsafe {
        gd_trajectory_free(traj);
        gd_source_free(src);
        gd_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn bad_config_is_rejected() {
    let mut src = ptr::null_mut();
    assert_eq!(unsafe { gd_source_example2(&mut src) }, GdStatus::Ok);
    let mut cfg = gd_config_default();
    cfg.dt = 0.5;
    let x0 = [0.5, 0.5];
    let mut traj = ptr::null_mut();
    assert_eq!(
        unsafe { gd_integrate(GdModel::Rd, cfg, x0.as_ptr(), 2, src, &mut traj) },
        GdStatus::InvalidArgument
    );
    assert!(traj.is_null());
    unsafe { gd_source_free(src) };
}

#[test]
fn game_source_and_contractivity() {
    let a = [0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0];
    let mut src = ptr::null_mut();
    assert_eq!(unsafe { gd_source_game(a.as_ptr(), 3, &mut src) }, GdStatus::Ok);
    assert_eq!(unsafe { gd_source_dim(src) }, 3);
    unsafe { gd_source_free(src) };
    let mut class = GdContractivity::NotContractive;
    let mut pairing = f64::NAN;
    assert_eq!(
        unsafe { gd_contractivity(a.as_ptr(), 3, 100, 0, &mut class, &mut pairing) },
        GdStatus::Ok
    );
    assert_eq!(class, GdContractivity::Contractive);
    assert!(pairing.abs() < 1e-9);

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { gd_source_random(3, 2, 7, &mut r) }, GdStatus::Ok);
    unsafe { gd_source_free(r) };
    assert_eq!(unsafe { gd_source_random(1, 2, 7, &mut r) }, GdStatus::InvalidArgument);
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libgamedyn_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C smoke program failed to compile");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
