//! C ABI over the `gamedyn` library.
//!
//! Payoff sources and trajectories are opaque heap handles released with
//! their `_free` function. Every fallible call returns a `GdStatus`; on
//! failure a message is kept per thread and can be read with
//! `gd_last_error_message`. Array arguments are `(pointer, length)` pairs
//! and output buffers must hold the documented number of doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use gamedyn::metrics;
use gamedyn::payoffs::{self, Contractivity};
use gamedyn::simplex;
use gamedyn::{integrate, Error, IntegratorConfig, MatrixGame, ModelKind, ModelParams, PayoffSource, SimplexPoint, Trajectory};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Diverged = 3,
    Io = 4,
    BufferTooSmall = 5,
    UnknownModel = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GdModel {
    Rd = 0,
    Ftrl = 1,
    Dp = 2,
    ShoFtrl = 3,
    ShoDp = 4,
    Bnn = 5,
    Smith = 6,
    Logit = 7,
    Tp = 8,
    Exrd = 9,
    RdLatency = 10,
}

impl From<GdModel> for ModelKind {
    fn from(m: GdModel) -> Self {
        ModelKind::ALL[m as usize]
    }
}

impl From<ModelKind> for GdModel {
    fn from(k: ModelKind) -> Self {
        const MODELS: [GdModel; 11] = [
            GdModel::Rd,
            GdModel::Ftrl,
            GdModel::Dp,
            GdModel::ShoFtrl,
            GdModel::ShoDp,
            GdModel::Bnn,
            GdModel::Smith,
            GdModel::Logit,
            GdModel::Tp,
            GdModel::Exrd,
            GdModel::RdLatency,
        ];
        let i = ModelKind::ALL.iter().position(|m| *m == k).expect("listed");
        MODELS[i]
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GdContractivity {
    StrictlyContractive = 0,
    Contractive = 1,
    NotContractive = 2,
}

/// Model parameters and integration settings for `gd_integrate`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct GdConfig {
    pub dt: f64,
    pub horizon: f64,
    pub record_every: usize,
    pub lambda: f64,
    pub gamma: f64,
}

/// Payoff signal or matrix game.
pub struct GdPayoffSource(PayoffSource);

/// Sampled trajectory.
pub struct GdTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> GdStatus {
    match err {
        Error::IntegrationDiverged { .. } => GdStatus::Diverged,
        Error::Io { .. } => GdStatus::Io,
        Error::UnknownModel(_) => GdStatus::UnknownModel,
        _ => GdStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), GdStatus>>(f: F) -> GdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            GdStatus::Panic
        }
    }
}

fn fail<T>(err: Error) -> Result<T, GdStatus> {
    let s = status_of(&err);
    set_error(err.to_string());
    Err(s)
}

fn null<T>(what: &str) -> Result<T, GdStatus> {
    set_error(format!("null pointer: {what}"));
    Err(GdStatus::NullPointer)
}

unsafe fn input<'a>(ptr: *const f64, n: usize, what: &str) -> Result<&'a [f64], GdStatus> {
    if ptr.is_null() {
        return null(what);
    }
    Ok(slice::from_raw_parts(ptr, n))
}

unsafe fn output<'a>(ptr: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], GdStatus> {
    if ptr.is_null() {
        return null(what);
    }
    Ok(slice::from_raw_parts_mut(ptr, n))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, GdStatus> {
    ptr.as_ref().map_or_else(|| null(what), Ok)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), GdStatus> {
    if out.is_null() {
        return null("out");
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copy the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len`. Returns the untruncated
/// length including the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            let dst = slice::from_raw_parts_mut(buf as *mut u8, len);
            dst[..k].copy_from_slice(&bytes[..k]);
            dst[k] = 0;
        }
        bytes.len() + 1
    })
}

/// Defaults: `dt = 1e-3`, `T = 500`, every 10th step recorded, `lambda = gamma = 1`.
#[no_mangle]
pub extern "C" fn gd_config_default() -> GdConfig {
    let c = IntegratorConfig::default();
    let p = ModelParams::default();
    GdConfig {
        dt: c.dt,
        horizon: c.horizon,
        record_every: c.record_every,
        lambda: p.lambda,
        gamma: p.gamma,
    }
}

/// Euclidean projection of `y[0..n]` onto the simplex, written to `out[0..n]`.
///
/// # Safety
/// `y` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_project_simplex(y: *const f64, n: usize, out: *mut f64) -> GdStatus {
    guard(|| {
        let y = input(y, n, "y")?;
        let out = output(out, n, "out")?;
        let x = simplex::project_simplex(y).or_else(fail)?;
        out.copy_from_slice(&x);
        Ok(())
    })
}

/// Projection of `p` onto the tangent cone of the simplex at `x`.
///
/// # Safety
/// `x`, `p` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_project_tangent_cone(x: *const f64, p: *const f64, n: usize, out: *mut f64) -> GdStatus {
    guard(|| {
        let x = input(x, n, "x")?;
        let p = input(p, n, "p")?;
        let out = output(out, n, "out")?;
        let v = simplex::project_tangent_cone(x, p, simplex::EPS_ACTIVE).or_else(fail)?;
        out.copy_from_slice(&v);
        Ok(())
    })
}

/// # Safety
/// `z` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_softmax(z: *const f64, n: usize, out: *mut f64) -> GdStatus {
    guard(|| {
        let z = input(z, n, "z")?;
        let out = output(out, n, "out")?;
        if n == 0 || z.iter().any(|v| !v.is_finite()) {
            return fail(Error::Domain("softmax needs a finite non-empty vector".into()));
        }
        out.copy_from_slice(&simplex::softmax(z));
        Ok(())
    })
}

/// Look up a model by its command-line name (`"rd"`, `"sho-ftrl"`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_model_from_name(name: *const c_char, out: *mut GdModel) -> GdStatus {
    guard(|| {
        if name.is_null() {
            return null("name");
        }
        if out.is_null() {
            return null("out");
        }
        let s = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Error::UnknownModel("<invalid utf-8>".into()))
            .or_else(fail)?;
        let kind: ModelKind = s.parse().or_else(fail)?;
        *out = kind.into();
        Ok(())
    })
}

/// Constant payoff vector `c[0..n]`.
///
/// # Safety
/// `c` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_source_constant(c: *const f64, n: usize, out: *mut *mut GdPayoffSource) -> GdStatus {
    guard(|| {
        let c = input(c, n, "c")?;
        let src = PayoffSource::Signal(payoffs::constant_signal(c.to_vec()));
        src.validate().or_else(fail)?;
        put(out, GdPayoffSource(src))
    })
}

/// `p(t) = [sin t, 0.5]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_source_example1(out: *mut *mut GdPayoffSource) -> GdStatus {
    guard(|| put(out, GdPayoffSource(payoffs::example1_signal().into())))
}

/// `p(t) = [sin t, -sin t]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_source_example2(out: *mut *mut GdPayoffSource) -> GdStatus {
    guard(|| put(out, GdPayoffSource(payoffs::example2_signal().into())))
}

/// Seeded random sum of sinusoids with up to `terms` terms per coordinate.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_source_random(n: usize, terms: usize, seed: u64, out: *mut *mut GdPayoffSource) -> GdStatus {
    guard(|| {
        if n < 2 || terms == 0 {
            return fail(Error::Domain("random signal needs n >= 2 and terms >= 1".into()));
        }
        put(out, GdPayoffSource(payoffs::random_smooth_signal(n, terms, seed).into()))
    })
}

/// Linear game `F(x) = A x` with `A` given row-major as `n * n` doubles.
///
/// # Safety
/// `a` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_source_game(a: *const f64, n: usize, out: *mut *mut GdPayoffSource) -> GdStatus {
    guard(|| {
        let a = input(a, n.saturating_mul(n), "a")?;
        let rows = a.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let game = MatrixGame::from_rows(rows).or_else(fail)?;
        put(out, GdPayoffSource(PayoffSource::Game(game)))
    })
}

/// Strategy dimension of a payoff source, 0 for null.
///
/// # Safety
/// `src` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_source_dim(src: *const GdPayoffSource) -> usize {
    src.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `src` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gd_source_free(src: *mut GdPayoffSource) {
    if !src.is_null() {
        drop(Box::from_raw(src));
    }
}

/// Integrate `model` from `x0[0..n]` against `src`.
///
/// # Safety
/// `x0` must point to `n` doubles, `src` must be a live handle and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gd_integrate(
    model: GdModel,
    config: GdConfig,
    x0: *const f64,
    n: usize,
    src: *const GdPayoffSource,
    out: *mut *mut GdTrajectory,
) -> GdStatus {
    guard(|| {
        let x0 = input(x0, n, "x0")?;
        let src = handle(src, "src")?;
        let x0 = SimplexPoint::new(x0.to_vec()).or_else(fail)?;
        let params = ModelParams::new(config.lambda, config.gamma).or_else(fail)?;
        let cfg = IntegratorConfig::new(config.dt, config.horizon, config.record_every).or_else(fail)?;
        let traj = integrate(model.into(), &params, &x0, &src.0, &cfg).or_else(fail)?;
        put(out, GdTrajectory(traj))
    })
}

/// Number of recorded samples, 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_trajectory_len(traj: *const GdTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Strategy dimension, 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_trajectory_dim(traj: *const GdTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.dim())
}

unsafe fn copy_series(traj: *const GdTrajectory, out: *mut f64, cap: usize, f: impl FnOnce(&Trajectory) -> Vec<f64>) -> GdStatus {
    guard(|| {
        let t = handle(traj, "traj")?;
        let v = f(&t.0);
        if cap < v.len() {
            set_error(format!("buffer holds {cap} values, {} needed", v.len()));
            return Err(GdStatus::BufferTooSmall);
        }
        output(out, v.len(), "out")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Sample times; `out` needs `gd_trajectory_len` doubles.
///
/// # Safety
/// `out` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_trajectory_times(traj: *const GdTrajectory, out: *mut f64, cap: usize) -> GdStatus {
    copy_series(traj, out, cap, |t| t.times().to_vec())
}

unsafe fn copy_row(traj: *const GdTrajectory, k: usize, out: *mut f64, pick: impl FnOnce(&Trajectory, usize) -> Vec<f64>) -> GdStatus {
    guard(|| {
        let t = handle(traj, "traj")?;
        if k >= t.0.len() {
            return fail(Error::IndexOutOfRange { index: k, n: t.0.len() });
        }
        let row = pick(&t.0, k);
        output(out, row.len(), "out")?.copy_from_slice(&row);
        Ok(())
    })
}

/// Strategy at sample `k`; `out` needs `gd_trajectory_dim` doubles.
///
/// # Safety
/// `out` must point to `gd_trajectory_dim(traj)` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_trajectory_strategy(traj: *const GdTrajectory, k: usize, out: *mut f64) -> GdStatus {
    copy_row(traj, k, out, |t, k| t.strategies()[k].to_vec())
}

/// Payoff at sample `k`; `out` needs `gd_trajectory_dim` doubles.
///
/// # Safety
/// `out` must point to `gd_trajectory_dim(traj)` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_trajectory_payoff(traj: *const GdTrajectory, k: usize, out: *mut f64) -> GdStatus {
    copy_row(traj, k, out, |t, k| t.payoffs()[k].clone())
}

/// Cumulative regret against the fixed strategy `anchor[0..n]`, one value
/// per sample.
///
/// # Safety
/// `anchor` must point to `n` doubles and `out` to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_regret(
    traj: *const GdTrajectory,
    anchor: *const f64,
    n: usize,
    out: *mut f64,
    cap: usize,
) -> GdStatus {
    let anchor = match input(anchor, n, "anchor") {
        Ok(a) => a.to_vec(),
        Err(s) => return s,
    };
    let mut err = None;
    let status = copy_series(traj, out, cap, |t| {
        match SimplexPoint::new(anchor).and_then(|a| metrics::regret(t, &a)) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                Vec::new()
            }
        }
    });
    match err {
        Some(e) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        None => status,
    }
}

/// Running average reward, one value per sample.
///
/// # Safety
/// `out` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_average_reward(traj: *const GdTrajectory, out: *mut f64, cap: usize) -> GdStatus {
    copy_series(traj, out, cap, metrics::average_reward)
}

/// Write the trajectory CSV (`t, x_i, p_i, xdot_i, pdot_i`) to `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gd_trajectory_write_csv(traj: *const GdTrajectory, path: *const c_char) -> GdStatus {
    guard(|| {
        let t = handle(traj, "traj")?;
        if path.is_null() {
            return null("path");
        }
        let path = CStr::from_ptr(path).to_string_lossy().into_owned();
        let io = |e| Error::Io { path: path.clone().into(), source: e };
        let file = File::create(&path).map_err(io).or_else(fail)?;
        let mut w = BufWriter::new(file);
        t.0.write_csv(&mut w).and_then(|_| w.flush()).map_err(io).or_else(fail)
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gd_trajectory_free(traj: *mut GdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Classify the game `A` (row-major `n * n`) and report the largest
/// eigenvalue of `A + A'` on the tangent space.
///
/// # Safety
/// `a` must point to `n * n` doubles; `class` and `min_pairing` writable.
#[no_mangle]
pub unsafe extern "C" fn gd_contractivity(
    a: *const f64,
    n: usize,
    samples: usize,
    seed: u64,
    class: *mut GdContractivity,
    min_pairing: *mut f64,
) -> GdStatus {
    guard(|| {
        let a = input(a, n.saturating_mul(n), "a")?;
        if class.is_null() || min_pairing.is_null() {
            return null("class/min_pairing");
        }
        let rows = a.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let game = MatrixGame::from_rows(rows).or_else(fail)?;
        let rep = payoffs::contractivity_report(&game, samples, seed);
        *class = match rep.class {
            Contractivity::StrictlyContractive => GdContractivity::StrictlyContractive,
            Contractivity::Contractive => GdContractivity::Contractive,
            Contractivity::NotContractive => GdContractivity::NotContractive,
        };
        *min_pairing = rep.min_pairing;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_enum_matches_core_order() {
        for (i, k) in ModelKind::ALL.iter().enumerate() {
            let m: GdModel = (*k).into();
            assert_eq!(m as usize, i);
            assert_eq!(ModelKind::from(m), *k);
        }
    }

    #[test]
    fn error_message_truncates() {
        set_error("abcdef");
        let mut buf = [1 as c_char; 4];
        let need = unsafe { gd_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(need, 7);
        let s = unsafe { CStr::from_ptr(buf.as_ptr()) };
        assert_eq!(s.to_str().unwrap(), "abc");
    }
}
