//! C ABI over the `gencal` library.
//!
//! Objects are opaque heap handles created by `gencal_*_new`/constructor
//! calls and released with the matching `*_free`. Fallible calls return a
//! status code; on failure `gencal_last_error` describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gencal::events::{load_event_csv, save_event_csv, synth_event};
use gencal::qcal::{calibrate_event, Calibration, Hyperparams, ParameterGrid, RewardConfig, WarmStart};
use gencal::{DisturbanceKind, DisturbanceSpec, Error, ErrorKind, Event, ModelParameters};

pub const GENCAL_OK: i32 = 0;
/// A required pointer was null or a string was not valid UTF-8.
pub const GENCAL_ERR_ARGUMENT: i32 = 1;
/// Invalid configuration, parameters, schema or I/O.
pub const GENCAL_ERR_CONFIG: i32 = 2;
/// Model initialization or integration failed.
pub const GENCAL_ERR_SIMULATION: i32 = 3;
/// Internal numerical failure.
pub const GENCAL_ERR_NUMERICAL: i32 = 4;
/// A Rust panic was caught at the boundary.
pub const GENCAL_ERR_PANIC: i32 = 5;

pub struct GencalParams(ModelParameters);

pub struct GencalEvent(Event);

pub struct GencalCalibration {
    grid: ParameterGrid,
    inner: Calibration,
}

/// Learning and reward settings for [`gencal_calibrate`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GencalHyperparams {
    pub gamma: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_episodes: u64,
    pub max_steps_per_episode: u64,
    pub seed: u64,
    pub eps_low: f64,
    pub eps_high: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Config => GENCAL_ERR_CONFIG,
            ErrorKind::Simulation => GENCAL_ERR_SIMULATION,
            ErrorKind::Numerical => GENCAL_ERR_NUMERICAL,
        };
        Failure(code, e.to_string())
    }
}

fn arg_error(msg: &str) -> Failure {
    Failure(GENCAL_ERR_ARGUMENT, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GENCAL_OK,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            GENCAL_ERR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(arg_error(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| arg_error(&format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| arg_error(&format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| arg_error(&format!("{what} is null")))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gencal_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reference model parameters.
#[no_mangle]
pub extern "C" fn gencal_params_new() -> *mut GencalParams {
    Box::into_raw(Box::new(GencalParams(ModelParameters::default())))
}

/// # Safety
/// `params` must come from [`gencal_params_new`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn gencal_params_free(params: *mut GencalParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle; `name` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gencal_params_set(params: *mut GencalParams, name: *const c_char, value: f64) -> i32 {
    guard(|| {
        let p = out_arg(params, "params")?;
        let name = str_arg(name, "name")?;
        p.0.set(name, value)?;
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle; `name` a nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gencal_params_get(params: *const GencalParams, name: *const c_char, out: *mut f64) -> i32 {
    guard(|| {
        let p = ref_arg(params, "params")?;
        let name = str_arg(name, "name")?;
        *out_arg(out, "out")? = p.0.get(name)?;
        Ok(())
    })
}

/// Synthesizes a noiseless event. `kind` is `voltage-dip`, `angle-step` or
/// `frequency-ramp`; `length` is in seconds and `rate` in samples per second.
///
/// # Safety
/// `params` must be a live handle, `kind` a nul-terminated string and `out`
/// writable. On success `*out` owns a new event.
#[no_mangle]
pub unsafe extern "C" fn gencal_event_synth(
    params: *const GencalParams,
    kind: *const c_char,
    magnitude: f64,
    start: f64,
    duration: f64,
    length: f64,
    rate: f64,
    p0: f64,
    q0: f64,
    out: *mut *mut GencalEvent,
) -> i32 {
    guard(|| {
        let p = ref_arg(params, "params")?;
        let kind: DisturbanceKind = str_arg(kind, "kind")?.parse()?;
        let out = out_arg(out, "out")?;
        let spec = DisturbanceSpec {
            kind,
            magnitude,
            start,
            duration,
        };
        let event = synth_event(&p.0, &spec, length, rate, p0, q0, None)?;
        *out = Box::into_raw(Box::new(GencalEvent(event)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gencal_event_load(path: *const c_char, out: *mut *mut GencalEvent) -> i32 {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(GencalEvent(load_event_csv(path)?)));
        Ok(())
    })
}

/// # Safety
/// `event` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gencal_event_save(event: *const GencalEvent, path: *const c_char) -> i32 {
    guard(|| {
        let e = ref_arg(event, "event")?;
        save_event_csv(&e.0, str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `event` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gencal_event_len(event: *const GencalEvent) -> usize {
    event.as_ref().map_or(0, |e| e.0.len())
}

/// # Safety
/// `event` must come from this library and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn gencal_event_free(event: *mut GencalEvent) {
    if !event.is_null() {
        drop(Box::from_raw(event));
    }
}

/// Replays `event` under `params`, writing `len` P and Q samples.
/// `len` must equal [`gencal_event_len`].
///
/// # Safety
/// Handles must be live; `p_out` and `q_out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gencal_playback(
    params: *const GencalParams,
    event: *const GencalEvent,
    p_out: *mut f64,
    q_out: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let p = ref_arg(params, "params")?;
        let e = ref_arg(event, "event")?;
        if p_out.is_null() || q_out.is_null() {
            return Err(arg_error("output buffer is null"));
        }
        if len != e.0.len() {
            return Err(arg_error(&format!("buffers hold {len} samples, event has {}", e.0.len())));
        }
        let z = e.0.replay(&p.0)?;
        std::slice::from_raw_parts_mut(p_out, len).copy_from_slice(&z.p_model);
        std::slice::from_raw_parts_mut(q_out, len).copy_from_slice(&z.q_model);
        Ok(())
    })
}

/// Trajectory sensitivity of the P/Q outputs to one parameter.
///
/// # Safety
/// Handles must be live, `name` nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gencal_sensitivity(
    params: *const GencalParams,
    event: *const GencalEvent,
    name: *const c_char,
    delta_frac: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let p = ref_arg(params, "params")?;
        let e = ref_arg(event, "event")?;
        let name = str_arg(name, "name")?;
        *out_arg(out, "out")? = gencal::trajectory_sensitivity(&p.0, &e.0, name, delta_frac)?;
        Ok(())
    })
}

/// Library defaults for the learning and reward settings.
#[no_mangle]
pub extern "C" fn gencal_hyperparams_default() -> GencalHyperparams {
    let h = Hyperparams::default();
    let r = RewardConfig::default();
    GencalHyperparams {
        gamma: h.gamma,
        lambda: h.lambda,
        epsilon: h.epsilon,
        n_episodes: h.n_episodes as u64,
        max_steps_per_episode: h.max_steps_per_episode as u64,
        seed: h.seed,
        eps_low: r.eps_low,
        eps_high: r.eps_high,
    }
}

/// Calibrates `n_dims` parameters against `event`. The remaining parameters
/// are taken from `params`. `warm` may be null, or a previous calibration
/// over the same grid whose Q-table seeds this run.
///
/// # Safety
/// Handles must be live or (for `warm`) null; `names`, `lower` and `upper`
/// must each hold `n_dims` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibrate(
    params: *const GencalParams,
    event: *const GencalEvent,
    names: *const *const c_char,
    lower: *const f64,
    upper: *const f64,
    n_dims: usize,
    tau: f64,
    hyper: *const GencalHyperparams,
    warm: *const GencalCalibration,
    out: *mut *mut GencalCalibration,
) -> i32 {
    guard(|| {
        let p = ref_arg(params, "params")?;
        let e = ref_arg(event, "event")?;
        let h = ref_arg(hyper, "hyper")?;
        let out = out_arg(out, "out")?;
        if names.is_null() || lower.is_null() || upper.is_null() || n_dims == 0 {
            return Err(arg_error("names, lower and upper must hold n_dims > 0 entries"));
        }
        let names = std::slice::from_raw_parts(names, n_dims)
            .iter()
            .map(|&n| str_arg(n, "names[i]").map(String::from))
            .collect::<Result<Vec<_>, _>>()?;
        let lower = std::slice::from_raw_parts(lower, n_dims).to_vec();
        let upper = std::slice::from_raw_parts(upper, n_dims).to_vec();
        let grid = ParameterGrid::build(names, lower, upper, tau)?;
        let hyper = Hyperparams {
            gamma: h.gamma,
            lambda: h.lambda,
            epsilon: h.epsilon,
            epsilon_min: None,
            n_episodes: h.n_episodes as usize,
            max_steps_per_episode: h.max_steps_per_episode as usize,
            seed: h.seed,
        };
        let reward = RewardConfig {
            eps_low: h.eps_low,
            eps_high: h.eps_high,
        };
        let warm = warm.as_ref().map(|w| WarmStart {
            qtable: w.inner.qtable.clone(),
            pool: None,
        });
        let inner = calibrate_event(&grid, &p.0, &e.0, &hyper, &reward, warm)?;
        *out = Box::into_raw(Box::new(GencalCalibration { grid, inner }));
        Ok(())
    })
}

/// # Safety
/// `cal` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibration_dims(cal: *const GencalCalibration) -> usize {
    cal.as_ref().map_or(0, |c| c.grid.dims())
}

/// Copies the best estimate (one value per calibrated parameter).
///
/// # Safety
/// `cal` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibration_estimate(cal: *const GencalCalibration, out: *mut f64, len: usize) -> i32 {
    guard(|| {
        let c = ref_arg(cal, "cal")?;
        if out.is_null() || len != c.grid.dims() {
            return Err(arg_error(&format!("estimate needs a buffer of {} doubles", c.grid.dims())));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&c.inner.result.estimate);
        Ok(())
    })
}

/// Discrepancy of the best estimate, or NaN for a null handle.
///
/// # Safety
/// `cal` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibration_best_eps(cal: *const GencalCalibration) -> f64 {
    cal.as_ref().map_or(f64::NAN, |c| c.inner.result.best_eps)
}

/// One-based episode that first reached a terminal state, or -1.
///
/// # Safety
/// `cal` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibration_episodes_to_terminal(cal: *const GencalCalibration) -> i64 {
    cal.as_ref()
        .and_then(|c| c.inner.result.episodes_to_terminal)
        .map_or(-1, |e| e as i64)
}

/// # Safety
/// `cal` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibration_model_evaluations(cal: *const GencalCalibration) -> u64 {
    cal.as_ref().map_or(0, |c| c.inner.result.model_evaluations)
}

/// Writes the learned Q-table in the CLI's dump format.
///
/// # Safety
/// `cal` must be a live handle and `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibration_save_qtable(cal: *const GencalCalibration, path: *const c_char) -> i32 {
    guard(|| {
        let c = ref_arg(cal, "cal")?;
        c.inner.qtable.save(str_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `cal` must come from [`gencal_calibrate`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn gencal_calibration_free(cal: *mut GencalCalibration) {
    if !cal.is_null() {
        drop(Box::from_raw(cal));
    }
}
