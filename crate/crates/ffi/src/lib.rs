//! C ABI surface for the simulator.
//!
//! The API hands out opaque handles (`DpbConfig`, `DpbResult`), reports
//! failures through status codes, and keeps the last error message in
//! thread-local storage for retrieval with [`dpb_last_error_message`].
//! The generated header lands in `include/dpbandit.h`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::path::Path;

use dpbandit::harness::{
    preset_configs, run_experiment, ExperimentConfig, ExperimentResult, RawConfig,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpbStatus {
    DpbOk = 0,
    DpbNullPointer = 1,
    DpbInvalidArgument = 2,
    DpbInvalidUtf8 = 3,
    DpbConfigError = 4,
    DpbRuntimeError = 5,
    DpbIoError = 6,
}

/// Opaque experiment configuration handle.
pub struct DpbConfig {
    inner: ExperimentConfig,
}

/// Opaque handle to a finished experiment.
pub struct DpbResult {
    inner: ExperimentResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dpb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static null-terminated string.
#[no_mangle]
pub extern "C" fn dpb_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, DpbStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} is null"));
        return Err(DpbStatus::DpbNullPointer);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(&format!("{what} is not valid UTF-8"));
            Err(DpbStatus::DpbInvalidUtf8)
        }
    }
}

/// Fresh configuration with the desk-scale defaults.
#[no_mangle]
pub extern "C" fn dpb_config_new() -> *mut DpbConfig {
    Box::into_raw(Box::new(DpbConfig {
        inner: ExperimentConfig::default(),
    }))
}

/// Loads a flat key-value configuration file.
#[no_mangle]
pub unsafe extern "C" fn dpb_config_from_file(path: *const c_char) -> *mut DpbConfig {
    let path = match unsafe { cstr_arg(path, "path") } {
        Ok(p) => p,
        Err(_) => return std::ptr::null_mut(),
    };
    let raw = match RawConfig::from_file(Path::new(path)) {
        Ok(r) => r,
        Err(e) => {
            set_error(&e.to_string());
            return std::ptr::null_mut();
        }
    };
    let mut cfg = ExperimentConfig::default();
    if let Err(e) = raw.apply(&mut cfg) {
        set_error(&e.to_string());
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(DpbConfig { inner: cfg }))
}

/// Number of cells in a named preset, or -1 if the preset is unknown.
#[no_mangle]
pub unsafe extern "C" fn dpb_preset_len(name: *const c_char) -> c_int {
    let name = match unsafe { cstr_arg(name, "preset name") } {
        Ok(n) => n,
        Err(_) => return -1,
    };
    match preset_configs(name) {
        Ok(cells) => cells.len() as c_int,
        Err(e) => {
            set_error(&e.to_string());
            -1
        }
    }
}

/// The `index`-th cell of a named preset.
#[no_mangle]
pub unsafe extern "C" fn dpb_config_preset(name: *const c_char, index: c_int) -> *mut DpbConfig {
    let name = match unsafe { cstr_arg(name, "preset name") } {
        Ok(n) => n,
        Err(_) => return std::ptr::null_mut(),
    };
    let cells = match preset_configs(name) {
        Ok(c) => c,
        Err(e) => {
            set_error(&e.to_string());
            return std::ptr::null_mut();
        }
    };
    match cells.into_iter().nth(index.max(0) as usize) {
        Some(cfg) => Box::into_raw(Box::new(DpbConfig { inner: cfg })),
        None => {
            set_error(&format!("preset index {index} out of range"));
            std::ptr::null_mut()
        }
    }
}

/// Sets one configuration key from its textual value, using the same keys
/// as the configuration file (e.g. `T`, `epsilon`, `model`, `seeds`).
#[no_mangle]
pub unsafe extern "C" fn dpb_config_set(
    cfg: *mut DpbConfig,
    key: *const c_char,
    value: *const c_char,
) -> DpbStatus {
    if cfg.is_null() {
        set_error("config handle is null");
        return DpbStatus::DpbNullPointer;
    }
    let key = match unsafe { cstr_arg(key, "key") } {
        Ok(k) => k,
        Err(s) => return s,
    };
    let value = match unsafe { cstr_arg(value, "value") } {
        Ok(v) => v,
        Err(s) => return s,
    };
    let bare: Result<RawConfig, _> = toml::from_str(&format!("{key} = {value}"));
    let raw = match bare.or_else(|_| toml::from_str(&format!("{key} = \"{value}\""))) {
        Ok(r) => r,
        Err(e) => {
            set_error(&format!("cannot parse '{key}' = '{value}': {e}"));
            return DpbStatus::DpbInvalidArgument;
        }
    };
    let config = unsafe { &mut *cfg };
    match raw.apply(&mut config.inner) {
        Ok(()) => DpbStatus::DpbOk,
        Err(e) => {
            set_error(&e.to_string());
            DpbStatus::DpbInvalidArgument
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn dpb_config_free(cfg: *mut DpbConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Runs every seed of the configuration over `workers` threads
/// (0 selects machine parallelism). Returns null on failure.
#[no_mangle]
pub unsafe extern "C" fn dpb_run(cfg: *const DpbConfig, workers: c_int) -> *mut DpbResult {
    if cfg.is_null() {
        set_error("config handle is null");
        return std::ptr::null_mut();
    }
    let config = unsafe { &*cfg };
    let workers = if workers <= 0 {
        dpbandit::harness::resolve_workers(None)
    } else {
        workers as usize
    };
    match run_experiment(&config.inner, workers) {
        Ok(result) => Box::into_raw(Box::new(DpbResult { inner: result })),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn dpb_result_free(res: *mut DpbResult) {
    if !res.is_null() {
        drop(unsafe { Box::from_raw(res) });
    }
}

/// Number of replicate runs held by the result.
#[no_mangle]
pub unsafe extern "C" fn dpb_result_num_runs(res: *const DpbResult) -> c_int {
    if res.is_null() {
        set_error("result handle is null");
        return -1;
    }
    unsafe { &*res }.inner.runs.len() as c_int
}

unsafe fn run_scalar(
    res: *const DpbResult,
    run_index: c_int,
    out: *mut f64,
    what: &str,
    get: impl Fn(&dpbandit::harness::RunRecord) -> f64,
) -> DpbStatus {
    if res.is_null() || out.is_null() {
        set_error("null handle or output pointer");
        return DpbStatus::DpbNullPointer;
    }
    let result = unsafe { &*res };
    match result.inner.runs.get(run_index.max(0) as usize) {
        Some(run) => {
            unsafe { *out = get(run) };
            DpbStatus::DpbOk
        }
        None => {
            set_error(&format!("{what}: run index {run_index} out of range"));
            DpbStatus::DpbInvalidArgument
        }
    }
}

/// Final cumulative regret of one replicate.
#[no_mangle]
pub unsafe extern "C" fn dpb_result_final_regret(
    res: *const DpbResult,
    run_index: c_int,
    out: *mut f64,
) -> DpbStatus {
    unsafe {
        run_scalar(res, run_index, out, "final regret", |r| {
            r.output.metrics.cumulative_regret()
        })
    }
}

/// Total communication cost of one replicate, in the model's unit.
#[no_mangle]
pub unsafe extern "C" fn dpb_result_comm_cost(
    res: *const DpbResult,
    run_index: c_int,
    out: *mut f64,
) -> DpbStatus {
    unsafe {
        run_scalar(res, run_index, out, "comm cost", |r| {
            r.output.metrics.comm_cost()
        })
    }
}

/// Clip rate of one replicate.
#[no_mangle]
pub unsafe extern "C" fn dpb_result_clip_rate(
    res: *const DpbResult,
    run_index: c_int,
    out: *mut f64,
) -> DpbStatus {
    unsafe {
        run_scalar(res, run_index, out, "clip rate", |r| {
            r.output.metrics.clip_rate()
        })
    }
}

/// Mean and sample standard deviation of the final regret across runs.
#[no_mangle]
pub unsafe extern "C" fn dpb_result_regret_stats(
    res: *const DpbResult,
    mean_out: *mut f64,
    std_out: *mut f64,
) -> DpbStatus {
    if res.is_null() || mean_out.is_null() || std_out.is_null() {
        set_error("null handle or output pointer");
        return DpbStatus::DpbNullPointer;
    }
    let result = unsafe { &*res };
    unsafe {
        *mean_out = result.inner.aggregate.mean_final_regret;
        *std_out = result.inner.aggregate.std_final_regret;
    }
    DpbStatus::DpbOk
}

/// Writes the per-run CSV (schema: run_id, seed, model, epsilon, delta,
/// alpha, d, k, T, phase, round, cum_regret, comm_cost, comm_unit,
/// clip_rate) to `path`.
#[no_mangle]
pub unsafe extern "C" fn dpb_result_write_csv(
    res: *const DpbResult,
    path: *const c_char,
) -> DpbStatus {
    if res.is_null() {
        set_error("result handle is null");
        return DpbStatus::DpbNullPointer;
    }
    let path = match unsafe { cstr_arg(path, "path") } {
        Ok(p) => p,
        Err(s) => return s,
    };
    let result = unsafe { &*res };
    match std::fs::write(path, result.inner.csv()) {
        Ok(()) => DpbStatus::DpbOk,
        Err(e) => {
            set_error(&e.to_string());
            DpbStatus::DpbIoError
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn version_is_non_null() {
        let v = dpb_version();
        assert!(!v.is_null());
        let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
        assert!(!s.is_empty());
    }

    #[test]
    fn config_run_result_round_trip() {
        unsafe {
            let cfg = dpb_config_new();
            assert!(!cfg.is_null());
            assert_eq!(
                dpb_config_set(cfg, c("T").as_ptr(), c("2000").as_ptr()),
                DpbStatus::DpbOk
            );
            assert_eq!(
                dpb_config_set(cfg, c("seeds").as_ptr(), c("[1, 2]").as_ptr()),
                DpbStatus::DpbOk
            );
            assert_eq!(
                dpb_config_set(cfg, c("model").as_ptr(), c("central").as_ptr()),
                DpbStatus::DpbOk
            );
            assert_eq!(
                dpb_config_set(cfg, c("d").as_ptr(), c("2").as_ptr()),
                DpbStatus::DpbOk
            );
            assert_eq!(
                dpb_config_set(cfg, c("k").as_ptr(), c("4").as_ptr()),
                DpbStatus::DpbOk
            );

            let res = dpb_run(cfg, 1);
            assert!(!res.is_null());
            assert_eq!(dpb_result_num_runs(res), 2);
            let mut regret = -1.0f64;
            assert_eq!(
                dpb_result_final_regret(res, 0, &mut regret),
                DpbStatus::DpbOk
            );
            assert!(regret >= 0.0);
            let mut comm = -1.0;
            assert_eq!(dpb_result_comm_cost(res, 1, &mut comm), DpbStatus::DpbOk);
            assert!(comm > 0.0);
            let (mut m, mut s) = (0.0, 0.0);
            assert_eq!(dpb_result_regret_stats(res, &mut m, &mut s), DpbStatus::DpbOk);
            assert!(m >= 0.0 && s >= 0.0);

            let dir = std::env::temp_dir().join("dpb_ffi_test");
            std::fs::create_dir_all(&dir).unwrap();
            let out = dir.join("runs.csv");
            let path = c(out.to_str().unwrap());
            assert_eq!(dpb_result_write_csv(res, path.as_ptr()), DpbStatus::DpbOk);
            let text = std::fs::read_to_string(&out).unwrap();
            assert!(text.starts_with(dpbandit::accounting::CSV_HEADER));

            dpb_result_free(res);
            dpb_config_free(cfg);
        }
    }

    #[test]
    fn errors_surface_through_status_and_message() {
        unsafe {
            // Out-of-range index.
            let cfg = dpb_config_new();
            dpb_config_set(cfg, c("T").as_ptr(), c("200").as_ptr());
            dpb_config_set(cfg, c("d").as_ptr(), c("2").as_ptr());
            dpb_config_set(cfg, c("k").as_ptr(), c("3").as_ptr());
            dpb_config_set(cfg, c("seed").as_ptr(), c("1").as_ptr());
            let res = dpb_run(cfg, 1);
            assert!(!res.is_null());
            let mut out = 0.0;
            assert_eq!(
                dpb_result_final_regret(res, 99, &mut out),
                DpbStatus::DpbInvalidArgument
            );
            let msg = CStr::from_ptr(dpb_last_error_message()).to_str().unwrap();
            assert!(msg.contains("out of range"));

            // Invalid key.
            assert_eq!(
                dpb_config_set(cfg, c("no_such_key").as_ptr(), c("1").as_ptr()),
                DpbStatus::DpbInvalidArgument
            );

            // Invalid configuration caught at run time.
            dpb_config_set(cfg, c("alpha").as_ptr(), c("7.0").as_ptr());
            let bad = dpb_run(cfg, 1);
            assert!(bad.is_null());
            let msg = CStr::from_ptr(dpb_last_error_message()).to_str().unwrap();
            assert!(msg.contains("alpha"));

            // Null handling.
            assert_eq!(dpb_result_num_runs(std::ptr::null()), -1);
            dpb_result_free(res);
            dpb_config_free(cfg);
        }
    }

    #[test]
    fn preset_cells_are_exposed() {
        unsafe {
            assert_eq!(dpb_preset_len(c("fig2a-desk").as_ptr()), 9);
            assert_eq!(dpb_preset_len(c("nope").as_ptr()), -1);
            let cfg = dpb_config_preset(c("fig2c-desk").as_ptr(), 1);
            assert!(!cfg.is_null());
            dpb_config_free(cfg);
            assert!(dpb_config_preset(c("fig2c-desk").as_ptr(), 5).is_null());
        }
    }
}
