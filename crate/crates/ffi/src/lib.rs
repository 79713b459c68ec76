//! C interface to the darkfilter simulator.
//!
//! Configurations and results are opaque heap handles owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`DfStatus`]; the message of the last failure on the calling
//! thread is available from [`df_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use darkfilter::runner::{analyze, execute, RunOutput};
use darkfilter::{parse_config, preset, EngineKind, Error, ExperimentConfig, SweepOptions};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfStatus {
    Ok = 0,
    ConfigError = 1,
    FilteringFailure = 2,
    NullPointer = 3,
    InvalidUtf8 = 4,
    Numerical = 5,
    Panic = 6,
}

/// Engine selector for [`df_config_set_engine`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfEngine {
    Exact = 0,
    Markov = 1,
    Lindblad = 2,
}

/// One row of a sweep.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DfSample {
    pub z: f64,
    pub purity: f64,
    /// `Tr|ρ − ρ_d|`, without the factor 1/2.
    pub trace_distance: f64,
    pub success_probability: f64,
}

/// Opaque experiment configuration.
pub struct DfConfig {
    inner: ExperimentConfig,
}

/// Opaque sweep result.
pub struct DfResult {
    inner: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> DfStatus {
    match err {
        Error::FilteringFailure { .. } => DfStatus::FilteringFailure,
        Error::Numerical(_) | Error::StepSize { .. } | Error::Degenerate(_) => DfStatus::Numerical,
        _ => DfStatus::ConfigError,
    }
}

fn fail(status: DfStatus, msg: impl Into<String>) -> DfStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> DfStatus) -> DfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(DfStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, DfStatus> {
    if s.is_null() {
        return Err(fail(DfStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(DfStatus::InvalidUtf8, "string is not valid UTF-8"))
}

fn emit_config(res: darkfilter::Result<ExperimentConfig>, out: *mut *mut DfConfig) -> DfStatus {
    match res {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(DfConfig { inner })) };
            DfStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Parses a JSON experiment file's contents into a new configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_config_from_json(json: *const c_char, out: *mut *mut DfConfig) -> DfStatus {
    guard(|| {
        if out.is_null() {
            return fail(DfStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        match read_str(json) {
            Ok(text) => emit_config(parse_config(text), out),
            Err(s) => s,
        }
    })
}

/// Loads a built-in experiment (`"fig1"` or `"fig2"`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_config_from_preset(name: *const c_char, out: *mut *mut DfConfig) -> DfStatus {
    guard(|| {
        if out.is_null() {
            return fail(DfStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        match read_str(name) {
            Ok(name) => emit_config(preset(name), out),
            Err(s) => s,
        }
    })
}

/// # Safety
/// `config` must come from one of the `df_config_from_*` functions.
#[no_mangle]
pub unsafe extern "C" fn df_config_set_engine(config: *mut DfConfig, engine: DfEngine) -> DfStatus {
    let Some(cfg) = config.as_mut() else {
        return fail(DfStatus::NullPointer, "null config");
    };
    cfg.inner.engine = match engine {
        DfEngine::Exact => EngineKind::ExactNetwork,
        DfEngine::Markov => EngineKind::MarkovNoJump,
        DfEngine::Lindblad => EngineKind::LindbladFull,
    };
    DfStatus::Ok
}

/// Sets the sweep range; an automatically sized bath grows with `z_max`.
///
/// # Safety
/// `config` must come from one of the `df_config_from_*` functions.
#[no_mangle]
pub unsafe extern "C" fn df_config_set_z(config: *mut DfConfig, z_max: f64, z_steps: usize) -> DfStatus {
    let Some(cfg) = config.as_mut() else {
        return fail(DfStatus::NullPointer, "null config");
    };
    cfg.inner.set_z_max(z_max);
    cfg.inner.z_steps = z_steps;
    match cfg.inner.validate() {
        Ok(()) => DfStatus::Ok,
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// # Safety
/// `config` must be null or come from a `df_config_from_*` function, and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn df_config_free(config: *mut DfConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the configured sweep. The worker thread count follows
/// `DARKFILTER_THREADS`.
///
/// # Safety
/// `config` must be a live configuration and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_run(config: *const DfConfig, out: *mut *mut DfResult) -> DfStatus {
    guard(|| {
        if out.is_null() {
            return fail(DfStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(cfg) = config.as_ref() else {
            return fail(DfStatus::NullPointer, "null config");
        };
        match execute(&cfg.inner, &SweepOptions::from_env()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DfResult { inner }));
                DfStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live result.
#[no_mangle]
pub unsafe extern "C" fn df_result_len(result: *const DfResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.result.len())
}

/// # Safety
/// `result` must be a live result and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_result_sample(result: *const DfResult, index: usize, out: *mut DfSample) -> DfStatus {
    let (Some(r), false) = (result.as_ref(), out.is_null()) else {
        return fail(DfStatus::NullPointer, "null result or output pointer");
    };
    let r = &r.inner.result;
    if index >= r.len() {
        return fail(DfStatus::ConfigError, format!("sample {index} out of range (len {})", r.len()));
    }
    *out = DfSample {
        z: r.z_values[index],
        purity: r.purity[index],
        trace_distance: r.trace_distance[index],
        success_probability: r.success_probability[index],
    };
    DfStatus::Ok
}

/// CSV text of the sweep; release with [`df_string_free`].
///
/// # Safety
/// `result` must be null or a live result.
#[no_mangle]
pub unsafe extern "C" fn df_result_csv(result: *const DfResult) -> *mut c_char {
    match result.as_ref() {
        Some(r) => into_c_string(r.inner.csv.clone()),
        None => {
            set_error("null result");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `result` must be null or a live result, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn df_result_free(result: *mut DfResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Effective model, spectrum and dark-state certificates as JSON; null on
/// failure. Release with [`df_string_free`].
///
/// # Safety
/// `config` must be null or a live configuration.
#[no_mangle]
pub unsafe extern "C" fn df_analyze_json(config: *const DfConfig) -> *mut c_char {
    let Some(cfg) = config.as_ref() else {
        set_error("null config");
        return ptr::null_mut();
    };
    let res = catch_unwind(AssertUnwindSafe(|| analyze(&cfg.inner)));
    match res {
        Ok(Ok(a)) => {
            let pair = |c: darkfilter::C64| serde_json::json!([c.re, c.im]);
            let value = serde_json::json!({
                "k0": a.effective.k0,
                "spectral_factor": a.effective.spectral_factor,
                "h_eff": (0..a.effective.dim())
                    .map(|i| (0..a.effective.dim()).map(|j| pair(a.effective.matrix[(i, j)])).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "spectrum": a.spectrum.iter().map(|&l| pair(l)).collect::<Vec<_>>(),
                "apt_symmetric": a.apt_symmetric,
                "dark_states": a.certificates.iter().map(|c| serde_json::json!({
                    "eigenvalue": pair(c.eigenvalue),
                    "vector": c.vector.iter().map(|&x| pair(x)).collect::<Vec<_>>(),
                    "defective": c.defective,
                })).collect::<Vec<_>>(),
            });
            into_c_string(value.to_string())
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn df_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn df_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn df_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
