//! C ABI over the riscap library.
//!
//! - opaque `RiscapConfig` handle with explicit create/free
//! - status-code error reporting plus a per-thread detail message
//! - scalar entry points for capacity evaluation and joint optimization
//! - a JSON-driven experiment runner returning CSV or JSON text
//!
//! Every entry point catches panics and converts them to
//! `RISCAP_STATUS_INTERNAL`; no unwinding crosses the boundary. Pointers are
//! only read when non-null, and every object handed out is released by the
//! matching `riscap_*_free` call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use riscap::capacity::CapacityKind;
use riscap::channel::SystemConfig;
use riscap::experiment::{
    parse_spec, run_experiment, ExperimentSpec, Mode, OptimizeVariant, Sweep,
};
use riscap::Error;

// ----- status codes -----------------------------------------------------------

/// Result of every fallible call. `Ok` is zero; anything nonzero leaves the
/// out-parameters untouched and stores a detail string readable through
/// `riscap_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiscapStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A value failed validation (dimension, domain, or configuration).
    InvalidArgument = 2,
    /// A numeric routine failed (non-finite intermediate, failed factorization).
    NumericFailure = 3,
    /// Serialization or I/O failed.
    IoFailure = 4,
    /// A panic was caught at the boundary; state is still consistent.
    Internal = 5,
}

/// Reference-point capacity quantities evaluated by `riscap_ergodic_capacity`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiscapQuantity {
    ExactMc = 0,
    AppMc = 1,
    AppQuadrature = 2,
    Jen1 = 3,
    Jen2 = 4,
    HighSnrUpper = 5,
}

/// Output encodings for `riscap_run_json`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiscapFormat {
    Csv = 0,
    Json = 1,
}

/// Opaque system configuration handle.
pub struct RiscapConfig {
    inner: SystemConfig,
}

// ----- error plumbing ----------------------------------------------------------

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(detail: &str) {
    let sanitized: String = detail.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: RiscapStatus, detail: &str) -> RiscapStatus {
    set_last_error(detail);
    status
}

fn fail_with(err: &Error) -> RiscapStatus {
    let status = match err {
        Error::Dimension { .. } | Error::Domain { .. } | Error::Config { .. } => {
            RiscapStatus::InvalidArgument
        }
        Error::Numeric { .. } => RiscapStatus::NumericFailure,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => RiscapStatus::IoFailure,
    };
    fail(status, &err.to_string())
}

fn guarded(f: impl FnOnce() -> RiscapStatus) -> RiscapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic at the FFI boundary".to_string());
            fail(RiscapStatus::Internal, &detail)
        }
    }
}

/// Detail message of the most recent failure on the calling thread, empty
/// when the last call succeeded. The pointer stays valid until the next
/// failing riscap call on the same thread.
#[no_mangle]
pub extern "C" fn riscap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static description of a status code; never null.
#[no_mangle]
pub extern "C" fn riscap_status_message(status: RiscapStatus) -> *const c_char {
    let text: &'static CStr = match status {
        RiscapStatus::Ok => c"ok",
        RiscapStatus::NullArgument => c"required pointer argument was null",
        RiscapStatus::InvalidArgument => c"argument failed validation",
        RiscapStatus::NumericFailure => c"numeric routine failed",
        RiscapStatus::IoFailure => c"serialization or i/o failed",
        RiscapStatus::Internal => c"internal error (caught panic)",
    };
    text.as_ptr()
}

// ----- configuration handle -----------------------------------------------------

/// Creates a configuration with the reference defaults
/// (16 BS antennas, 8x8 RIS, 16 user antennas, P = 6, L = 8, unit budget and
/// noise). Returns through `out`; free with `riscap_config_free`.
#[no_mangle]
pub extern "C" fn riscap_config_new_default(out: *mut *mut RiscapConfig) -> RiscapStatus {
    guarded(|| {
        if out.is_null() {
            return fail(RiscapStatus::NullArgument, "out is null");
        }
        let handle = Box::new(RiscapConfig { inner: SystemConfig::default() });
        unsafe { *out = Box::into_raw(handle) };
        RiscapStatus::Ok
    })
}

/// Creates a validated configuration. The RIS panel is `n_r_y` x `n_r_z`
/// elements. Returns through `out`; free with `riscap_config_free`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn riscap_config_new(
    n_b: u32,
    n_r_y: u32,
    n_r_z: u32,
    n_u: u32,
    p_paths: u32,
    l_paths: u32,
    power_budget: f64,
    noise_var: f64,
    out: *mut *mut RiscapConfig,
) -> RiscapStatus {
    guarded(|| {
        if out.is_null() {
            return fail(RiscapStatus::NullArgument, "out is null");
        }
        let cfg = SystemConfig {
            n_b: n_b as usize,
            n_r_y: n_r_y as usize,
            n_r_z: n_r_z as usize,
            n_u: n_u as usize,
            p_paths: p_paths as usize,
            l_paths: l_paths as usize,
            power_budget,
            noise_var,
            ..SystemConfig::default()
        };
        if let Err(e) = cfg.validate() {
            return fail_with(&e);
        }
        unsafe { *out = Box::into_raw(Box::new(RiscapConfig { inner: cfg })) };
        RiscapStatus::Ok
    })
}

/// Rescales the power budget so that `P_T / sigma^2` equals the given SNR.
#[no_mangle]
pub extern "C" fn riscap_config_set_snr_db(
    cfg: *mut RiscapConfig,
    snr_db: f64,
) -> RiscapStatus {
    guarded(|| {
        let Some(handle) = (unsafe { cfg.as_mut() }) else {
            return fail(RiscapStatus::NullArgument, "cfg is null");
        };
        let updated = handle.inner.with_snr_db(snr_db);
        if let Err(e) = updated.validate() {
            return fail_with(&e);
        }
        handle.inner = updated;
        RiscapStatus::Ok
    })
}

/// Releases a configuration handle; a null pointer is a no-op.
#[no_mangle]
pub extern "C" fn riscap_config_free(cfg: *mut RiscapConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

// ----- evaluation entry points ----------------------------------------------------

fn quantity_kind(q: RiscapQuantity) -> CapacityKind {
    match q {
        RiscapQuantity::ExactMc => CapacityKind::ExactMc,
        RiscapQuantity::AppMc => CapacityKind::AppMc,
        RiscapQuantity::AppQuadrature => CapacityKind::AppQuadrature,
        RiscapQuantity::Jen1 => CapacityKind::Jen1,
        RiscapQuantity::Jen2 => CapacityKind::Jen2,
        RiscapQuantity::HighSnrUpper => CapacityKind::HighSnrUpper,
    }
}

fn usize_arg(value: u64, name: &str) -> Result<usize, RiscapStatus> {
    usize::try_from(value)
        .map_err(|_| fail(RiscapStatus::InvalidArgument, &format!("{name} overflows usize")))
}

/// Ergodic-capacity estimate at the reference point (equal-power covariance,
/// fresh random phases per realization), averaged over `trials` angle
/// realizations drawn from `master_seed`. Writes the mean and its standard
/// error. The high-SNR upper bound can be `-inf` (rank-deficient draws), in
/// which case the standard error is NaN.
#[no_mangle]
pub extern "C" fn riscap_ergodic_capacity(
    cfg: *const RiscapConfig,
    quantity: RiscapQuantity,
    trials: u64,
    master_seed: u64,
    out_value: *mut f64,
    out_std_err: *mut f64,
) -> RiscapStatus {
    guarded(|| {
        let Some(handle) = (unsafe { cfg.as_ref() }) else {
            return fail(RiscapStatus::NullArgument, "cfg is null");
        };
        if out_value.is_null() || out_std_err.is_null() {
            return fail(RiscapStatus::NullArgument, "out_value/out_std_err is null");
        }
        let trials = match usize_arg(trials, "trials") {
            Ok(v) => v,
            Err(status) => return status,
        };
        let kind = quantity_kind(quantity);
        let spec = ExperimentSpec {
            base: handle.inner.clone(),
            sweep: Sweep::default(),
            trials,
            master_seed,
            mode: if kind == CapacityKind::HighSnrUpper { Mode::UpperBound } else { Mode::Validate },
            quantities: vec![kind],
            variants: vec![OptimizeVariant::Both],
            gain_draws: 1,
            trace: false,
        };
        if let Err(e) = spec.validate() {
            return fail_with(&e);
        }
        let table = match run_experiment(&spec) {
            Ok(t) => t,
            Err(e) => return fail_with(&e),
        };
        let value = table.column_index(kind.as_str()).expect("quantity column");
        let std_err = table.column_index(&format!("{}_stderr", kind.as_str())).expect("stderr column");
        unsafe {
            *out_value = table.rows[0][value];
            *out_std_err = table.rows[0][std_err];
        }
        RiscapStatus::Ok
    })
}

/// Joint covariance/phase optimization over `trials` angle realizations.
/// Writes the mean surrogate objective before and after optimization and the
/// mean exact capacity of the optimized pair (over `gain_draws` fresh gain
/// draws per realization).
#[no_mangle]
pub extern "C" fn riscap_optimize(
    cfg: *const RiscapConfig,
    trials: u64,
    master_seed: u64,
    gain_draws: u64,
    out_jen2_initial: *mut f64,
    out_jen2_final: *mut f64,
    out_exact: *mut f64,
) -> RiscapStatus {
    guarded(|| {
        let Some(handle) = (unsafe { cfg.as_ref() }) else {
            return fail(RiscapStatus::NullArgument, "cfg is null");
        };
        if out_jen2_initial.is_null() || out_jen2_final.is_null() || out_exact.is_null() {
            return fail(RiscapStatus::NullArgument, "an out pointer is null");
        }
        let trials = match usize_arg(trials, "trials") {
            Ok(v) => v,
            Err(status) => return status,
        };
        let gain_draws = match usize_arg(gain_draws, "gain_draws") {
            Ok(v) => v,
            Err(status) => return status,
        };
        let spec = ExperimentSpec {
            base: handle.inner.clone(),
            sweep: Sweep::default(),
            trials,
            master_seed,
            mode: Mode::Optimize,
            quantities: vec![CapacityKind::ExactMc],
            variants: vec![OptimizeVariant::Both],
            gain_draws,
            trace: false,
        };
        if let Err(e) = spec.validate() {
            return fail_with(&e);
        }
        let table = match run_experiment(&spec) {
            Ok(t) => t,
            Err(e) => return fail_with(&e),
        };
        let get = |name: &str| table.rows[0][table.column_index(name).expect("optimize column")];
        unsafe {
            *out_jen2_initial = get("jen2_initial");
            *out_jen2_final = get("jen2_final");
            *out_exact = get("exact_mc");
        }
        RiscapStatus::Ok
    })
}

/// Runs a full experiment described by a JSON spec (same schema as the CLI
/// `--config` file) and returns the result table as a newly allocated
/// NUL-terminated string in the requested format. Free it with
/// `riscap_string_free`.
#[no_mangle]
pub extern "C" fn riscap_run_json(
    spec_json: *const c_char,
    format: RiscapFormat,
    out: *mut *mut c_char,
) -> RiscapStatus {
    guarded(|| {
        if spec_json.is_null() || out.is_null() {
            return fail(RiscapStatus::NullArgument, "spec_json/out is null");
        }
        let text = match unsafe { CStr::from_ptr(spec_json) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(RiscapStatus::InvalidArgument, "spec_json is not UTF-8"),
        };
        let spec = match parse_spec(text) {
            Ok(s) => s,
            Err(e) => return fail_with(&e),
        };
        let table = match run_experiment(&spec) {
            Ok(t) => t,
            Err(e) => return fail_with(&e),
        };
        let rendered = match format {
            RiscapFormat::Csv => table.to_csv_string(),
            RiscapFormat::Json => table.to_json_string(),
        };
        let rendered = match rendered {
            Ok(r) => r,
            Err(e) => return fail_with(&e),
        };
        match CString::new(rendered) {
            Ok(c) => {
                unsafe { *out = c.into_raw() };
                RiscapStatus::Ok
            }
            Err(_) => fail(RiscapStatus::Internal, "result contained an interior NUL"),
        }
    })
}

/// Releases a string returned by `riscap_run_json`; a null pointer is a no-op.
#[no_mangle]
pub extern "C" fn riscap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
