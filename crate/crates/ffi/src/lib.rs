//! C ABI for the simulator: opaque handles, integer status codes, and
//! JSON/CSV string outputs. The generated header lands in `include/qrc.h`.
//!
//! Conventions:
//! * Every fallible call returns a [`QrcStatus`]; `QRC_STATUS_OK` is 0.
//! * On failure, [`qrc_last_error_message`] returns a thread-local
//!   description of the most recent error on the calling thread.
//! * Strings returned through out-pointers are NUL-terminated, owned by the
//!   caller, and must be released with [`qrc_string_free`].
//! * Handles must be released with their matching `*_free` function; every
//!   `*_free` accepts NULL.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qrc_core::error::Error;
use qrc_core::harness::{csv_string, resolve_config, run_experiment, ExperimentConfig, ResultRecord};

/// Opaque experiment configuration handle.
pub struct QrcConfig(ExperimentConfig);

/// Opaque result-set handle.
pub struct QrcRecords(Vec<ResultRecord>);

/// Call outcome. The header names these `QRC_STATUS_*`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrcStatus {
    /// Success.
    Ok = 0,
    /// A pointer argument was NULL, a string was not valid UTF-8, or the
    /// configuration was rejected.
    InvalidArgument = 1,
    /// The computation itself failed.
    RuntimeError = 2,
    /// A panic was caught at the boundary; the library state is still
    /// usable but the call produced nothing.
    Panic = 3,
}

const QRC_STATUS_OK: QrcStatus = QrcStatus::Ok;
const QRC_STATUS_INVALID_ARGUMENT: QrcStatus = QrcStatus::InvalidArgument;
const QRC_STATUS_RUNTIME_ERROR: QrcStatus = QrcStatus::RuntimeError;
const QRC_STATUS_PANIC: QrcStatus = QrcStatus::Panic;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_for(error: &Error) -> QrcStatus {
    match error {
        Error::InvalidConfig(_) | Error::UnknownPreset(_) | Error::Json(_) => {
            QRC_STATUS_INVALID_ARGUMENT
        }
        _ => QRC_STATUS_RUNTIME_ERROR,
    }
}

/// Runs `f` behind the panic boundary, storing any error message.
fn guarded<F: FnOnce() -> Result<QrcStatus, (QrcStatus, String)>>(f: F) -> QrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("panic: {message}"));
            QRC_STATUS_PANIC
        }
    }
}

fn invalid(message: impl Into<String>) -> (QrcStatus, String) {
    (QRC_STATUS_INVALID_ARGUMENT, message.into())
}

fn from_error(e: Error) -> (QrcStatus, String) {
    (status_for(&e), e.to_string())
}

/// # Safety
/// `s` must be NULL or a NUL-terminated C string.
unsafe fn required_str<'a>(s: *const c_char, name: &str) -> Result<&'a str, (QrcStatus, String)> {
    if s.is_null() {
        return Err(invalid(format!("{name} is NULL")));
    }
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

fn emit_string(out: *mut *mut c_char, text: String) -> Result<QrcStatus, (QrcStatus, String)> {
    let cstring =
        CString::new(text).map_err(|_| invalid("output contains an interior NUL byte"))?;
    unsafe { *out = cstring.into_raw() };
    Ok(QRC_STATUS_OK)
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn qrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn qrc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds a config from a named preset (e.g. "frp-default", "dsp").
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrc_config_from_preset(
    name: *const c_char,
    out: *mut *mut QrcConfig,
) -> QrcStatus {
    guarded(|| {
        if out.is_null() {
            return Err(invalid("out is NULL"));
        }
        let name = unsafe { required_str(name, "name")? };
        let config = qrc_core::harness::preset(name).map_err(from_error)?;
        unsafe { *out = Box::into_raw(Box::new(QrcConfig(config))) };
        Ok(QRC_STATUS_OK)
    })
}

/// Builds a config from a JSON document. The document may be partial if it
/// names a preset under a "preset" key.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrc_config_from_json(
    json: *const c_char,
    out: *mut *mut QrcConfig,
) -> QrcStatus {
    guarded(|| {
        if out.is_null() {
            return Err(invalid("out is NULL"));
        }
        let json = unsafe { required_str(json, "json")? };
        let document: serde_json::Value =
            serde_json::from_str(json).map_err(|e| invalid(format!("json does not parse: {e}")))?;
        let config = resolve_config(None, Some(&document)).map_err(from_error)?;
        unsafe { *out = Box::into_raw(Box::new(QrcConfig(config))) };
        Ok(QRC_STATUS_OK)
    })
}

/// Overrides the master seed.
///
/// # Safety
/// `config` must be a live handle from a `qrc_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn qrc_config_set_seed(config: *mut QrcConfig, seed: u64) -> QrcStatus {
    guarded(|| {
        let config = unsafe { config.as_mut() }.ok_or_else(|| invalid("config is NULL"))?;
        config.0.master_seed = seed;
        Ok(QRC_STATUS_OK)
    })
}

/// Serializes the resolved config as JSON.
///
/// # Safety
/// `config` must be a live handle; `out` must be a valid pointer. The
/// returned string is released with `qrc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn qrc_config_to_json(
    config: *const QrcConfig,
    out: *mut *mut c_char,
) -> QrcStatus {
    guarded(|| {
        let config = unsafe { config.as_ref() }.ok_or_else(|| invalid("config is NULL"))?;
        if out.is_null() {
            return Err(invalid("out is NULL"));
        }
        let json = serde_json::to_string_pretty(&config.0)
            .map_err(|e| (QRC_STATUS_RUNTIME_ERROR, e.to_string()))?;
        emit_string(out, json)
    })
}

/// Releases a config handle (NULL is a no-op).
///
/// # Safety
/// `config` must be NULL or a live handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qrc_config_free(config: *mut QrcConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Runs the experiment over its Hamiltonian ensemble and returns the
/// records.
///
/// # Safety
/// `config` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrc_run(config: *const QrcConfig, out: *mut *mut QrcRecords) -> QrcStatus {
    guarded(|| {
        let config = unsafe { config.as_ref() }.ok_or_else(|| invalid("config is NULL"))?;
        if out.is_null() {
            return Err(invalid("out is NULL"));
        }
        let records = run_experiment(&config.0).map_err(from_error)?;
        unsafe { *out = Box::into_raw(Box::new(QrcRecords(records))) };
        Ok(QRC_STATUS_OK)
    })
}

/// Number of records in a result set; 0 for NULL.
///
/// # Safety
/// `records` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrc_records_len(records: *const QrcRecords) -> usize {
    unsafe { records.as_ref() }.map_or(0, |r| r.0.len())
}

/// Serializes a result set as a JSON array.
///
/// # Safety
/// `records` must be a live handle; `out` must be a valid pointer. The
/// returned string is released with `qrc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn qrc_records_to_json(
    records: *const QrcRecords,
    out: *mut *mut c_char,
) -> QrcStatus {
    guarded(|| {
        let records = unsafe { records.as_ref() }.ok_or_else(|| invalid("records is NULL"))?;
        if out.is_null() {
            return Err(invalid("out is NULL"));
        }
        let json = serde_json::to_string_pretty(&records.0)
            .map_err(|e| (QRC_STATUS_RUNTIME_ERROR, e.to_string()))?;
        emit_string(out, json)
    })
}

/// Serializes a result set as CSV with the fixed column set.
///
/// # Safety
/// `records` must be a live handle; `out` must be a valid pointer. The
/// returned string is released with `qrc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn qrc_records_to_csv(
    records: *const QrcRecords,
    out: *mut *mut c_char,
) -> QrcStatus {
    guarded(|| {
        let records = unsafe { records.as_ref() }.ok_or_else(|| invalid("records is NULL"))?;
        if out.is_null() {
            return Err(invalid("out is NULL"));
        }
        let csv = csv_string(&records.0).map_err(from_error)?;
        emit_string(out, csv)
    })
}

/// Releases a result-set handle (NULL is a no-op).
///
/// # Safety
/// `records` must be NULL or a live handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qrc_records_free(records: *mut QrcRecords) {
    if !records.is_null() {
        drop(unsafe { Box::from_raw(records) });
    }
}

/// Releases a string returned through an out-pointer (NULL is a no-op).
///
/// # Safety
/// `s` must be NULL or a string produced by this library, and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qrc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
