//! C ABI for the ctxprune compressor.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `_free` function. Every fallible call returns a
//! [`CtxpruneStatus`]; on failure a description is available from
//! [`ctxprune_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ctxprune::config::Settings;
use ctxprune::eval::{edit_similarity, exact_match};
use ctxprune::pipeline::{compress, CompressionResult};
use ctxprune::scorer::ScorerBackend;
use ctxprune::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtxpruneStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    ConfigInvalid = 4,
    BackendError = 5,
    Internal = 6,
}

/// Settings plus a ready scorer backend.
pub struct CtxpruneCompressor {
    settings: Settings,
    backend: Box<dyn ScorerBackend>,
}

/// A finished compression.
pub struct CtxpruneResult {
    result: CompressionResult,
    text: CString,
    metadata: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> CtxpruneStatus {
    match e {
        _ if e.is_backend() => CtxpruneStatus::BackendError,
        Error::ConfigInvalid(_) | Error::UnknownProfile(_) => CtxpruneStatus::ConfigInvalid,
        _ => CtxpruneStatus::InvalidInput,
    }
}

/// Runs `f`, turning errors and panics into a status code.
fn guarded(f: impl FnOnce() -> Result<(), CtxpruneStatus>) -> CtxpruneStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtxpruneStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CtxpruneStatus::Internal
        }
    }
}

fn fail(e: Error) -> CtxpruneStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CtxpruneStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(CtxpruneStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        CtxpruneStatus::InvalidUtf8
    })
}

fn c_string(s: &str) -> CString {
    CString::new(s.replace('\0', "")).expect("NUL bytes removed")
}

/// Creates a compressor from TOML settings (`[compression]` and `[backend]`
/// sections). A null `config_toml` selects the defaults with the mock backend.
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out` must be a valid
/// pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_compressor_new(
    config_toml: *const c_char,
    out: *mut *mut CtxpruneCompressor,
) -> CtxpruneStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return Err(CtxpruneStatus::NullArgument);
        }
        *out = ptr::null_mut();
        let settings = if config_toml.is_null() {
            Settings::default()
        } else {
            let text = str_arg(config_toml, "config_toml")?;
            Settings::from_toml(text).map_err(fail)?
        };
        settings.compression.validate().map_err(fail)?;
        let backend = settings.backend.build().map_err(fail)?;
        *out = Box::into_raw(Box::new(CtxpruneCompressor { settings, backend }));
        Ok(())
    })
}

/// Sets the token budget. Zero is rejected.
///
/// # Safety
/// `compressor` must come from [`ctxprune_compressor_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_compressor_set_budget(
    compressor: *mut CtxpruneCompressor,
    budget: usize,
) -> CtxpruneStatus {
    guarded(|| {
        let c = compressor.as_mut().ok_or_else(|| {
            set_error("compressor is null");
            CtxpruneStatus::NullArgument
        })?;
        if budget == 0 {
            set_error("budget must be positive");
            return Err(CtxpruneStatus::ConfigInvalid);
        }
        c.settings.compression.budget = ctxprune::text::TokenCount(budget);
        Ok(())
    })
}

/// # Safety
/// `compressor` must be null or come from [`ctxprune_compressor_new`], and not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_compressor_free(compressor: *mut CtxpruneCompressor) {
    if !compressor.is_null() {
        drop(Box::from_raw(compressor));
    }
}

/// Compresses `source` for `instruction`.
///
/// # Safety
/// `compressor` must be live; `source` and `instruction` NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_compress(
    compressor: *const CtxpruneCompressor,
    source: *const c_char,
    instruction: *const c_char,
    out: *mut *mut CtxpruneResult,
) -> CtxpruneStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return Err(CtxpruneStatus::NullArgument);
        }
        *out = ptr::null_mut();
        let c = compressor.as_ref().ok_or_else(|| {
            set_error("compressor is null");
            CtxpruneStatus::NullArgument
        })?;
        let source = str_arg(source, "source")?;
        let instruction = str_arg(instruction, "instruction")?;
        let result = compress(source, instruction, &c.settings.compression, &*c.backend).map_err(fail)?;
        let text = c_string(&result.compressed_text);
        let metadata = c_string(&result.metadata().to_string());
        *out = Box::into_raw(Box::new(CtxpruneResult { result, text, metadata }));
        Ok(())
    })
}

/// Compressed text, valid until the result is freed. Null for a null result.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_text(result: *const CtxpruneResult) -> *const c_char {
    result.as_ref().map_or(ptr::null(), |r| r.text.as_ptr())
}

/// Result metadata as JSON, valid until the result is freed.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_metadata_json(result: *const CtxpruneResult) -> *const c_char {
    result.as_ref().map_or(ptr::null(), |r| r.metadata.as_ptr())
}

/// Original over emitted tokens; NaN when nothing was emitted or `result` is null.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_ratio(result: *const CtxpruneResult) -> f64 {
    result.as_ref().and_then(|r| r.result.ratio).unwrap_or(f64::NAN)
}

/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_original_tokens(result: *const CtxpruneResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.original_tokens.get())
}

/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_retained_tokens(result: *const CtxpruneResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.retained_tokens.get())
}

/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_emitted_tokens(result: *const CtxpruneResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.emitted_tokens.get())
}

/// Number of warnings recorded for the run.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_warning_count(result: *const CtxpruneResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.warnings.len())
}

/// # Safety
/// `result` must be null or come from [`ctxprune_compress`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_result_free(result: *mut CtxpruneResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Edit similarity in `[0, 100]`.
///
/// # Safety
/// Both strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_edit_similarity(
    hypothesis: *const c_char,
    reference: *const c_char,
    out: *mut f64,
) -> CtxpruneStatus {
    guarded(|| {
        let h = str_arg(hypothesis, "hypothesis")?;
        let r = str_arg(reference, "reference")?;
        let out = out.as_mut().ok_or_else(|| {
            set_error("out is null");
            CtxpruneStatus::NullArgument
        })?;
        *out = edit_similarity(h, r);
        Ok(())
    })
}

/// Exact match (0 or 1) after trailing-whitespace normalization.
///
/// # Safety
/// Both strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctxprune_exact_match(
    hypothesis: *const c_char,
    reference: *const c_char,
    out: *mut c_int,
) -> CtxpruneStatus {
    guarded(|| {
        let h = str_arg(hypothesis, "hypothesis")?;
        let r = str_arg(reference, "reference")?;
        let out = out.as_mut().ok_or_else(|| {
            set_error("out is null");
            CtxpruneStatus::NullArgument
        })?;
        *out = c_int::from(exact_match(h, r));
        Ok(())
    })
}

/// Message for the last failure on this thread, or null. Valid until the next
/// call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ctxprune_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ctxprune_version() -> *const c_char {
    VERSION.as_ptr().cast()
}
