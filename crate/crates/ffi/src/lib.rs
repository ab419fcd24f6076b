//! C ABI over the marsad engine.
//!
//! Every call returns a [`MarsadStatus`]. On failure a message is kept per
//! thread and can be read with [`marsad_last_error`]. Strings handed out
//! through `out` parameters are owned by the caller and must be released
//! with [`marsad_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use marsad_core::config::Config;
use marsad_core::engine::{export_payload, Engine, EngineError, ExportFormat};
use marsad_core::ingest::{PostSchema, SourceFormat};
use marsad_core::store::{AnalysisKind, DatasetId, JobId, Store};

/// Result of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarsadStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an unparsable option.
    InvalidArgument = 1,
    NotFound = 2,
    /// Input rejected by validation.
    Validation = 3,
    /// Conflicting state, e.g. exporting an unfinished job.
    Conflict = 4,
    Internal = 5,
    /// A panic was caught at the boundary.
    Panic = 6,
}

/// Opaque engine handle.
pub struct MarsadHandle {
    engine: Engine,
    seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MarsadStatus, String);

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let status = if e.is_not_found() {
            MarsadStatus::NotFound
        } else if matches!(e.code(), "DUPLICATE_JOB" | "ILLEGAL_TRANSITION" | "NO_RESULT") {
            MarsadStatus::Conflict
        } else if e.is_user_error() {
            MarsadStatus::Validation
        } else {
            MarsadStatus::Internal
        };
        Failure(status, format!("{}: {e}", e.code()))
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(MarsadStatus::InvalidArgument, message.into())
}

fn set_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes removed"));
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MarsadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            MarsadStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(Some(message));
            status
        }
        Err(_) => {
            set_error(Some("panic inside marsad".into()));
            MarsadStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

/// # Safety
/// `out` is null or writable.
unsafe fn give_string(out: *mut *mut c_char, value: impl Into<Vec<u8>>) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    let c = CString::new(value).map_err(|_| Failure(MarsadStatus::Internal, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// # Safety
/// `h` is null or a live handle from [`marsad_open`].
unsafe fn handle<'a>(h: *const MarsadHandle) -> Result<&'a MarsadHandle, Failure> {
    h.as_ref().ok_or_else(|| invalid("handle is null"))
}

/// Open (creating if needed) a data directory. `config_path` may be null
/// for defaults; a non-null `data_dir` overrides the config's.
///
/// # Safety
/// String arguments are null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn marsad_open(
    data_dir: *const c_char,
    config_path: *const c_char,
    out: *mut *mut MarsadHandle,
) -> MarsadStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let mut config = match opt_text(config_path, "config_path")? {
            Some(p) => Config::load(p.as_ref()).map_err(|e| invalid(e.to_string()))?,
            None => Config::default(),
        };
        if let Some(dir) = opt_text(data_dir, "data_dir")? {
            config.data_dir = PathBuf::from(dir);
        }
        let store = Store::open(&config.data_dir).map_err(|e| Failure::from(EngineError::from(e)))?;
        let options = config.engine_options().map_err(|e| invalid(e.to_string()))?;
        let h = MarsadHandle {
            engine: Engine::new(Arc::new(store), options),
            seed: config.seed,
        };
        *out = Box::into_raw(Box::new(h));
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `h` is null or a handle from [`marsad_open`] not yet closed.
#[no_mangle]
pub unsafe extern "C" fn marsad_close(h: *mut MarsadHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Validate and store `len` bytes of `format` (csv, tsv, json, jsonl).
/// `schema_json` may be null for the default schema. Writes the ingest
/// outcome as JSON to `out_json`.
///
/// # Safety
/// `data` points at `len` readable bytes; other pointers as documented.
#[no_mangle]
pub unsafe extern "C" fn marsad_ingest(
    h: *const MarsadHandle,
    name: *const c_char,
    data: *const u8,
    len: usize,
    format: *const c_char,
    schema_json: *const c_char,
    out_json: *mut *mut c_char,
) -> MarsadStatus {
    guard(|| {
        let h = handle(h)?;
        let name = text(name, "name")?;
        if data.is_null() && len > 0 {
            return Err(invalid("data is null"));
        }
        let bytes = if len == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
        let format: SourceFormat = text(format, "format")?.parse().map_err(|e: marsad_core::ingest::IngestError| invalid(e.to_string()))?;
        let schema: PostSchema = match opt_text(schema_json, "schema_json")? {
            Some(s) => serde_json::from_str(s).map_err(|e| invalid(format!("schema: {e}")))?,
            None => PostSchema::default(),
        };
        let outcome = h.engine.ingest(name, bytes, format, &schema)?;
        give_string(out_json, serde_json::to_vec(&outcome).map_err(|e| Failure::from(EngineError::from(e)))?)
    })
}

/// Run an analysis synchronously. `kind` is one of subtopics, wordcloud,
/// sentiment, propaganda, trends, spatial, network, post_analysis. A
/// negative `seed` uses the configured default. Writes the payload JSON to
/// `out_json` and the recorded job id to `out_job_id` (may be null).
///
/// # Safety
/// Pointers as documented.
#[no_mangle]
pub unsafe extern "C" fn marsad_analyze(
    h: *const MarsadHandle,
    dataset_id: *const c_char,
    kind: *const c_char,
    seed: i64,
    out_json: *mut *mut c_char,
    out_job_id: *mut *mut c_char,
) -> MarsadStatus {
    guard(|| {
        let h = handle(h)?;
        let dataset = DatasetId::from(text(dataset_id, "dataset_id")?);
        let kind_text = text(kind, "kind")?;
        let kind: AnalysisKind = kind_text
            .parse()
            .map_err(|_| invalid(format!("unknown analysis kind `{kind_text}`")))?;
        let seed = u64::try_from(seed).unwrap_or(h.seed);
        let result = h.engine.analyze_now(&dataset, kind, seed)?;
        let payload = export_payload(&result.payload, ExportFormat::Json)?;
        give_string(out_json, payload)?;
        if !out_job_id.is_null() {
            give_string(out_job_id, result.job_id.as_str())?;
        }
        Ok(())
    })
}

/// Export a finished job as `csv` or `json`.
///
/// # Safety
/// Pointers as documented.
#[no_mangle]
pub unsafe extern "C" fn marsad_export(
    h: *const MarsadHandle,
    job_id: *const c_char,
    format: *const c_char,
    out: *mut *mut c_char,
) -> MarsadStatus {
    guard(|| {
        let h = handle(h)?;
        let job = JobId::from(text(job_id, "job_id")?);
        let format: ExportFormat = text(format, "format")?.parse().map_err(invalid)?;
        let bytes = h.engine.export(&job, format)?;
        give_string(out, bytes)
    })
}

/// Fold a dataset's sentiment annotations into the lexicon; writes the
/// feedback report JSON.
///
/// # Safety
/// Pointers as documented.
#[no_mangle]
pub unsafe extern "C" fn marsad_apply_feedback(
    h: *const MarsadHandle,
    dataset_id: *const c_char,
    out_json: *mut *mut c_char,
) -> MarsadStatus {
    guard(|| {
        let h = handle(h)?;
        let report = h.engine.apply_feedback(&DatasetId::from(text(dataset_id, "dataset_id")?))?;
        give_string(out_json, serde_json::to_vec(&report).map_err(|e| Failure::from(EngineError::from(e)))?)
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn marsad_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned through an `out` parameter. Null is ignored.
///
/// # Safety
/// `s` is null or came from this library and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn marsad_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn marsad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
