//! C ABI over the openmaps checkers.
//!
//! Models are parsed once into opaque [`OmModel`] handles. Every checker
//! writes one JSON document to `*out`, shaped exactly like the command-line
//! output, and returns an [`OmStatus`]. Strings handed out by this library
//! are released with [`om_string_free`], handles with [`om_model_free`].

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use openmaps::frontend::commands::{
    bisim_models, check_witness_models, laws_check_samples, morphism_check_models, open_check_models, validate_model, BisimArgs,
    SampleArgs, DEFAULT_HYBRID_DEPTH,
};
use openmaps::frontend::model::LoadError;
use openmaps::frontend::{parse_model, CommandError, Model, Outcome};
use serde_json::{json, Value};

/// Result codes. The first three match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmStatus {
    /// A verdict was reached, negative verdicts included.
    OmOk = 0,
    /// A bounded search ended without a verdict.
    OmInconclusive = 1,
    /// The inputs were rejected; `*out` holds the error document.
    OmInputError = 2,
    /// A required pointer was null; `*out` is left null.
    OmNullArgument = 3,
    /// A string argument is not UTF-8; `*out` is left null.
    OmInvalidUtf8 = 4,
    /// The library failed internally; `*out` holds a message when possible.
    OmInternalError = 5,
}

/// A parsed model file of any kind.
pub struct OmModel {
    model: Model,
}

enum Fail {
    Null,
    Utf8,
}

impl From<Fail> for OmStatus {
    fn from(f: Fail) -> Self {
        match f {
            Fail::Null => OmStatus::OmNullArgument,
            Fail::Utf8 => OmStatus::OmInvalidUtf8,
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

unsafe fn opt_text<'a>(p: *const c_char) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p).map(Some)
    }
}

unsafe fn handle<'a>(p: *const OmModel) -> Result<&'a Model, Fail> {
    p.as_ref().map(|m| &m.model).ok_or(Fail::Null)
}

fn to_c(s: String) -> *mut c_char {
    // JSON output never holds interior NULs: serde_json escapes them.
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

fn status_of(o: &Outcome) -> OmStatus {
    match o.code {
        0 => OmStatus::OmOk,
        1 => OmStatus::OmInconclusive,
        _ => OmStatus::OmInputError,
    }
}

fn usage(msg: &str) -> Outcome {
    CommandError::Usage(msg.to_string()).outcome()
}

/// Runs `f`, writes its outcome to `out`, and maps panics to `OmInternalError`.
unsafe fn run(out: *mut *mut c_char, f: impl FnOnce() -> Result<Outcome, Fail>) -> OmStatus {
    if out.is_null() {
        return OmStatus::OmNullArgument;
    }
    *out = ptr::null_mut();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(o)) => {
            *out = to_c(o.render());
            status_of(&o)
        }
        Ok(Err(e)) => e.into(),
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            let body = json!({ "verdict": "internal-error", "error": { "category": "internal", "message": msg.unwrap_or_default() } });
            *out = to_c(body.to_string());
            OmStatus::OmInternalError
        }
    }
}

fn words_of(m: Option<&Model>) -> Result<Vec<openmaps::timed::TimedWord>, Outcome> {
    match m {
        None => Ok(Vec::new()),
        Some(Model::Words(w)) => Ok(w.clone()),
        Some(other) => Err(usage(&format!("expected a words model, got {}", other.kind()))),
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn om_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn om_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a model file's text. On success `*model` owns a new handle and
/// `*error` is null; on `OmInputError` `*error` holds the error document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `model` and `error` writable.
#[no_mangle]
pub unsafe extern "C" fn om_model_parse(json: *const c_char, model: *mut *mut OmModel, error: *mut *mut c_char) -> OmStatus {
    if model.is_null() || error.is_null() {
        return OmStatus::OmNullArgument;
    }
    *model = ptr::null_mut();
    *error = ptr::null_mut();
    let src = match text(json) {
        Ok(s) => s,
        Err(e) => return e.into(),
    };
    match catch_unwind(|| parse_model(src)) {
        Ok(Ok(m)) => {
            *model = Box::into_raw(Box::new(OmModel { model: m }));
            OmStatus::OmOk
        }
        Ok(Err(source)) => {
            *error = to_c(CommandError::Load(LoadError::Parse { path: "<input>".into(), source }).outcome().render());
            OmStatus::OmInputError
        }
        Err(_) => OmStatus::OmInternalError,
    }
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`om_model_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn om_model_free(model: *mut OmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// The model's kind (`"lts"`, `"prob"`, ...) as a new string, or null.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn om_model_kind(model: *const OmModel) -> *mut c_char {
    match model.as_ref() {
        Some(m) => to_c(m.model.kind().to_string()),
        None => ptr::null_mut(),
    }
}

/// The model re-serialized as a model file.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_model_to_json(model: *const OmModel, out: *mut *mut c_char) -> OmStatus {
    if out.is_null() {
        return OmStatus::OmNullArgument;
    }
    match model.as_ref() {
        Some(m) => {
            *out = to_c(serde_json::to_string_pretty(&m.model.to_file()).unwrap_or_default());
            OmStatus::OmOk
        }
        None => {
            *out = ptr::null_mut();
            OmStatus::OmNullArgument
        }
    }
}

/// Kind and size summary of a model.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_validate(model: *const OmModel, out: *mut *mut c_char) -> OmStatus {
    run(out, || Ok(validate_model(handle(model)?)))
}

/// Bisimilarity of two models of the same kind. `epsilon`, `policy` and
/// `words` may be null; `depth` 0 selects the default bound.
///
/// # Safety
/// Handles must be live or null where allowed; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn om_bisim(
    a: *const OmModel,
    b: *const OmModel,
    epsilon: *const c_char,
    depth: usize,
    policy: *const c_char,
    words: *const OmModel,
    out: *mut *mut c_char,
) -> OmStatus {
    run(out, || {
        let (a, b) = (handle(a)?.clone(), handle(b)?.clone());
        let args = BisimArgs {
            epsilon: opt_text(epsilon)?.map(str::to_string),
            depth: (depth > 0).then_some(depth),
            policy: opt_text(policy)?.map(str::to_string),
            words: None,
        };
        Ok(match words_of(words.as_ref().map(|w| &w.model)) {
            Ok(w) => bisim_models(a, b, &args, w),
            Err(o) => o,
        })
    })
}

/// Checks that the morphism model `f` maps `a` into `b`. `seed` drives the
/// sampler for hybrid systems; `depth` 0 selects the default; `words` may be null.
///
/// # Safety
/// Handles must be live or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn om_morphism_check(
    f: *const OmModel,
    a: *const OmModel,
    b: *const OmModel,
    seed: u64,
    depth: usize,
    words: *const OmModel,
    out: *mut *mut c_char,
) -> OmStatus {
    run(out, || {
        let (fm, a, b) = (handle(f)?, handle(a)?.clone(), handle(b)?.clone());
        let Model::Morphism(mapping) = fm else { return Ok(usage(&format!("expected a morphism model, got {}", fm.kind()))) };
        let opts = SampleArgs { seed, depth: if depth > 0 { depth } else { DEFAULT_HYBRID_DEPTH }, words: None };
        Ok(match words_of(words.as_ref().map(|w| &w.model)) {
            Ok(w) => morphism_check_models(mapping.clone(), a, b, &opts, w),
            Err(o) => o,
        })
    })
}

/// Openness of `f: a -> b` by both decision routes. `max_len` 0 selects the default.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn om_open_check(
    f: *const OmModel,
    a: *const OmModel,
    b: *const OmModel,
    max_len: usize,
    out: *mut *mut c_char,
) -> OmStatus {
    run(out, || {
        let (fm, a, b) = (handle(f)?, handle(a)?.clone(), handle(b)?.clone());
        let Model::Morphism(mapping) = fm else { return Ok(usage(&format!("expected a morphism model, got {}", fm.kind()))) };
        Ok(open_check_models(mapping.clone(), a, b, (max_len > 0).then_some(max_len)))
    })
}

/// Coreflection laws of `instance` (`"prob"`, `"timed"` or `"hybrid"`) on a samples model.
///
/// # Safety
/// `instance` NUL-terminated; `samples` a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_laws_check(instance: *const c_char, samples: *const OmModel, depth: usize, out: *mut *mut c_char) -> OmStatus {
    run(out, || {
        let (inst, s) = (text(instance)?, handle(samples)?);
        let Model::Samples(s) = s else { return Ok(usage(&format!("expected a samples model, got {}", s.kind()))) };
        Ok(laws_check_samples(inst, s, if depth > 0 { depth } else { 2 }))
    })
}

/// Re-validates a witness (or a whole checker output carrying one) against
/// the `n_inputs` models it was produced from, in command-line order.
///
/// # Safety
/// `witness_json` NUL-terminated; `inputs` points to `n_inputs` live handles.
#[no_mangle]
pub unsafe extern "C" fn om_check_witness(
    witness_json: *const c_char,
    inputs: *const *const OmModel,
    n_inputs: usize,
    out: *mut *mut c_char,
) -> OmStatus {
    run(out, || {
        let src = text(witness_json)?;
        let handles: &[*const OmModel] = if n_inputs == 0 {
            &[]
        } else if inputs.is_null() {
            return Err(Fail::Null);
        } else {
            std::slice::from_raw_parts(inputs, n_inputs)
        };
        let models = handles.iter().map(|&h| handle(h).cloned()).collect::<Result<Vec<_>, _>>()?;
        Ok(match serde_json::from_str::<Value>(src) {
            Ok(v) => check_witness_models(v, models),
            Err(e) => usage(&format!("witness is not JSON: {e}")),
        })
    })
}
