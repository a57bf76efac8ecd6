//! C ABI over ctxlab.
//!
//! Models cross the boundary as opaque `CtxlabModel` handles. Every call
//! returns a `CtxlabStatus`; on failure the message is available from
//! `ctxlab_last_error` until the next failing call on the same thread.
//! Strings handed out by the library are freed with `ctxlab_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString, OsString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ctxlab::contextuality::{is_noncontextual, ncf};
use ctxlab::error::Error;
use ctxlab::fixtures::{self, Fixture};
use ctxlab::io::{canonical_text, Entry, ModelEntry, Workspace};
use ctxlab::model::{boxtimes, tensor_models};
use ctxlab::rational;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtxlabStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON, schema violations, bad rationals.
    Parse = 3,
    /// Well-formed input that breaks a model, procedure or protocol rule.
    Invalid = 4,
    UnknownFixture = 5,
    /// A search hit its candidate cap.
    Limit = 6,
    /// A bug: the library panicked.
    Internal = 7,
}

/// An empirical model, possibly with a per-site reading.
pub struct CtxlabModel {
    entry: ModelEntry,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("interior nuls replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CtxlabStatus {
    match e {
        Error::Parse(_) | Error::Schema { .. } | Error::Io(_) => CtxlabStatus::Parse,
        Error::UnknownFixture(_) | Error::OutOfRange(_) => CtxlabStatus::UnknownFixture,
        Error::CapExceeded { .. } => CtxlabStatus::Limit,
        _ => CtxlabStatus::Invalid,
    }
}

struct Failure(CtxlabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CtxlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtxlabStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error: the library panicked");
            CtxlabStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(CtxlabStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(CtxlabStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn model_arg<'a>(p: *const CtxlabModel, what: &str) -> Result<&'a CtxlabModel, Failure> {
    p.as_ref().ok_or_else(|| Failure(CtxlabStatus::NullArgument, format!("`{what}` is null")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(CtxlabStatus::NullArgument, format!("`{what}` is null")))
    } else {
        Ok(())
    }
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nuls replaced").into_raw()
}

fn boxed(entry: ModelEntry) -> *mut CtxlabModel {
    Box::into_raw(Box::new(CtxlabModel { entry }))
}

/// The message of the last failing call on this thread, or null. Owned by
/// the library; valid until the next failing call.
#[no_mangle]
pub extern "C" fn ctxlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a model from JSON text: a single model document, or a workspace
/// holding exactly one model.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_model_from_json(json: *const c_char, out: *mut *mut CtxlabModel) -> CtxlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let mut ws = Workspace::new();
        ws.load_str("model", "<json>", text)?;
        let models: Vec<&ModelEntry> = ws
            .entries()
            .filter_map(|(_, e)| match e {
                Entry::Model(m) => Some(m),
                _ => None,
            })
            .collect();
        let [m] = models.as_slice() else {
            return Err(Failure(CtxlabStatus::Parse, format!("expected one model, found {}", models.len())));
        };
        // inline any scenario reference so the handle stands alone
        let entry = ModelEntry { scenario: None, ..(*m).clone() };
        *out = boxed(entry);
        Ok(())
    })
}

/// A named fixture (`triangle`, `pr`, `noisy_pr`, `trivial`). `lambda` is
/// the noise weight for `noisy_pr` as `"n/d"` and may be null otherwise.
///
/// # Safety
/// `name` and a non-null `lambda` must be nul-terminated; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_model_fixture(
    name: *const c_char,
    lambda: *const c_char,
    out: *mut *mut CtxlabModel,
) -> CtxlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let name = str_arg(name, "name")?;
        let lambda = if lambda.is_null() { None } else { Some(rational::parse(str_arg(lambda, "lambda")?)?.value) };
        let entry = match fixtures::fixture(name, lambda.as_ref(), None, None)? {
            Fixture::Model(m) => ModelEntry::flat(m),
            Fixture::Partitioned(p) => ModelEntry::partitioned(&p),
        };
        *out = boxed(entry);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_model_free(model: *mut CtxlabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Canonical JSON for the model. Free the result with `ctxlab_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_model_to_json(model: *const CtxlabModel, out: *mut *mut c_char) -> CtxlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = model_arg(model, "model")?;
        *out = c_string(canonical_text(&Entry::Model(m.entry.clone()).to_value()));
        Ok(())
    })
}

/// The noncontextual fraction as exact `"n/d"` text. Free the result with
/// `ctxlab_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_model_ncf(model: *const CtxlabModel, out: *mut *mut c_char) -> CtxlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = model_arg(model, "model")?;
        *out = c_string(rational::format(&ncf(&m.entry.model)?.value));
        Ok(())
    })
}

/// Writes 1 if the model is contextual and 0 otherwise.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_model_is_contextual(model: *const CtxlabModel, out: *mut c_int) -> CtxlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = model_arg(model, "model")?;
        *out = c_int::from(!is_noncontextual(&m.entry.model)?.is_noncontextual());
        Ok(())
    })
}

/// `a ⊗ b` for flat models, `a ⊠ b` when both carry sites.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_model_combine(
    a: *const CtxlabModel,
    b: *const CtxlabModel,
    out: *mut *mut CtxlabModel,
) -> CtxlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let (a, b) = (&model_arg(a, "a")?.entry, &model_arg(b, "b")?.entry);
        let entry = match (a.partitioned_model(), b.partitioned_model()) {
            (Some(pa), Some(pb)) => ModelEntry::partitioned(&boxtimes(&pa, &pb)?),
            (None, None) => ModelEntry::flat(tensor_models(&a.model, &b.model)),
            _ => return Err(Failure(CtxlabStatus::Invalid, "cannot combine a flat and a partitioned model".into())),
        };
        *out = boxed(entry);
        Ok(())
    })
}

/// Runs one command-line invocation in-process. `argv[0]` is the program
/// name. Captured output is returned through `out_stdout` and `out_stderr`
/// (free both with `ctxlab_string_free`); either may be null to discard it.
///
/// # Safety
/// `argv` must hold `argc` nul-terminated strings; `exit_code` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ctxlab_run(
    argc: c_int,
    argv: *const *const c_char,
    exit_code: *mut c_int,
    out_stdout: *mut *mut c_char,
    out_stderr: *mut *mut c_char,
) -> CtxlabStatus {
    guard(|| {
        out_arg(exit_code, "exit_code")?;
        if argc < 0 || (argc > 0 && argv.is_null()) {
            return Err(Failure(CtxlabStatus::NullArgument, "`argv` is null".into()));
        }
        let mut args = Vec::with_capacity(argc as usize);
        for i in 0..argc as usize {
            args.push(OsString::from(str_arg(*argv.add(i), "argv[i]")?));
        }
        let out = ctxlab::cli::run_command(args);
        *exit_code = out.code;
        if !out_stdout.is_null() {
            *out_stdout = c_string(out.stdout);
        }
        if !out_stderr.is_null() {
            *out_stderr = c_string(out.stderr);
        }
        Ok(())
    })
}
