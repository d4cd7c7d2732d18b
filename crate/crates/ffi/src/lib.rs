//! C interface to the teaching engine.
//!
//! A `TeachableSession` is an opaque handle owning one teaching session.
//! Every call returns a `TeachableStatus`; on failure
//! `teachable_last_error_message` describes the error for the calling thread.
//! Strings returned through `out` parameters are owned by the caller and must
//! be released with `teachable_string_free`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use teachable::dialog::{DialogError, TurnInput};
use teachable::gateway::{Gateway, GatewayError, SessionMessage};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeachableStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    BadJson = 3,
    BadFixture = 4,
    UnknownScript = 5,
    IllegalInput = 6,
    Dialog = 7,
    Kb = 8,
    ScriptFailed = 9,
    Internal = 10,
}

/// Opaque session handle.
pub struct TeachableSession {
    gateway: Gateway,
    id: String,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(TeachableStatus, String);

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        let status = match &e {
            GatewayError::BadFixture(_) => TeachableStatus::BadFixture,
            GatewayError::UnknownScript(_) => TeachableStatus::UnknownScript,
            GatewayError::Dialog(DialogError::IllegalInputForPhase { .. }) => TeachableStatus::IllegalInput,
            GatewayError::Dialog(_) => TeachableStatus::Dialog,
            GatewayError::Kb(_) => TeachableStatus::Kb,
            GatewayError::Run(_) => TeachableStatus::ScriptFailed,
            GatewayError::UnknownSession(_) | GatewayError::BadRequest(_) => TeachableStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> TeachableStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TeachableStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TeachableStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(TeachableStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TeachableStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn live<'a>(s: *mut TeachableSession) -> Result<&'a mut TeachableSession, Failure> {
    s.as_mut()
        .ok_or_else(|| Failure(TeachableStatus::NullArgument, "session is null".into()))
}

unsafe fn write_out(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(TeachableStatus::NullArgument, "out is null".into()));
    }
    let c = CString::new(text).map_err(|_| Failure(TeachableStatus::Internal, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn messages_json(messages: &[SessionMessage]) -> String {
    serde_json::to_string(messages).expect("messages serialize")
}

fn bad_json(e: serde_json::Error) -> Failure {
    Failure(TeachableStatus::BadJson, e.to_string())
}

/// Creates a session. `apps_dir` and `kb_path` may be null for the bundled
/// apps and an empty knowledge base. The greeting messages are written to
/// `out_messages` as a JSON array when it is not null.
///
/// # Safety
/// String arguments must be null or NUL-terminated. `out_session` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn teachable_session_new(
    apps_dir: *const c_char,
    kb_path: *const c_char,
    out_session: *mut *mut TeachableSession,
    out_messages: *mut *mut c_char,
) -> TeachableStatus {
    run(|| {
        if out_session.is_null() {
            return Err(Failure(TeachableStatus::NullArgument, "out_session is null".into()));
        }
        let apps = opt_str_arg(apps_dir, "apps_dir")?.map(PathBuf::from).unwrap_or_else(Gateway::bundled_apps_dir);
        let kb = opt_str_arg(kb_path, "kb_path")?.map(Path::new);
        let gateway = Gateway::new(apps);
        let (id, greeting) = gateway.create_session(kb, None, &BTreeMap::new())?;
        if !out_messages.is_null() {
            write_out(out_messages, messages_json(&greeting))?;
        }
        *out_session = Box::into_raw(Box::new(TeachableSession { gateway, id }));
        Ok(())
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `session` must come from `teachable_session_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn teachable_session_free(session: *mut TeachableSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Sends one typed utterance. Writes the resulting messages as a JSON array.
///
/// # Safety
/// `session` must be live, `text` NUL-terminated, `out_messages` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn teachable_session_send_text(
    session: *mut TeachableSession,
    text: *const c_char,
    out_messages: *mut *mut c_char,
) -> TeachableStatus {
    run(|| {
        let s = live(session)?;
        let text = str_arg(text, "text")?;
        let messages = s.gateway.send_turn(&s.id, TurnInput::text(text))?;
        write_out(out_messages, messages_json(&messages))
    })
}

/// Sends one turn given as JSON, e.g. `{"kind":"option","index":0}`.
///
/// # Safety
/// As for `teachable_session_send_text`.
#[no_mangle]
pub unsafe extern "C" fn teachable_session_send_json(
    session: *mut TeachableSession,
    input_json: *const c_char,
    out_messages: *mut *mut c_char,
) -> TeachableStatus {
    run(|| {
        let s = live(session)?;
        let input: TurnInput = serde_json::from_str(str_arg(input_json, "input_json")?).map_err(bad_json)?;
        let messages = s.gateway.send_turn(&s.id, input)?;
        write_out(out_messages, messages_json(&messages))
    })
}

/// Sets app environment values from a JSON object of strings.
///
/// # Safety
/// As for `teachable_session_send_text`; `out_messages` may be null.
#[no_mangle]
pub unsafe extern "C" fn teachable_session_set_env(
    session: *mut TeachableSession,
    env_json: *const c_char,
    out_messages: *mut *mut c_char,
) -> TeachableStatus {
    run(|| {
        let s = live(session)?;
        let env: BTreeMap<String, String> = serde_json::from_str(str_arg(env_json, "env_json")?).map_err(bad_json)?;
        let messages = s.gateway.set_env(&s.id, &env)?;
        if out_messages.is_null() {
            return Ok(());
        }
        write_out(out_messages, messages_json(&messages))
    })
}

/// Runs a stored script. `env_json` is null or a JSON object of strings.
///
/// # Safety
/// As for `teachable_session_send_text`.
#[no_mangle]
pub unsafe extern "C" fn teachable_session_run_script(
    session: *mut TeachableSession,
    name: *const c_char,
    env_json: *const c_char,
    out_messages: *mut *mut c_char,
) -> TeachableStatus {
    run(|| {
        let s = live(session)?;
        let name = str_arg(name, "name")?;
        let env: BTreeMap<String, String> = match opt_str_arg(env_json, "env_json")? {
            Some(text) => serde_json::from_str(text).map_err(bad_json)?,
            None => BTreeMap::new(),
        };
        let messages = s.gateway.run_script(&s.id, name, &env)?;
        write_out(out_messages, messages_json(&messages))
    })
}

/// Writes the session's knowledge base to `path`.
///
/// # Safety
/// `session` must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn teachable_session_save_kb(session: *mut TeachableSession, path: *const c_char) -> TeachableStatus {
    run(|| {
        let s = live(session)?;
        let path = str_arg(path, "path")?;
        s.gateway.save_kb(&s.id, Path::new(path))?;
        Ok(())
    })
}

/// Message of the last failed call on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn teachable_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn teachable_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn teachable_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
