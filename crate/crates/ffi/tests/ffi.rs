use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use serde_json::Value;
use teachable::gateway::parse_transcript;
use teachable::gateway::transcript::Step;
use teachable_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a returned string and parses it as a JSON message array.
unsafe fn take(p: *mut c_char) -> Vec<Value> {
    assert!(!p.is_null());
    let text = CStr::from_ptr(p).to_str().unwrap().to_string();
    teachable_string_free(p);
    serde_json::from_str(&text).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(teachable_last_error_message()).to_str().unwrap().to_string() }
}

fn template(messages: &[Value]) -> Option<String> {
    messages
        .iter()
        .rev()
        .find(|m| m["kind"] == "agentText")
        .and_then(|m| m["payload"]["template"].as_str().map(str::to_string))
}

unsafe fn new_session(kb: Option<&CStr>) -> *mut TeachableSession {
    let mut s = ptr::null_mut();
    let mut out = ptr::null_mut();
    let status = teachable_session_new(ptr::null(), kb.map_or(ptr::null(), CStr::as_ptr), &mut s, &mut out);
    assert_eq!(status, TeachableStatus::Ok, "{}", last_error());
    assert_eq!(template(&take(out)).as_deref(), Some("greeting"));
    s
}

#[test]
fn teach_run_save_and_reload() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/transcripts/coffee_rule.transcript");
    let lines = parse_transcript(&std::fs::read_to_string(path).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let kb_path = c(dir.path().join("kb.json").to_str().unwrap());
    unsafe {
        let s = new_session(None);
        let mut last = None;
        for line in lines {
            let mut out = ptr::null_mut();
            match line.step {
                Step::Turn(input) => {
                    let json = c(&serde_json::to_string(&input).unwrap());
                    assert_eq!(teachable_session_send_json(s, json.as_ptr(), &mut out), TeachableStatus::Ok);
                    last = template(&take(out));
                }
                Step::Env(env) => {
                    let json = c(&serde_json::to_string(&env).unwrap());
                    assert_eq!(teachable_session_set_env(s, json.as_ptr(), ptr::null_mut()), TeachableStatus::Ok);
                }
                _ => {}
            }
        }
        assert_eq!(last.as_deref(), Some("done"));
        assert_eq!(teachable_session_save_kb(s, kb_path.as_ptr()), TeachableStatus::Ok);
        teachable_session_free(s);

        let s = new_session(Some(&kb_path));
        let name = c("order_a_cup_of_iced_cappuccino");
        for (temp, branch, clicked) in [("95", "then", "Iced Cappuccino"), ("50", "else", "Hot Coffee")] {
            let env = c(&format!(r#"{{"weather.temperature":"{temp}"}}"#));
            let mut out = ptr::null_mut();
            assert_eq!(teachable_session_run_script(s, name.as_ptr(), env.as_ptr(), &mut out), TeachableStatus::Ok);
            let messages = take(out);
            assert_eq!(messages[0]["kind"], "scriptResult");
            assert_eq!(messages[0]["payload"]["branch"], branch);
            assert_eq!(messages[0]["payload"]["clicked"][0], clicked);
        }
        let mut out = ptr::null_mut();
        assert_eq!(teachable_session_send_text(s, c("order hot coffee").as_ptr(), &mut out), TeachableStatus::Ok);
        assert_eq!(template(&take(out)).as_deref(), Some("executed"));
        teachable_session_free(s);
    }
}

#[test]
fn failures_report_codes_and_messages() {
    unsafe {
        let mut s = ptr::null_mut();
        let missing = c("/nonexistent/apps");
        assert_eq!(
            teachable_session_new(missing.as_ptr(), ptr::null(), &mut s, ptr::null_mut()),
            TeachableStatus::BadFixture
        );
        assert!(last_error().contains("bad fixture"));
        assert!(s.is_null());
        assert_eq!(teachable_session_new(ptr::null(), ptr::null(), ptr::null_mut(), ptr::null_mut()), TeachableStatus::NullArgument);

        let s = new_session(None);
        let mut out = ptr::null_mut();
        assert_eq!(teachable_session_send_text(s, ptr::null(), &mut out), TeachableStatus::NullArgument);
        assert_eq!(last_error(), "text is null");
        assert_eq!(teachable_session_send_text(ptr::null_mut(), c("hi").as_ptr(), &mut out), TeachableStatus::NullArgument);
        assert_eq!(teachable_session_send_text(s, c("hi").as_ptr(), ptr::null_mut()), TeachableStatus::NullArgument);
        assert_eq!(teachable_session_send_json(s, c("{\"kind\":").as_ptr(), &mut out), TeachableStatus::BadJson);
        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(teachable_session_send_text(s, invalid.as_ptr().cast(), &mut out), TeachableStatus::InvalidUtf8);
        assert_eq!(
            teachable_session_run_script(s, c("nope").as_ptr(), ptr::null(), &mut out),
            TeachableStatus::UnknownScript
        );
        assert!(last_error().contains("nope"));
        assert!(out.is_null());

        // dialog errors on a turn arrive as error messages, not as a failed call
        assert_eq!(teachable_session_send_json(s, c(r#"{"kind":"demoFinish"}"#).as_ptr(), &mut out), TeachableStatus::Ok);
        let messages = take(out);
        assert_eq!(messages.last().unwrap()["payload"]["code"], "illegalInputForPhase");
        teachable_session_free(s);
        teachable_session_free(ptr::null_mut());
        teachable_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(teachable_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_interface_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/teachable.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "teachable_session_new",
        "teachable_session_free",
        "teachable_session_send_text",
        "teachable_session_send_json",
        "teachable_session_set_env",
        "teachable_session_run_script",
        "teachable_session_save_kb",
        "teachable_last_error_message",
        "teachable_string_free",
        "teachable_version",
        "typedef struct TeachableSession TeachableSession",
        "TEACHABLE_STATUS_BAD_FIXTURE = 4",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&header).output() else {
            eprintln!("{compiler} not available, skipping");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
