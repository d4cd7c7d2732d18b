//! Newline-delimited JSON wire format shared by the stdio server, the TCP server and the UI.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dialog::TurnInput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MessageKind {
    UserText,
    AgentText,
    ScreenUpdate,
    Highlight,
    OptionPrompt,
    DemonstrationMode,
    Confirmation,
    Error,
    ScriptResult,
}

/// One outbound message. `seq` counts from 1 per session; messages not tied
/// to an existing session carry `seq` 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionMessage {
    pub seq: u64,
    pub session_id: String,
    pub kind: MessageKind,
    pub payload: Value,
}

/// One inbound request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Request {
    CreateSession {
        #[serde(default)]
        kb_path: Option<String>,
        #[serde(default)]
        apps_dir: Option<String>,
        #[serde(default)]
        env: BTreeMap<String, String>,
    },
    Turn {
        session_id: String,
        input: TurnInput,
    },
    SetEnv {
        session_id: String,
        env: BTreeMap<String, String>,
    },
    RunScript {
        session_id: String,
        script: String,
        #[serde(default)]
        env: BTreeMap<String, String>,
    },
    SaveKb {
        session_id: String,
        path: String,
    },
    CloseSession {
        session_id: String,
    },
}

impl Request {
    pub fn session_id(&self) -> Option<&str> {
        match self {
            Request::CreateSession { .. } => None,
            Request::Turn { session_id, .. }
            | Request::SetEnv { session_id, .. }
            | Request::RunScript { session_id, .. }
            | Request::SaveKb { session_id, .. }
            | Request::CloseSession { session_id } => Some(session_id),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_use_camel_case_tags() {
        let r: Request = serde_json::from_str(r#"{"op":"turn","sessionId":"s1","input":{"kind":"text","text":"hi"}}"#).unwrap();
        assert_eq!(
            r,
            Request::Turn {
                session_id: "s1".into(),
                input: TurnInput::text("hi")
            }
        );
        let r: Request = serde_json::from_str(r#"{"op":"createSession"}"#).unwrap();
        assert!(matches!(r, Request::CreateSession { kb_path: None, .. }));
        let m = SessionMessage {
            seq: 3,
            session_id: "s1".into(),
            kind: MessageKind::OptionPrompt,
            payload: Value::Null,
        };
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"seq":3,"sessionId":"s1","kind":"optionPrompt","payload":null}"#
        );
    }
}
