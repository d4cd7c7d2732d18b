use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde_json::{json, Value};
use thiserror::Error;

use super::protocol::{MessageKind, Request, SessionMessage};
use crate::dialog::{DialogError, RunError, Session, Template, TurnInput, TurnOutcome};
use crate::kb::{KbError, KnowledgeBase};
use crate::screenworld::{load_app_dir, AppDefinition, World};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("bad fixture: {0}")]
    BadFixture(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("unknown script {0:?}")]
    UnknownScript(String),
    #[error(transparent)]
    Dialog(#[from] DialogError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("script failed: {0}")]
    Run(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl From<RunError> for GatewayError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::UnknownScript(n) => GatewayError::UnknownScript(n),
            RunError::Eval(e) => GatewayError::Run(e.to_string()),
        }
    }
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::BadFixture(_) => "badFixture",
            GatewayError::UnknownSession(_) => "unknownSession",
            GatewayError::UnknownScript(_) => "unknownScript",
            GatewayError::Dialog(DialogError::IllegalInputForPhase { .. }) => "illegalInputForPhase",
            GatewayError::Dialog(DialogError::NothingToUndo) => "nothingToUndo",
            GatewayError::Dialog(_) => "dialog",
            GatewayError::Kb(_) => "kb",
            GatewayError::Run(_) => "run",
            GatewayError::BadRequest(_) => "badRequest",
        }
    }
}

/// A session plus its outbound sequence counter.
pub struct SessionSlot {
    pub session: Session,
    seq: u64,
    id: String,
}

impl SessionSlot {
    fn emit(&mut self, out: &mut Vec<SessionMessage>, kind: MessageKind, payload: Value) {
        self.seq += 1;
        out.push(SessionMessage {
            seq: self.seq,
            session_id: self.id.clone(),
            kind,
            payload,
        });
    }

    fn screen(&mut self, out: &mut Vec<SessionMessage>) {
        let snap = self.session.world().snapshot();
        self.emit(out, MessageKind::ScreenUpdate, json!({ "app": snap.app, "screen": snap.screen, "nodes": snap.nodes }));
    }

    fn outcome(&mut self, out: &mut Vec<SessionMessage>, outcome: TurnOutcome) {
        if outcome.screen_changed {
            self.screen(out);
        }
        if let Some(active) = outcome.demonstration {
            self.emit(out, MessageKind::DemonstrationMode, json!({ "active": active }));
        }
        if let Some(h) = self.session.highlight() {
            self.emit(out, MessageKind::Highlight, json!(h));
        }
        if let Some(mv) = outcome.agent {
            let options = mv.options.clone();
            let template = mv.template;
            self.emit(out, MessageKind::AgentText, json!(mv));
            let kind = match template {
                Template::ConfirmBool | Template::ConfirmValue | Template::ConfirmProc | Template::ConfirmRule => {
                    Some(MessageKind::Confirmation)
                }
                _ if !options.is_empty() => Some(MessageKind::OptionPrompt),
                _ => None,
            };
            if let Some(kind) = kind {
                self.emit(out, kind, json!({ "template": template, "options": options }));
            }
        }
        if let Some(trace) = outcome.trace {
            self.emit(out, MessageKind::ScriptResult, json!(trace));
        }
    }
}

/// Session registry. Turns on one session are serialized by its mutex;
/// different sessions proceed in parallel and share only the loaded app definitions.
pub struct Gateway {
    default_apps: PathBuf,
    fixtures: RwLock<HashMap<PathBuf, Arc<BTreeMap<String, AppDefinition>>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionSlot>>>>,
    next_id: AtomicU64,
}

impl Gateway {
    pub fn new(default_apps: impl Into<PathBuf>) -> Self {
        Gateway {
            default_apps: default_apps.into(),
            fixtures: RwLock::new(HashMap::new()),
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// Bundled app fixtures of this crate.
    pub fn bundled_apps_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/apps")
    }

    fn apps(&self, dir: &Path) -> Result<Arc<BTreeMap<String, AppDefinition>>, GatewayError> {
        if let Some(a) = self.fixtures.read().expect("fixture cache lock").get(dir) {
            return Ok(a.clone());
        }
        let apps = Arc::new(load_app_dir(dir).map_err(|e| GatewayError::BadFixture(e.to_string()))?);
        self.fixtures
            .write()
            .expect("fixture cache lock")
            .insert(dir.to_path_buf(), apps.clone());
        Ok(apps)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<SessionSlot>>, GatewayError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| GatewayError::UnknownSession(id.to_string()))
    }

    /// Runs `f` with exclusive access to a session.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, GatewayError> {
        let slot = self.session(id)?;
        let mut slot = slot.lock().expect("session lock");
        Ok(f(&mut slot.session))
    }

    pub fn create_session(
        &self,
        kb_path: Option<&Path>,
        apps_dir: Option<&Path>,
        env: &BTreeMap<String, String>,
    ) -> Result<(String, Vec<SessionMessage>), GatewayError> {
        let apps = self.apps(apps_dir.unwrap_or(&self.default_apps))?;
        let kb = match kb_path {
            Some(p) if p.exists() => KnowledgeBase::load(p)?,
            _ => KnowledgeBase::new(),
        };
        let mut world = World::with_shared(apps);
        for (k, v) in env {
            world.set_env(k, v);
        }
        let session = Session::with_kb(kb, world);
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let mut slot = SessionSlot {
            session,
            seq: 0,
            id: id.clone(),
        };
        let mut out = Vec::new();
        let hi = slot.session.greeting();
        slot.emit(&mut out, MessageKind::AgentText, json!(hi));
        slot.screen(&mut out);
        self.sessions
            .write()
            .expect("session table lock")
            .insert(id.clone(), Arc::new(Mutex::new(slot)));
        Ok((id, out))
    }

    pub fn send_turn(&self, id: &str, input: TurnInput) -> Result<Vec<SessionMessage>, GatewayError> {
        let slot = self.session(id)?;
        let mut slot = slot.lock().expect("session lock");
        let mut out = Vec::new();
        let echo = match &input {
            TurnInput::Text { text } => json!({ "text": text }),
            other => json!({ "input": other }),
        };
        slot.emit(&mut out, MessageKind::UserText, echo);
        match slot.session.handle(input) {
            Ok(outcome) => slot.outcome(&mut out, outcome),
            Err(e) => {
                let e = GatewayError::from(e);
                slot.emit(&mut out, MessageKind::Error, error_payload(&e));
            }
        }
        Ok(out)
    }

    pub fn set_env(&self, id: &str, env: &BTreeMap<String, String>) -> Result<Vec<SessionMessage>, GatewayError> {
        let slot = self.session(id)?;
        let mut slot = slot.lock().expect("session lock");
        for (k, v) in env {
            slot.session.world_mut().set_env(k, v);
        }
        let mut out = Vec::new();
        slot.screen(&mut out);
        Ok(out)
    }

    pub fn run_script(&self, id: &str, script: &str, env: &BTreeMap<String, String>) -> Result<Vec<SessionMessage>, GatewayError> {
        let slot = self.session(id)?;
        let mut slot = slot.lock().expect("session lock");
        let trace = slot.session.run_script(script, env)?;
        let mut out = Vec::new();
        let payload = json!({
            "script": script,
            "branch": trace.branch(),
            "clicked": trace.clicked_texts(),
            "trace": trace,
        });
        slot.emit(&mut out, MessageKind::ScriptResult, payload);
        slot.screen(&mut out);
        Ok(out)
    }

    pub fn save_kb(&self, id: &str, path: &Path) -> Result<(), GatewayError> {
        let slot = self.session(id)?;
        let slot = slot.lock().expect("session lock");
        slot.session.kb().persist(path)?;
        Ok(())
    }

    pub fn close_session(&self, id: &str) -> Result<(), GatewayError> {
        self.sessions
            .write()
            .expect("session table lock")
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| GatewayError::UnknownSession(id.to_string()))
    }

    /// Handles one request. Failures become `error` messages.
    pub fn handle(&self, request: Request) -> Vec<SessionMessage> {
        let sid = request.session_id().unwrap_or_default().to_string();
        let result = match request {
            Request::CreateSession { kb_path, apps_dir, env } => self
                .create_session(kb_path.as_deref().map(Path::new), apps_dir.as_deref().map(Path::new), &env)
                .map(|(_, out)| out),
            Request::Turn { session_id, input } => self.send_turn(&session_id, input),
            Request::SetEnv { session_id, env } => self.set_env(&session_id, &env),
            Request::RunScript { session_id, script, env } => self.run_script(&session_id, &script, &env),
            Request::SaveKb { session_id, path } => self
                .save_kb(&session_id, Path::new(&path))
                .and_then(|()| self.ack(&session_id, json!({ "saved": path }))),
            Request::CloseSession { session_id } => {
                let ack = self.ack(&session_id, json!({ "closed": session_id }));
                self.close_session(&session_id).and(ack)
            }
        };
        result.unwrap_or_else(|e| self.error(&sid, &e))
    }

    fn ack(&self, id: &str, payload: Value) -> Result<Vec<SessionMessage>, GatewayError> {
        let slot = self.session(id)?;
        let mut slot = slot.lock().expect("session lock");
        let mut out = Vec::new();
        slot.emit(&mut out, MessageKind::Confirmation, payload);
        Ok(out)
    }

    fn error(&self, id: &str, e: &GatewayError) -> Vec<SessionMessage> {
        if let Ok(slot) = self.session(id) {
            let mut slot = slot.lock().expect("session lock");
            let mut out = Vec::new();
            slot.emit(&mut out, MessageKind::Error, error_payload(e));
            return out;
        }
        vec![SessionMessage {
            seq: 0,
            session_id: id.to_string(),
            kind: MessageKind::Error,
            payload: error_payload(e),
        }]
    }

    /// Parses one NDJSON line and returns the reply lines.
    pub fn handle_line(&self, line: &str) -> Vec<String> {
        let messages = match serde_json::from_str::<Request>(line) {
            Ok(r) => self.handle(r),
            Err(e) => self.error("", &GatewayError::BadRequest(e.to_string())),
        };
        messages
            .iter()
            .map(|m| serde_json::to_string(m).expect("messages serialize"))
            .collect()
    }

    /// Serves NDJSON requests until `input` ends.
    pub fn serve(&self, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for reply in self.handle_line(&line) {
                writeln!(output, "{reply}")?;
            }
            output.flush()?;
        }
        Ok(())
    }

    /// Accepts TCP connections forever, one thread per connection.
    pub fn listen(self: Arc<Self>, addr: impl ToSocketAddrs) -> std::io::Result<()> {
        let listener = TcpListener::bind(addr)?;
        for stream in listener.incoming() {
            let stream = stream?;
            let gw = self.clone();
            std::thread::spawn(move || {
                let Ok(read) = stream.try_clone() else { return };
                let _ = gw.serve(BufReader::new(read), stream);
            });
        }
        Ok(())
    }
}

fn error_payload(e: &GatewayError) -> Value {
    json!({ "code": e.code(), "message": e.to_string() })
}
