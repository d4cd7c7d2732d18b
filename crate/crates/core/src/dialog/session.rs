use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use super::naming::{
    bool_concept_name, context_label, describe, is_decline, is_finish, is_undo, negated_phrase, operator_option,
    value_concept_name, yes_or_no,
};
use super::state::{ConceptKind, DialogState, Frame, Learned, Pending, Phase, TurnInput};
use super::templates::{yes_no, AgentMove, Template};
use crate::demo::{
    finish_procedure_recording, finish_value_query_recording, highlight_candidates, start_recording, DemoError, Highlight,
    RecordingMode,
};
use crate::dsl::{evaluate, CmpOp, Dimension, EvalError, ExecutionEnvironment, ExecutionTrace, Expr, ExprType, NodePath, Slot};
use crate::kb::{KbError, KnowledgeBase, ScriptEntry, ValueSource};
use crate::parser::{
    grammar::requests_demonstration, parse_action, parse_bool_explanation, parse_command, parse_value_explanation,
    AmbiguityKind, Lexicon, LexiconSource, ParseCandidate, ValueExplanation,
};
use crate::screenworld::{Action, World};
use crate::text::{phrase_words, slug};

pub const UNDO_CAPACITY: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogError {
    #[error("{input} input is not accepted while {phase}")]
    IllegalInputForPhase { phase: &'static str, input: &'static str },
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("demonstration failed: {0}")]
    Demo(DemoError),
    #[error("option {0} does not exist")]
    NoSuchOption(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("unknown script {0:?}")]
    UnknownScript(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Agent,
}

/// One line of the session transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptRecord {
    pub turn_index: usize,
    pub speaker: Speaker,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template: Option<Template>,
    pub phase: &'static str,
    pub retracted: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    state: DialogState,
    kb: KnowledgeBase,
    lexicon: Lexicon,
    world: World,
    transcript_len: usize,
}

/// Bounded stack of pre-turn snapshots, addressed by absolute position.
#[derive(Debug, Clone, Default)]
struct UndoStack {
    snapshots: VecDeque<Snapshot>,
    evicted: usize,
}

impl UndoStack {
    fn absolute_len(&self) -> usize {
        self.evicted + self.snapshots.len()
    }

    fn push(&mut self, s: Snapshot) {
        if self.snapshots.len() == UNDO_CAPACITY {
            self.snapshots.pop_front();
            self.evicted += 1;
        }
        self.snapshots.push_back(s);
    }

    fn pop(&mut self) -> Option<Snapshot> {
        self.snapshots.pop_back()
    }

    fn get(&self, absolute: usize) -> Option<&Snapshot> {
        absolute.checked_sub(self.evicted).and_then(|i| self.snapshots.get(i))
    }
}

/// What a turn produced besides the agent's reply.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TurnOutcome {
    pub agent: Option<AgentMove>,
    pub screen_changed: bool,
    /// `Some(true)` when demonstration mode started, `Some(false)` when it ended.
    pub demonstration: Option<bool>,
    pub trace: Option<ExecutionTrace>,
}

impl TurnOutcome {
    fn say(agent: AgentMove) -> Self {
        TurnOutcome {
            agent: Some(agent),
            ..Default::default()
        }
    }
}

enum Next {
    Hole { path: NodePath, ty: ExprType, span: String },
    Reuse { path: NodePath, kind: ConceptKind, name: String, prior: String },
    Unknown { path: NodePath, ty: ExprType, name: String },
}

/// A teaching session: dialog state, knowledge, lexicon, simulated phone, transcript and undo history.
#[derive(Debug, Clone)]
pub struct Session {
    state: DialogState,
    kb: KnowledgeBase,
    lexicon: Lexicon,
    world: World,
    transcript: Vec<TranscriptRecord>,
    undo: UndoStack,
}

impl Session {
    pub fn new(kb: KnowledgeBase, lexicon: Lexicon, world: World) -> Self {
        let mut s = Session {
            state: DialogState::default(),
            kb,
            lexicon,
            world,
            transcript: Vec::new(),
            undo: UndoStack::default(),
        };
        let hi = s.greeting();
        s.record(Speaker::Agent, hi.text.clone(), Some(hi.template));
        s
    }

    /// A session whose lexicon is the seed grown with everything already in `kb`.
    pub fn with_kb(kb: KnowledgeBase, world: World) -> Self {
        let lexicon = lexicon_for(&kb);
        Session::new(kb, lexicon, world)
    }

    pub fn greeting(&self) -> AgentMove {
        AgentMove::new(Template::Greeting, Vec::new())
    }

    pub fn state(&self) -> &DialogState {
        &self.state
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.transcript
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.snapshots.len()
    }

    /// Objects to highlight while a value is being demonstrated.
    pub fn highlight(&self) -> Option<Highlight> {
        let rec = self.state.recording.as_ref()?;
        matches!(rec.mode(), RecordingMode::ValueQuery { .. }).then(|| highlight_candidates(rec, &self.world.snapshot()))
    }

    fn record(&mut self, speaker: Speaker, text: String, template: Option<Template>) {
        self.transcript.push(TranscriptRecord {
            turn_index: self.transcript.len(),
            speaker,
            text,
            template,
            phase: self.state.phase.name(),
            retracted: false,
        });
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            state: self.state.clone(),
            kb: self.kb.clone(),
            lexicon: self.lexicon.clone(),
            world: self.world.clone(),
            transcript_len: self.transcript.len(),
        }
    }

    fn restore(&mut self, s: Snapshot) {
        self.state = s.state;
        self.kb = s.kb;
        self.lexicon = s.lexicon;
        self.world = s.world;
    }

    fn user_text(&self, input: &TurnInput) -> String {
        match input {
            TurnInput::Text { text } => text.clone(),
            TurnInput::Option { index } => self.state.pending_options.get(*index).cloned().unwrap_or_else(|| format!("option {index}")),
            TurnInput::DemoAction { action } => format!("DEMO: {action}"),
            TurnInput::DemoFinish => "DEMO: finish".to_string(),
            TurnInput::Demonstration { actions } => {
                let a: Vec<String> = actions.iter().map(Action::to_string).collect();
                format!("DEMO: {}", a.join("; "))
            }
            TurnInput::Undo => "undo".to_string(),
        }
    }

    /// Processes one user turn. On error the session is left unchanged.
    pub fn handle(&mut self, input: TurnInput) -> Result<TurnOutcome, DialogError> {
        let is_undo_turn = match &input {
            TurnInput::Undo => true,
            TurnInput::Text { text } => is_undo(text),
            _ => false,
        };
        let text = self.user_text(&input);
        if is_undo_turn {
            let mv = match self.undo() {
                Ok(mv) => mv,
                Err(_) => AgentMove::new(Template::NothingToUndo, Vec::new()),
            };
            self.record(Speaker::User, text, None);
            self.record(Speaker::Agent, mv.text.clone(), Some(mv.template));
            return Ok(TurnOutcome {
                agent: Some(mv),
                screen_changed: true,
                ..Default::default()
            });
        }
        let before = self.snapshot();
        self.undo.push(before.clone());
        match self.dispatch(input) {
            Ok(outcome) => {
                self.record(Speaker::User, text, None);
                if let Some(mv) = &outcome.agent {
                    self.record(Speaker::Agent, mv.text.clone(), Some(mv.template));
                }
                Ok(outcome)
            }
            Err(e) => {
                self.undo.pop();
                self.restore(before);
                Err(e)
            }
        }
    }

    /// Restores the state before the most recent turn and re-asks its question.
    pub fn undo(&mut self) -> Result<AgentMove, DialogError> {
        let snap = self.undo.pop().ok_or(DialogError::NothingToUndo)?;
        let from = snap.transcript_len;
        self.restore(snap);
        for r in &mut self.transcript[from..] {
            r.retracted = true;
        }
        Ok(self
            .state
            .pending_question
            .clone()
            .unwrap_or_else(|| AgentMove::new(Template::Undone, Vec::new())))
    }

    /// Evaluates a stored script with the given environment values.
    pub fn run_script(&mut self, name: &str, env: &BTreeMap<String, String>) -> Result<ExecutionTrace, RunError> {
        let script = self.kb.script(name).ok_or_else(|| RunError::UnknownScript(name.to_string()))?.clone();
        for (k, v) in env {
            self.world.set_env(k, v);
        }
        self.world.go_home();
        let mut env = ExecutionEnvironment {
            world: &mut self.world,
            kb: &self.kb,
            context: &script.context,
        };
        Ok(evaluate(&script.expr, &mut env)?)
    }

    fn illegal(&self, input: &TurnInput) -> DialogError {
        DialogError::IllegalInputForPhase {
            phase: self.state.phase.name(),
            input: input.kind(),
        }
    }

    fn dispatch(&mut self, input: TurnInput) -> Result<TurnOutcome, DialogError> {
        match (self.state.phase, &input) {
            (Phase::AwaitingCommand | Phase::Done, TurnInput::Text { text }) => Ok(self.command(text)),
            (Phase::AwaitingExplanation, TurnInput::Text { text }) => self.explanation(text),
            (Phase::AwaitingDemonstration, TurnInput::DemoAction { action }) => {
                let rec = self.state.recording.as_mut().expect("recording while demonstrating");
                rec.perform(&mut self.world, action).map_err(DialogError::Demo)?;
                Ok(TurnOutcome {
                    screen_changed: true,
                    ..Default::default()
                })
            }
            (Phase::AwaitingDemonstration, TurnInput::DemoFinish) => Ok(self.finish_demo()),
            (Phase::AwaitingDemonstration, TurnInput::Text { text }) if is_finish(text) => Ok(self.finish_demo()),
            (Phase::AwaitingDemonstration, TurnInput::Demonstration { actions }) => {
                let rec = self.state.recording.as_mut().expect("recording while demonstrating");
                for a in actions {
                    rec.perform(&mut self.world, a).map_err(DialogError::Demo)?;
                }
                Ok(self.finish_demo())
            }
            (Phase::AwaitingElse, TurnInput::Text { text }) => Ok(self.else_answer(text)),
            (Phase::AwaitingReuseDecision | Phase::AwaitingConfirmation, TurnInput::Option { index }) => match index {
                0 => Ok(self.yes_no_answer(true)),
                1 => Ok(self.yes_no_answer(false)),
                i => Err(DialogError::NoSuchOption(*i)),
            },
            (Phase::AwaitingReuseDecision | Phase::AwaitingConfirmation, TurnInput::Text { text }) => Ok(match yes_or_no(text) {
                Some(yes) => self.yes_no_answer(yes),
                None => self.rephrase(text),
            }),
            (Phase::AwaitingDisambiguation, TurnInput::Option { index }) => {
                if *index >= self.state.pending_options.len() {
                    return Err(DialogError::NoSuchOption(*index));
                }
                Ok(self.choose(*index))
            }
            (Phase::AwaitingDisambiguation, TurnInput::Text { text }) => Ok(match self.option_from_text(text) {
                Some(i) => self.choose(i),
                None => self.rephrase(text),
            }),
            _ => Err(self.illegal(&input)),
        }
    }

    /// Re-asks the pending question after an answer that could not be understood.
    fn rephrase(&mut self, text: &str) -> TurnOutcome {
        let mv = AgentMove::new(Template::Rephrase, vec![text.trim().to_string()]).with_options(self.state.pending_options.clone());
        TurnOutcome::say(mv)
    }

    fn option_from_text(&self, text: &str) -> Option<usize> {
        let words = phrase_words(text);
        let joined = words.join(" ");
        self.state.pending_options.iter().position(|o| {
            let first = o.split(' ').next().unwrap_or(o);
            joined.contains(o.as_str()) || words.iter().any(|w| w == first)
        })
    }

    fn ask(&mut self, phase: Phase, pending: Pending, mv: AgentMove) -> AgentMove {
        self.state.phase = phase;
        self.state.pending = Some(pending);
        self.state.pending_options = mv.options.clone();
        self.state.pending_question = Some(mv.clone());
        mv
    }

    fn clear_question(&mut self) {
        self.state.pending = None;
        self.state.pending_question = None;
        self.state.pending_options.clear();
    }

    // ---- commands ----

    fn command(&mut self, text: &str) -> TurnOutcome {
        let candidates = match parse_command(text, &self.lexicon) {
            Ok(c) => c,
            Err(_) => return self.rephrase(text),
        };
        let top = candidates.into_iter().next().expect("parser returns at least one candidate");
        match &top.expr {
            Expr::Call { .. } => self.execute(&top.expr),
            Expr::Conditional { .. } => {
                let then_span = top.span(&NodePath::root().child(Slot::Then)).unwrap_or_default().to_string();
                self.state = DialogState {
                    root: Some(top.expr.clone()),
                    command: text.trim().to_string(),
                    context: context_label(&then_span),
                    root_spans: top.node_spans.clone(),
                    queued: operator_ambiguities(&top),
                    ..DialogState::default()
                };
                TurnOutcome::say(self.advance())
            }
            _ => self.rephrase(text),
        }
    }

    fn execute(&mut self, call: &Expr) -> TurnOutcome {
        self.clear_question();
        self.state.phase = Phase::AwaitingCommand;
        let mut env = ExecutionEnvironment {
            world: &mut self.world,
            kb: &self.kb,
            context: "",
        };
        match evaluate(call, &mut env) {
            Ok(trace) => TurnOutcome {
                agent: Some(AgentMove::new(Template::Executed, vec![describe(call)])),
                screen_changed: true,
                trace: Some(trace),
                ..Default::default()
            },
            Err(e) => TurnOutcome::say(AgentMove::new(Template::ExecutionFailed, vec![e.to_string()])),
        }
    }

    // ---- the expression under construction ----

    fn owner(&self) -> Option<&Expr> {
        match self.state.frames.last() {
            Some(f) => f.partial.as_ref(),
            None => self.state.root.as_ref(),
        }
    }

    fn owner_mut(&mut self) -> Option<&mut Expr> {
        match self.state.frames.last_mut() {
            Some(f) => f.partial.as_mut(),
            None => self.state.root.as_mut(),
        }
    }

    fn owner_span(&self, path: &NodePath) -> Option<String> {
        match self.state.frames.last() {
            Some(f) => f.partial_spans.get(path).cloned(),
            None => self.state.root_spans.get(path).cloned(),
        }
    }

    fn replace_in_owner(&mut self, path: &NodePath, replacement: Expr) {
        if let Some(owner) = self.owner_mut() {
            if let Ok(e) = owner.replace_node(path, replacement) {
                *owner = e;
            }
        }
    }

    fn next_item(&self) -> Option<Next> {
        let owner = self.owner()?;
        let ctx = self.state.context.as_str();
        for (path, node) in owner.walk() {
            if let Some(span) = node.hole_span() {
                return Some(Next::Hole {
                    path,
                    ty: node.ty(),
                    span: span.to_string(),
                });
            }
            match node {
                Expr::BoolConcept(name) => match self.kb.resolve_bool_in_context(name, ctx) {
                    Ok(r) if r.reuse_decision_needed => {
                        return Some(Next::Reuse {
                            path,
                            kind: ConceptKind::Bool,
                            name: name.clone(),
                            prior: r.context.to_string(),
                        })
                    }
                    Ok(_) => {}
                    Err(_) => {
                        return Some(Next::Unknown {
                            path,
                            ty: ExprType::Bool,
                            name: name.clone(),
                        })
                    }
                },
                Expr::ValueConcept(name) => match self.kb.resolve_value_in_context(name, ctx) {
                    Ok(r) if r.reuse_decision_needed => {
                        return Some(Next::Reuse {
                            path,
                            kind: ConceptKind::Value,
                            name: name.clone(),
                            prior: r.context.to_string(),
                        })
                    }
                    Ok(_) => {}
                    Err(_) => {
                        return Some(Next::Unknown {
                            path,
                            ty: ExprType::Value,
                            name: name.clone(),
                        })
                    }
                },
                _ => {}
            }
        }
        None
    }

    /// Chooses and asks the next question.
    fn advance(&mut self) -> AgentMove {
        loop {
            if let Some((path, alternatives)) = self.state.queued.first().cloned() {
                return self.ask_disambiguation(path, alternatives);
            }
            if let Some(top) = self.state.frames.last() {
                if top.learned.is_some() {
                    return self.ask_confirm_frame();
                }
                if top.partial.is_none() {
                    let mv = self.frame_question(top);
                    return self.ask(Phase::AwaitingExplanation, Pending::Frame, mv);
                }
            }
            match self.next_item() {
                Some(Next::Hole { path, ty, span }) => return self.push_frame(path, ty, &span, None),
                Some(Next::Unknown { path, ty, name }) => {
                    let hole = match ty {
                        ExprType::Bool => Expr::ResolveBool(name),
                        _ => Expr::ResolveValue(name),
                    };
                    self.replace_in_owner(&path, hole);
                }
                Some(Next::Reuse { path, kind, name, prior }) => return self.ask_reuse(path, kind, name, prior),
                None if !self.state.frames.is_empty() => return self.ask_confirm_frame(),
                None => return self.finish_root(),
            }
        }
    }

    fn frame_question(&self, f: &Frame) -> AgentMove {
        match f.ty {
            ExprType::Bool => AgentMove::new(Template::AskBool, vec![f.span.clone()]),
            ExprType::Value => AgentMove::new(Template::AskValue, vec![f.name.clone()]),
            _ => AgentMove::new(Template::AskProc, vec![f.span.clone()]),
        }
    }

    fn push_frame(&mut self, path: NodePath, ty: ExprType, span: &str, reteach: Option<(String, Option<CmpOp>)>) -> AgentMove {
        let (name, reteach_op) = match reteach {
            Some((name, op)) => (name, op),
            None => {
                let name = match ty {
                    ExprType::Bool => bool_concept_name(span),
                    ExprType::Value => value_concept_name(span),
                    _ => span.to_string(),
                };
                (name, None)
            }
        };
        let frame = Frame {
            path,
            ty,
            name,
            span: span.to_string(),
            partial: None,
            partial_spans: BTreeMap::new(),
            learned: None,
            reteach_op,
            asked_at: self.undo.absolute_len(),
        };
        let mv = self.frame_question(&frame);
        self.state.frames.push(frame);
        self.ask(Phase::AwaitingExplanation, Pending::Frame, mv)
    }

    fn finish_root(&mut self) -> AgentMove {
        let Some(root) = self.state.root.clone() else {
            self.clear_question();
            self.state.phase = Phase::AwaitingCommand;
            return AgentMove::new(Template::Undone, Vec::new());
        };
        if let Expr::Conditional { cond, otherwise: None, .. } = &root {
            if !self.state.else_asked && !self.state.else_declined {
                self.state.else_asked = true;
                let span = self.state.root_spans.get(&NodePath::root().child(Slot::Cond)).cloned();
                let mv = AgentMove::new(Template::AskElse, vec![negated_phrase(cond, span.as_deref())]);
                return self.ask(Phase::AwaitingElse, Pending::Else, mv);
            }
        }
        let restore_to = self.undo.absolute_len().saturating_sub(1);
        let mv = AgentMove::new(Template::ConfirmRule, vec![self.rule_summary(&root)]).with_options(yes_no());
        self.ask(Phase::AwaitingConfirmation, Pending::ConfirmRule { restore_to }, mv)
    }

    fn rule_summary(&self, root: &Expr) -> String {
        let span = |slot: Slot, e: &Expr| {
            self.state
                .root_spans
                .get(&NodePath::root().child(slot))
                .cloned()
                .unwrap_or_else(|| describe(e))
        };
        match root {
            Expr::Conditional { cond, then, otherwise } => {
                let mut s = format!("{} if {}", context_label(&span(Slot::Then, then)), span(Slot::Cond, cond));
                if let Some(o) = otherwise {
                    s.push_str(&format!(", otherwise {}", context_label(&span(Slot::Else, o))));
                }
                s
            }
            other => describe(other),
        }
    }

    // ---- explanations and demonstrations ----

    fn set_partial(&mut self, top: ParseCandidate) {
        let mut queued = operator_ambiguities(&top);
        let frame = self.state.frames.last_mut().expect("frame present");
        let mut expr = top.expr;
        if let Some(op) = frame.reteach_op {
            queued.retain(|(path, alternatives)| {
                let Some(pick) = alternatives.iter().find(|a| matches!(a, Expr::Compare { op: o, .. } if *o == op)) else {
                    return true;
                };
                if let Ok(e) = expr.replace_node(path, pick.clone()) {
                    expr = e;
                }
                false
            });
        }
        frame.partial = Some(expr);
        frame.partial_spans = top.node_spans;
        self.state.queued = queued;
    }

    fn explanation(&mut self, text: &str) -> Result<TurnOutcome, DialogError> {
        let frame = self.state.frames.last().expect("frame while awaiting explanation").clone();
        let whole = phrase_words(text).join(" ");
        let covers_all = |c: &ParseCandidate| c.expr.hole_span().is_some_and(|s| phrase_words(s).join(" ") == whole);
        match frame.ty {
            ExprType::Bool => {
                let top = match parse_bool_explanation(text, &self.lexicon) {
                    Ok(mut c) if !covers_all(&c[0]) => c.remove(0),
                    _ => return Ok(self.rephrase(text)),
                };
                self.set_partial(top);
            }
            ExprType::Value => match parse_value_explanation(text, &self.lexicon) {
                Ok(ValueExplanation::DemonstrationRequested) => return Ok(self.start_demo(&frame)),
                Ok(ValueExplanation::Parsed(mut c)) => {
                    let same = c[0].expr.hole_span().is_some_and(|s| value_concept_name(s) == frame.name);
                    if covers_all(&c[0]) && c[0].expr.is_hole() || same {
                        return Ok(self.rephrase(text));
                    }
                    self.set_partial(c.remove(0));
                }
                Err(_) => return Ok(self.rephrase(text)),
            },
            _ => {
                if requests_demonstration(&phrase_words(text)) {
                    return Ok(self.start_demo(&frame));
                }
                match parse_action(text, &self.lexicon) {
                    Ok(mut c) if matches!(c[0].expr, Expr::Call { .. }) => self.set_partial(c.remove(0)),
                    _ => return Ok(self.rephrase(text)),
                }
            }
        }
        Ok(TurnOutcome::say(self.advance()))
    }

    fn expected_dimension(&self) -> Option<Dimension> {
        let n = self.state.frames.len();
        let frame = self.state.frames.last()?;
        let parent = if n >= 2 {
            self.state.frames[n - 2].partial.as_ref()?
        } else {
            self.state.root.as_ref()?
        };
        let (last, prefix) = frame.path.0.split_last()?;
        let sibling = match last {
            Slot::Lhs => Slot::Rhs,
            Slot::Rhs => Slot::Lhs,
            _ => return None,
        };
        match parent.get(&NodePath(prefix.to_vec()).child(sibling))? {
            Expr::Const(v) => Some(v.dimension()),
            Expr::ValueConcept(name) => self.kb.value_concept(name).map(|e| e.dimension),
            _ => None,
        }
    }

    fn start_demo(&mut self, frame: &Frame) -> TurnOutcome {
        let (mode, mv) = match frame.ty {
            ExprType::Value => (
                RecordingMode::ValueQuery {
                    concept: frame.name.clone(),
                    expected: self.expected_dimension(),
                },
                AgentMove::new(Template::DemoValue, vec![frame.name.clone()]),
            ),
            _ => (
                RecordingMode::Procedure { goal: frame.span.clone() },
                AgentMove::new(Template::DemoProc, vec![frame.span.clone()]),
            ),
        };
        match start_recording(&mut self.world, mode) {
            Ok(rec) => {
                self.state.recording = Some(rec);
                let mv = self.ask(Phase::AwaitingDemonstration, Pending::Frame, mv);
                TurnOutcome {
                    agent: Some(mv),
                    screen_changed: true,
                    demonstration: Some(true),
                    trace: None,
                }
            }
            Err(e) => TurnOutcome::say(AgentMove::new(Template::DemoFailed, vec![e.to_string()])),
        }
    }

    fn finish_demo(&mut self) -> TurnOutcome {
        let rec = self.state.recording.take().expect("recording while demonstrating");
        let mode = rec.mode().clone();
        let learned = match &mode {
            RecordingMode::ValueQuery { .. } => finish_value_query_recording(rec, &mut self.world).map(Learned::Query),
            RecordingMode::Procedure { .. } => finish_procedure_recording(rec, &mut self.world).map(Learned::Script),
        };
        match learned {
            Ok(l) => {
                self.state.frames.last_mut().expect("frame while demonstrating").learned = Some(l);
                TurnOutcome {
                    agent: Some(self.advance()),
                    screen_changed: true,
                    demonstration: Some(false),
                    trace: None,
                }
            }
            Err(e) => {
                let rec = start_recording(&mut self.world, mode).expect("recording was just stopped");
                self.state.recording = Some(rec);
                let mv = AgentMove::new(Template::DemoFailed, vec![e.to_string()]);
                self.state.pending_question = Some(mv.clone());
                TurnOutcome {
                    agent: Some(mv),
                    screen_changed: true,
                    ..Default::default()
                }
            }
        }
    }

    // ---- else branch ----

    fn else_answer(&mut self, text: &str) -> TurnOutcome {
        if is_decline(text) {
            self.state.else_declined = true;
            return TurnOutcome::say(self.advance());
        }
        let top = match parse_action(text, &self.lexicon) {
            Ok(mut c) => c.remove(0),
            Err(_) => return self.rephrase(text),
        };
        let Some(Expr::Conditional { cond, then, .. }) = self.state.root.clone() else {
            return self.rephrase(text);
        };
        self.state.root = Some(Expr::Conditional {
            cond,
            then,
            otherwise: Some(Box::new(top.expr.clone())),
        });
        let else_path = NodePath::root().child(Slot::Else);
        for (p, s) in top.node_spans {
            self.state.root_spans.insert(p.under(&else_path), s);
        }
        TurnOutcome::say(self.advance())
    }

    // ---- reuse ----

    fn ask_reuse(&mut self, path: NodePath, kind: ConceptKind, name: String, prior: String) -> AgentMove {
        let mv = match kind {
            ConceptKind::Bool => {
                let phrase = self
                    .kb
                    .bool_concept(&name)
                    .and_then(|e| e.triggers.iter().find(|t| **t != name).cloned())
                    .unwrap_or_else(|| name.clone());
                AgentMove::new(Template::ReuseBool, vec![phrase, prior.clone(), self.state.context.clone()])
            }
            ConceptKind::Value => {
                let source = self.kb.resolve_value_in_context(&name, &prior).ok().map(|r| r.variant.source.clone());
                let app = match source {
                    Some(ValueSource::Query(q)) => q.app,
                    Some(ValueSource::Constant(v)) => format!("constant {v}"),
                    None => prior.clone(),
                };
                let cond_phrase = match self.state.frames.last() {
                    Some(f) => f.span.clone(),
                    None => self
                        .state
                        .root_spans
                        .get(&NodePath::root().child(Slot::Cond))
                        .cloned()
                        .unwrap_or_default(),
                };
                AgentMove::new(Template::ReuseValue, vec![name.clone(), app, cond_phrase])
            }
        };
        let mv = mv.with_options(yes_no());
        self.ask(
            Phase::AwaitingReuseDecision,
            Pending::Reuse {
                path,
                kind,
                name,
                prior_context: prior,
            },
            mv,
        )
    }

    fn copy_bool_variant(&mut self, name: &str, to: &str) -> Result<(), KbError> {
        let expr = self.kb.resolve_bool_in_context(name, to)?.variant.expr.clone();
        self.kb.store_bool(name, &[], to, expr.clone())?;
        for (_, node) in expr.walk() {
            match node {
                Expr::ValueConcept(v) => {
                    let r = self.kb.resolve_value_in_context(v, to)?;
                    if r.reuse_decision_needed {
                        let source = r.variant.source.clone();
                        self.kb.store_value(v, &[], to, source)?;
                    }
                }
                Expr::BoolConcept(b) if self.kb.resolve_bool_in_context(b, to)?.reuse_decision_needed => {
                    self.copy_bool_variant(b, to)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn reuse_answer(&mut self, yes: bool, path: NodePath, kind: ConceptKind, name: String, prior: String) -> AgentMove {
        let ctx = self.state.context.clone();
        if yes {
            let done = match kind {
                ConceptKind::Bool => self.copy_bool_variant(&name, &ctx),
                ConceptKind::Value => match self.kb.resolve_value_in_context(&name, &prior) {
                    Ok(r) => {
                        let source = r.variant.source.clone();
                        self.kb.store_value(&name, &[], &ctx, source)
                    }
                    Err(e) => Err(e),
                },
            };
            if let Err(e) = done {
                return AgentMove::new(Template::LearnFailed, vec![e.to_string()]);
            }
            return self.advance();
        }
        let span = self.owner_span(&path).unwrap_or_else(|| name.clone());
        match kind {
            ConceptKind::Bool => {
                let op = self.kb.resolve_bool_in_context(&name, &prior).ok().and_then(|r| match &r.variant.expr {
                    Expr::Compare { op, .. } => Some(*op),
                    _ => None,
                });
                self.push_frame(path, ExprType::Bool, &span, Some((name, op)))
            }
            ConceptKind::Value => self.push_frame(path, ExprType::Value, &span, Some((name, None))),
        }
    }

    // ---- disambiguation ----

    fn ask_disambiguation(&mut self, path: NodePath, alternatives: Vec<Expr>) -> AgentMove {
        let (lhs, rhs) = match alternatives.first() {
            Some(Expr::Compare { lhs, rhs, .. }) => (describe(lhs), describe(rhs)),
            _ => (String::new(), String::new()),
        };
        let options = alternatives
            .iter()
            .filter_map(|a| match a {
                Expr::Compare { op, .. } => Some(operator_option(*op)),
                _ => None,
            })
            .collect();
        let mv = AgentMove::new(Template::Disambiguate, vec![lhs, rhs]).with_options(options);
        self.ask(Phase::AwaitingDisambiguation, Pending::Disambiguate { path, alternatives }, mv)
    }

    fn choose(&mut self, index: usize) -> TurnOutcome {
        let Some(Pending::Disambiguate { path, alternatives }) = self.state.pending.clone() else {
            return self.rephrase("");
        };
        self.replace_in_owner(&path, alternatives[index].clone());
        self.state.queued.retain(|(p, _)| *p != path);
        TurnOutcome::say(self.advance())
    }

    // ---- confirmation ----

    fn ask_confirm_frame(&mut self) -> AgentMove {
        let f = self.state.frames.last().expect("frame to confirm");
        let mv = match f.ty {
            ExprType::Bool => AgentMove::new(
                Template::ConfirmBool,
                vec![f.name.clone(), f.partial.as_ref().map(describe).unwrap_or_default()],
            ),
            ExprType::Value => AgentMove::new(Template::ConfirmValue, vec![f.name.clone()]),
            _ => AgentMove::new(Template::ConfirmProc, vec![f.span.clone()]),
        }
        .with_options(yes_no());
        self.ask(Phase::AwaitingConfirmation, Pending::ConfirmFrame, mv)
    }

    fn yes_no_answer(&mut self, yes: bool) -> TurnOutcome {
        match self.state.pending.clone() {
            Some(Pending::Reuse {
                path,
                kind,
                name,
                prior_context,
            }) => TurnOutcome::say(self.reuse_answer(yes, path, kind, name, prior_context)),
            Some(Pending::ConfirmFrame) if yes => TurnOutcome::say(match self.commit_frame() {
                Ok(()) => self.advance(),
                Err(e) => {
                    let f = self.state.frames.last_mut().expect("frame to commit");
                    f.partial = None;
                    f.learned = None;
                    let q = self.advance();
                    let mut mv = AgentMove::new(Template::LearnFailed, vec![e.to_string()]);
                    mv.text = format!("{} {}", mv.text, q.text);
                    mv.options = q.options;
                    mv
                }
            }),
            Some(Pending::ConfirmFrame) => {
                let at = self.state.frames.last().map(|f| f.asked_at).unwrap_or_default();
                self.rewind_to(at)
            }
            Some(Pending::ConfirmRule { .. }) if yes => TurnOutcome::say(self.commit_rule()),
            Some(Pending::ConfirmRule { restore_to }) => self.rewind_to(restore_to),
            _ => self.rephrase(""),
        }
    }

    /// Returns to the state stored at undo position `at` and repeats its question.
    fn rewind_to(&mut self, at: usize) -> TurnOutcome {
        match self.undo.get(at).cloned() {
            Some(snap) => {
                self.restore(snap);
                let mv = self
                    .state
                    .pending_question
                    .clone()
                    .unwrap_or_else(|| AgentMove::new(Template::Undone, Vec::new()));
                TurnOutcome {
                    agent: Some(mv),
                    screen_changed: true,
                    ..Default::default()
                }
            }
            None => {
                if let Some(f) = self.state.frames.last_mut() {
                    f.partial = None;
                    f.learned = None;
                }
                TurnOutcome::say(self.advance())
            }
        }
    }

    fn commit_frame(&mut self) -> Result<(), KbError> {
        let f = self.state.frames.last().expect("frame to commit").clone();
        let ctx = self.state.context.clone();
        let triggers = vec![f.span.clone()];
        let replacement = match (f.ty, &f.learned, &f.partial) {
            (ExprType::Bool, _, Some(expr)) => {
                self.kb.store_bool(&f.name, &triggers, &ctx, expr.clone())?;
                self.lexicon = self.lexicon.grow(LexiconSource::BoolConcept {
                    name: &f.name,
                    triggers: &triggers,
                });
                Expr::BoolConcept(f.name.clone())
            }
            (ExprType::Value, learned, partial) => {
                let source = match (learned, partial) {
                    (Some(Learned::Query(q)), _) => ValueSource::Query(q.clone()),
                    (_, Some(Expr::Const(v))) => ValueSource::Constant(*v),
                    (_, Some(Expr::ValueConcept(other))) => self.kb.resolve_value_in_context(other, &ctx)?.variant.source.clone(),
                    _ => {
                        return Err(KbError::InvalidEntry {
                            name: f.name.clone(),
                            message: "no value source".into(),
                        })
                    }
                };
                self.kb.store_value(&f.name, &triggers, &ctx, source)?;
                self.lexicon = self.lexicon.grow(LexiconSource::ValueConcept {
                    name: &f.name,
                    triggers: &triggers,
                });
                Expr::ValueConcept(f.name.clone())
            }
            (_, Some(Learned::Script(script)), _) => {
                self.kb.store_procedure(script.clone(), &triggers)?;
                self.lexicon = self.lexicon.grow(LexiconSource::Procedure {
                    script,
                    triggers: &triggers,
                });
                Expr::Call {
                    procedure: script.name.clone(),
                    args: script.recorded_bindings(),
                }
            }
            (_, _, Some(call @ Expr::Call { procedure, .. })) => {
                let entry = self.kb.procedure(procedure).ok_or_else(|| KbError::UnknownName(procedure.clone()))?;
                let script = entry.script.clone();
                self.kb.store_procedure(script.clone(), &triggers)?;
                self.lexicon = self.lexicon.grow(LexiconSource::Procedure {
                    script: &script,
                    triggers: &triggers,
                });
                call.clone()
            }
            _ => {
                return Err(KbError::InvalidEntry {
                    name: f.name.clone(),
                    message: "nothing was learned".into(),
                })
            }
        };
        self.state.frames.pop();
        self.replace_in_owner(&f.path, replacement);
        Ok(())
    }

    fn commit_rule(&mut self) -> AgentMove {
        let root = self.state.root.clone().expect("rule to commit");
        let name = match slug(&self.state.context) {
            s if s.is_empty() => "script".to_string(),
            s => s,
        };
        let entry = ScriptEntry {
            name: name.clone(),
            utterance: self.state.command.clone(),
            context: self.state.context.clone(),
            expr: root,
        };
        match self.kb.store_script(entry) {
            Ok(()) => {
                self.clear_question();
                self.state.phase = Phase::Done;
                AgentMove::new(Template::Done, vec![name])
            }
            Err(e) => AgentMove::new(Template::LearnFailed, vec![e.to_string()]),
        }
    }
}

fn operator_ambiguities(c: &ParseCandidate) -> Vec<(NodePath, Vec<Expr>)> {
    c.ambiguous_nodes
        .iter()
        .filter(|a| a.kind == AmbiguityKind::Operator)
        .map(|a| (a.path.clone(), a.alternatives.clone()))
        .collect()
}

/// Seed lexicon grown with every concept and procedure in `kb`.
pub fn lexicon_for(kb: &KnowledgeBase) -> Lexicon {
    let mut lex = Lexicon::seed();
    for b in kb.bool_concepts() {
        let t: Vec<String> = b.triggers.iter().cloned().collect();
        lex = lex.grow(LexiconSource::BoolConcept { name: &b.name, triggers: &t });
    }
    for v in kb.value_concepts() {
        let t: Vec<String> = v.triggers.iter().cloned().collect();
        lex = lex.grow(LexiconSource::ValueConcept { name: &v.name, triggers: &t });
    }
    for p in kb.procedures() {
        let t: Vec<String> = p.triggers.iter().cloned().collect();
        lex = lex.grow(LexiconSource::Procedure {
            script: &p.script,
            triggers: &t,
        });
    }
    lex
}
