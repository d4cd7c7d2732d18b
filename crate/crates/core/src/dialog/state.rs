use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::templates::AgentMove;
use crate::demo::{RecordedScript, RecordingSession, ValueQuery};
use crate::dsl::{CmpOp, Expr, ExprType, NodePath};
use crate::screenworld::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Phase {
    AwaitingCommand,
    AwaitingExplanation,
    AwaitingDemonstration,
    AwaitingElse,
    AwaitingReuseDecision,
    AwaitingDisambiguation,
    AwaitingConfirmation,
    Done,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::AwaitingCommand => "awaitingCommand",
            Phase::AwaitingExplanation => "awaitingExplanation",
            Phase::AwaitingDemonstration => "awaitingDemonstration",
            Phase::AwaitingElse => "awaitingElse",
            Phase::AwaitingReuseDecision => "awaitingReuseDecision",
            Phase::AwaitingDisambiguation => "awaitingDisambiguation",
            Phase::AwaitingConfirmation => "awaitingConfirmation",
            Phase::Done => "done",
        }
    }
}

/// What a demonstration taught, before it is confirmed.
#[derive(Debug, Clone, PartialEq)]
pub enum Learned {
    Query(ValueQuery),
    Script(RecordedScript),
}

/// One concept or procedure being taught.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Node this frame will fill, relative to the expression of the frame below (or the root).
    pub path: NodePath,
    pub ty: ExprType,
    pub name: String,
    /// Utterance text the node came from.
    pub span: String,
    /// Parsed explanation, possibly still holding holes.
    pub partial: Option<Expr>,
    pub partial_spans: BTreeMap<NodePath, String>,
    pub learned: Option<Learned>,
    /// Operator of the variant being retaught in a new context.
    pub reteach_op: Option<CmpOp>,
    /// Undo-stack position holding the state right after this frame's question.
    pub asked_at: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ConceptKind {
    Bool,
    Value,
}

/// What the outstanding question is about.
#[derive(Debug, Clone, PartialEq)]
pub enum Pending {
    Frame,
    Else,
    Reuse {
        path: NodePath,
        kind: ConceptKind,
        name: String,
        prior_context: String,
    },
    Disambiguate {
        path: NodePath,
        alternatives: Vec<Expr>,
    },
    ConfirmFrame,
    ConfirmRule {
        restore_to: usize,
    },
}

/// The teaching session's conversational state.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogState {
    pub phase: Phase,
    pub root: Option<Expr>,
    pub command: String,
    /// Context label of the rule being taught: the text of its action.
    pub context: String,
    pub root_spans: BTreeMap<NodePath, String>,
    pub frames: Vec<Frame>,
    pub pending: Option<Pending>,
    pub pending_question: Option<AgentMove>,
    pub pending_options: Vec<String>,
    /// Operator ambiguities of the expression under construction, asked in order.
    pub queued: Vec<(NodePath, Vec<Expr>)>,
    pub recording: Option<RecordingSession>,
    pub else_asked: bool,
    pub else_declined: bool,
}

impl Default for DialogState {
    fn default() -> Self {
        DialogState {
            phase: Phase::AwaitingCommand,
            root: None,
            command: String::new(),
            context: String::new(),
            root_spans: BTreeMap::new(),
            frames: Vec::new(),
            pending: None,
            pending_question: None,
            pending_options: Vec::new(),
            queued: Vec::new(),
            recording: None,
            else_asked: false,
            else_declined: false,
        }
    }
}

impl DialogState {
    /// Checks the structural invariants tying phase, frames and options together.
    pub fn check_invariants(&self) -> Result<(), String> {
        let framed = matches!(self.phase, Phase::AwaitingExplanation | Phase::AwaitingDemonstration);
        if framed && self.frames.is_empty() {
            return Err(format!("phase {} without a frame", self.phase.name()));
        }
        let optioned = matches!(
            self.phase,
            Phase::AwaitingReuseDecision | Phase::AwaitingDisambiguation | Phase::AwaitingConfirmation
        );
        if optioned == self.pending_options.is_empty() {
            return Err(format!("phase {} with {} options", self.phase.name(), self.pending_options.len()));
        }
        if (self.phase == Phase::AwaitingDemonstration) != self.recording.is_some() {
            return Err("recording state does not match phase".into());
        }
        Ok(())
    }
}

/// One user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TurnInput {
    Text { text: String },
    Option { index: usize },
    DemoAction { action: Action },
    DemoFinish,
    Demonstration { actions: Vec<Action> },
    Undo,
}

impl TurnInput {
    pub fn text(s: &str) -> Self {
        TurnInput::Text { text: s.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TurnInput::Text { .. } => "text",
            TurnInput::Option { .. } => "option",
            TurnInput::DemoAction { .. } => "demoAction",
            TurnInput::DemoFinish => "demoFinish",
            TurnInput::Demonstration { .. } => "demonstration",
            TurnInput::Undo => "undo",
        }
    }
}
