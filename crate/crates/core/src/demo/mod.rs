//! Recording demonstrations into reusable procedures and value queries, and replaying them.

mod record;
mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use record::{
    finish_procedure_recording, finish_value_query_recording, highlight_candidates, start_recording, Highlight,
    RecordingMode, RecordingSession,
};
pub use replay::{replay_procedure, replay_value_query, ReplayedAction};

use crate::dsl::Dimension;
use crate::screenworld::{Action, GraphQuery, ObjectKind, WorldError};

/// What the demonstrated action acted on, captured at record time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TargetInfo {
    pub text: String,
    pub kind: ObjectKind,
    pub parent: String,
}

/// One recorded action with the screen it was performed on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RecordedStep {
    pub action: Action,
    pub app: String,
    pub screen: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetInfo>,
}

/// A parameterized click: `step` clicked `recorded_value`, and any of `alternatives` may replace it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Parameter {
    pub name: String,
    pub recorded_value: String,
    pub step: usize,
    pub alternatives: Vec<String>,
}

impl Parameter {
    /// Canonical spelling of `value` if it is the recorded value or an alternative.
    pub fn accepts(&self, value: &str) -> Option<&str> {
        let v = value.trim().to_lowercase();
        std::iter::once(&self.recorded_value)
            .chain(self.alternatives.iter())
            .find(|x| x.to_lowercase() == v)
            .map(String::as_str)
    }
}

/// A demonstrated procedure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RecordedScript {
    pub name: String,
    pub goal: String,
    pub app: String,
    pub steps: Vec<RecordedStep>,
    pub parameters: Vec<Parameter>,
}

impl RecordedScript {
    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Bindings that reproduce the demonstration.
    pub fn recorded_bindings(&self) -> std::collections::BTreeMap<String, String> {
        self.parameters
            .iter()
            .map(|p| (p.name.clone(), p.recorded_value.clone()))
            .collect()
    }
}

/// A demonstrated way to read a value off some app screen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ValueQuery {
    pub name: String,
    pub concept: String,
    pub app: String,
    pub navigation: Vec<Action>,
    pub selector: GraphQuery,
    pub expected_dimension: Dimension,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DemoError {
    #[error("a recording is already active")]
    RecordingAlreadyActive,
    #[error("the demonstration contains no actions")]
    EmptyRecording,
    #[error("this operation needs a {0} recording")]
    WrongMode(&'static str),
    #[error("no value was selected during the demonstration")]
    NoSelection,
    #[error("the selected object {object:?} shows no {expected} value")]
    SelectionHasNoValue { object: String, expected: String },
    #[error("parameter {0:?} is not bound")]
    UnboundParameter(String),
    #[error("procedure has no parameter {0:?}")]
    UnknownParameter(String),
    #[error("{value:?} is not a known value for parameter {parameter:?}")]
    UnknownBindingValue { parameter: String, value: String },
    #[error("replay broke at step {step}: {message}")]
    ReplayBroken { step: usize, message: String },
    #[error("value query failed: {0}")]
    QueryFailed(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// `commute time` -> `query_CommuteTime`.
pub fn query_name(concept: &str) -> String {
    let camel: String = crate::text::phrase_words(concept)
        .iter()
        .map(|w| {
            let w: String = w.chars().filter(|c| c.is_alphanumeric()).collect();
            let mut cs = w.chars();
            match cs.next() {
                Some(f) => f.to_uppercase().chain(cs).collect(),
                None => String::new(),
            }
        })
        .collect();
    format!("query_{camel}")
}

/// `order iced coffee` on `Starbucks` -> `order_Starbucks`.
pub fn procedure_name(goal: &str, app: &str) -> String {
    let verb: String = crate::text::phrase_words(goal)
        .first()
        .map(|w| w.chars().filter(|c| c.is_alphanumeric()).collect())
        .unwrap_or_default();
    let app: String = app.chars().filter(|c| c.is_alphanumeric()).collect();
    if verb.is_empty() {
        format!("do_{app}")
    } else {
        format!("{verb}_{app}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert_eq!(query_name("temperature"), "query_Temperature");
        assert_eq!(query_name("commute time"), "query_CommuteTime");
        assert_eq!(procedure_name("Order a cup of Iced Cappuccino", "Starbucks"), "order_Starbucks");
        assert_eq!(procedure_name("order a pepperoni pizza", "Papa Johns"), "order_PapaJohns");
    }
}
