use serde::Serialize;

use super::{procedure_name, query_name, DemoError, Parameter, RecordedScript, RecordedStep, TargetInfo, ValueQuery};
use crate::dsl::Dimension;
use crate::entities::extract_entities;
use crate::screenworld::{Action, ActionResult, GraphQuery, ObjectKind, Predicate, UiSnapshot, World, HOME_APP};
use crate::text::{find_subsequence, phrase_words};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "camelCase")]
pub enum RecordingMode {
    Procedure { goal: String },
    ValueQuery { concept: String, expected: Option<Dimension> },
}

#[derive(Debug, Clone, PartialEq)]
struct Selected {
    object: String,
    step: usize,
    snapshot: UiSnapshot,
}

/// Captures the actions of one demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSession {
    mode: RecordingMode,
    steps: Vec<RecordedStep>,
    same_kind_siblings: Vec<Vec<String>>,
    selection: Option<Selected>,
    log: Vec<String>,
}

/// Objects to highlight during a value demonstration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Highlight {
    pub ids: Vec<String>,
    pub untyped_fallback: bool,
}

/// Starts capturing; the world is sent to the home screen.
pub fn start_recording(world: &mut World, mode: RecordingMode) -> Result<RecordingSession, DemoError> {
    if world.is_recording() {
        return Err(DemoError::RecordingAlreadyActive);
    }
    world.set_recording(true);
    world.go_home();
    Ok(RecordingSession {
        mode,
        steps: Vec::new(),
        same_kind_siblings: Vec::new(),
        selection: None,
        log: Vec::new(),
    })
}

impl RecordingSession {
    pub fn mode(&self) -> &RecordingMode {
        &self.mode
    }

    pub fn steps(&self) -> &[RecordedStep] {
        &self.steps
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    pub fn selected_object(&self) -> Option<&str> {
        self.selection.as_ref().map(|s| s.object.as_str())
    }

    /// Performs `action` on the world and records it.
    pub fn perform(&mut self, world: &mut World, action: &Action) -> Result<ActionResult, DemoError> {
        let before = world.snapshot();
        let result = world.perform(action)?;
        let target = action.target().and_then(|id| {
            let node = before.node(id)?;
            Some(TargetInfo {
                text: node.text.clone(),
                kind: node.kind,
                parent: before.parent(id).unwrap_or_default().to_string(),
            })
        });
        let siblings = match (action, &target) {
            (Action::Click { object }, Some(t)) => before
                .siblings(object)
                .into_iter()
                .filter(|n| n.kind == t.kind && !n.text.trim().is_empty())
                .map(|n| n.text.clone())
                .collect(),
            _ => Vec::new(),
        };
        if let (Action::LongClickSelect { object }, RecordingMode::ValueQuery { .. }) = (action, &self.mode) {
            self.selection = Some(Selected {
                object: object.clone(),
                step: self.steps.len(),
                snapshot: before.clone(),
            });
        }
        self.steps.push(RecordedStep {
            action: action.clone(),
            app: before.app.clone(),
            screen: before.screen.clone(),
            target,
        });
        self.same_kind_siblings.push(siblings);
        Ok(result)
    }
}

/// Objects whose extracted values match the expected dimension of a value recording.
pub fn highlight_candidates(session: &RecordingSession, snapshot: &UiSnapshot) -> Highlight {
    let RecordingMode::ValueQuery { expected, .. } = &session.mode else {
        return Highlight {
            ids: Vec::new(),
            untyped_fallback: false,
        };
    };
    let ids = snapshot
        .nodes
        .iter()
        .filter(|n| {
            let found = snapshot.entities_of(&n.id);
            match expected {
                Some(d) => found.iter().any(|m| m.value.dimension() == *d),
                None => !found.is_empty(),
            }
        })
        .map(|n| n.id.clone())
        .collect();
    Highlight {
        ids,
        untyped_fallback: expected.is_none(),
    }
}

fn parameter_name(value: &str, taken: &[Parameter]) -> String {
    let base = match extract_entities(value).first() {
        Some(m) if m.value.dimension() == Dimension::TimeOfDay => "time",
        _ => "item",
    };
    let mut name = base.to_string();
    let mut n = 1;
    while taken.iter().any(|p| p.name == name) {
        n += 1;
        name = format!("{base}{n}");
    }
    name
}

/// Ends a procedure demonstration and infers its parameters.
pub fn finish_procedure_recording(session: RecordingSession, world: &mut World) -> Result<RecordedScript, DemoError> {
    world.set_recording(false);
    world.go_home();
    let RecordingMode::Procedure { goal } = &session.mode else {
        return Err(DemoError::WrongMode("procedure"));
    };
    if session.steps.is_empty() {
        return Err(DemoError::EmptyRecording);
    }
    let goal_words = phrase_words(goal);
    let mut parameters: Vec<Parameter> = Vec::new();
    let mut used_screens: Vec<(String, String)> = Vec::new();
    for (i, step) in session.steps.iter().enumerate() {
        let (Action::Click { .. }, Some(target)) = (&step.action, &step.target) else {
            continue;
        };
        if step.app == HOME_APP || !matches!(target.kind, ObjectKind::ListItem | ObjectKind::Button) {
            continue;
        }
        let screen = (step.app.clone(), step.screen.clone());
        let words = phrase_words(&target.text);
        let siblings = &session.same_kind_siblings[i];
        if used_screens.contains(&screen) || siblings.is_empty() || find_subsequence(&goal_words, &words).is_none() {
            continue;
        }
        let mut alternatives: Vec<String> = siblings.iter().filter(|s| **s != target.text).cloned().collect();
        alternatives.sort();
        alternatives.dedup();
        parameters.push(Parameter {
            name: parameter_name(&target.text, &parameters),
            recorded_value: target.text.clone(),
            step: i,
            alternatives,
        });
        used_screens.push(screen);
    }
    let app = session
        .steps
        .iter()
        .map(|s| s.app.as_str())
        .find(|a| *a != HOME_APP)
        .map(str::to_string)
        .or_else(|| {
            session.steps.iter().find_map(|s| match &s.action {
                Action::LaunchApp { app } => Some(app.clone()),
                Action::Click { .. } if s.app == HOME_APP => s.target.as_ref().map(|t| t.text.clone()),
                _ => None,
            })
        })
        .unwrap_or_else(|| HOME_APP.to_string());
    Ok(RecordedScript {
        name: procedure_name(goal, &app),
        goal: goal.clone(),
        app,
        steps: session.steps,
        parameters,
    })
}

/// Ends a value demonstration, turning the long-click selection into a query.
pub fn finish_value_query_recording(session: RecordingSession, world: &mut World) -> Result<ValueQuery, DemoError> {
    world.set_recording(false);
    world.go_home();
    let RecordingMode::ValueQuery { concept, expected } = &session.mode else {
        return Err(DemoError::WrongMode("value query"));
    };
    let selected = session.selection.as_ref().ok_or(DemoError::NoSelection)?;
    let snap = &selected.snapshot;
    let id = selected.object.as_str();
    let found = snap.entities_of(id);
    let dimension = match expected {
        Some(d) => *d,
        None => found.first().map(|m| m.value.dimension()).ok_or_else(|| DemoError::SelectionHasNoValue {
            object: id.to_string(),
            expected: "typed".to_string(),
        })?,
    };
    if !found.iter().any(|m| m.value.dimension() == dimension) {
        return Err(DemoError::SelectionHasNoValue {
            object: id.to_string(),
            expected: dimension.to_string(),
        });
    }
    let fallback = GraphQuery(vec![
        Predicate::HasEntityDimension(dimension),
        Predicate::ObjectIdIs(id.to_string()),
    ]);
    let selector = match snap.nearest_label(id) {
        Some(label) => {
            let q = GraphQuery(vec![
                Predicate::HasEntityDimension(dimension),
                Predicate::NearLabel(label.text.clone()),
            ]);
            if q.run(snap).map(|n| n.id.as_str()) == Ok(id) {
                q
            } else {
                fallback
            }
        }
        None => fallback,
    };
    let navigation = session.steps[..selected.step]
        .iter()
        .filter(|s| !matches!(s.action, Action::LongClickSelect { .. }))
        .map(|s| s.action.clone())
        .collect();
    Ok(ValueQuery {
        name: query_name(concept),
        concept: concept.clone(),
        app: snap.app.clone(),
        navigation,
        selector,
        expected_dimension: dimension,
    })
}
