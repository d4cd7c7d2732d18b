use std::collections::BTreeMap;

use serde::Serialize;

use super::{DemoError, RecordedScript, ValueQuery};
use crate::dsl::TypedValue;
use crate::screenworld::{Action, World};

/// One action performed during replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayedAction {
    pub app: String,
    pub screen: String,
    pub action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_text: Option<String>,
    pub result_screen: String,
}

fn check_bindings(script: &RecordedScript, bindings: &BTreeMap<String, String>) -> Result<BTreeMap<usize, String>, DemoError> {
    for name in bindings.keys() {
        if script.parameter(name).is_none() {
            return Err(DemoError::UnknownParameter(name.clone()));
        }
    }
    let mut by_step = BTreeMap::new();
    for p in &script.parameters {
        let value = bindings.get(&p.name).ok_or_else(|| DemoError::UnboundParameter(p.name.clone()))?;
        let canonical = p.accepts(value).ok_or_else(|| DemoError::UnknownBindingValue {
            parameter: p.name.clone(),
            value: value.clone(),
        })?;
        by_step.insert(p.step, canonical.to_string());
    }
    Ok(by_step)
}

/// Replays a recorded procedure from the home screen, retargeting parameterized clicks.
pub fn replay_procedure(
    script: &RecordedScript,
    bindings: &BTreeMap<String, String>,
    world: &mut World,
) -> Result<Vec<ReplayedAction>, DemoError> {
    let by_step = check_bindings(script, bindings)?;
    world.go_home();
    let mut trace = Vec::with_capacity(script.steps.len());
    for (i, step) in script.steps.iter().enumerate() {
        let broken = |message: String| DemoError::ReplayBroken { step: i, message };
        let (app, screen) = world.current();
        if (app, screen) != (step.app.as_str(), step.screen.as_str()) {
            return Err(broken(format!(
                "expected screen {}/{}, found {app}/{screen}",
                step.app, step.screen
            )));
        }
        let snap = world.snapshot();
        let mut action = step.action.clone();
        if let (Some(value), Some(target)) = (by_step.get(&i), &step.target) {
            if *value != target.text {
                let wanted = value.to_lowercase();
                let node = snap
                    .nodes
                    .iter()
                    .find(|n| {
                        n.kind == target.kind
                            && snap.parent(&n.id) == Some(target.parent.as_str())
                            && n.text.trim().to_lowercase() == wanted
                    })
                    .ok_or_else(|| broken(format!("no object showing {value:?}")))?;
                action = Action::Click { object: node.id.clone() };
            }
        }
        let target_text = action.target().and_then(|id| snap.node(id)).map(|n| n.text.clone());
        let result = world.perform(&action).map_err(|e| broken(e.to_string()))?;
        trace.push(ReplayedAction {
            app: step.app.clone(),
            screen: step.screen.clone(),
            action,
            target_text,
            result_screen: result.screen,
        });
    }
    Ok(trace)
}

fn run_query(query: &ValueQuery, world: &mut World) -> Result<TypedValue, DemoError> {
    for action in &query.navigation {
        world
            .perform(action)
            .map_err(|e| DemoError::QueryFailed(format!("navigation failed: {e}")))?;
    }
    let snap = world.snapshot();
    let node = query.selector.run(&snap).map_err(|e| DemoError::QueryFailed(e.to_string()))?;
    snap.entities_of(&node.id)
        .iter()
        .find(|m| m.value.dimension() == query.expected_dimension)
        .map(|m| m.value.normalize())
        .ok_or_else(|| DemoError::QueryFailed(format!("object {:?} shows no {} value", node.id, query.expected_dimension)))
}

/// Navigates to the recorded screen and reads the value. The world ends on the home screen.
pub fn replay_value_query(query: &ValueQuery, world: &mut World) -> Result<TypedValue, DemoError> {
    world.go_home();
    let out = run_query(query, world);
    world.go_home();
    out
}
