//! Deterministic simulated phone: apps as screen graphs, snapshots, actions.

pub mod app;
pub mod query;
pub mod snapshot;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use app::{load_app_dir, AppDefinition, AppError, ObjectDef, ObjectKind, Rect, ScreenDef, TransitionAction};
pub use query::{run_query, GraphQuery, Predicate, QueryFailed};
pub use snapshot::{Edge, GuiNode, Relation, UiSnapshot, ROOT_ID};

use crate::entities::EntityMatch;

/// Name of the synthesized launcher.
pub const HOME_APP: &str = "Home";
pub const HOME_SCREEN: &str = "home";

/// Screen geometry constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryConfig {
    pub width: i32,
    pub height: i32,
    pub near_label_px: i32,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            width: 1080,
            height: 1920,
            near_label_px: 300,
        }
    }
}

/// A user-level GUI action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Action {
    Click { object: String },
    LongClickSelect { object: String },
    SetText { object: String, text: String },
    LaunchApp { app: String },
    GoHome,
}

impl Action {
    pub fn click(object: &str) -> Self {
        Action::Click { object: object.into() }
    }

    pub fn long_click(object: &str) -> Self {
        Action::LongClickSelect { object: object.into() }
    }

    pub fn launch(app: &str) -> Self {
        Action::LaunchApp { app: app.into() }
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            Action::Click { object } | Action::LongClickSelect { object } | Action::SetText { object, .. } => {
                Some(object)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Click { object } => write!(f, "click({object})"),
            Action::LongClickSelect { object } => write!(f, "longClickSelect({object})"),
            Action::SetText { object, text } => write!(f, "setText({object}, {text:?})"),
            Action::LaunchApp { app } => write!(f, "launchApp({app})"),
            Action::GoHome => f.write_str("goHome()"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse action {0:?}")]
pub struct BadAction(pub String);

impl FromStr for Action {
    type Err = BadAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadAction(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?.trim();
        let name = s[..open].trim();
        let ident = |x: &str| -> Result<String, BadAction> {
            if x.is_empty() {
                Err(bad())
            } else {
                Ok(x.to_string())
            }
        };
        match name {
            "click" => Ok(Action::Click { object: ident(inner)? }),
            "longClickSelect" => Ok(Action::LongClickSelect { object: ident(inner)? }),
            "launchApp" => Ok(Action::LaunchApp { app: ident(inner)? }),
            "goHome" if inner.is_empty() => Ok(Action::GoHome),
            "setText" => {
                let (object, text) = inner.split_once(',').ok_or_else(bad)?;
                let text = text.trim();
                let text = text
                    .strip_prefix('"')
                    .and_then(|t| t.strip_suffix('"'))
                    .unwrap_or(text)
                    .replace("\\\"", "\"");
                Ok(Action::SetText {
                    object: ident(object.trim())?,
                    text,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Parses `a; b; c` into actions.
pub fn parse_action_list(s: &str) -> Result<Vec<Action>, BadAction> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("no object {object:?} on {app}/{screen}")]
    NoSuchObject { app: String, screen: String, object: String },
    #[error("object {0:?} is not clickable")]
    NotClickable(String),
    #[error("object {0:?} cannot be long-click selected")]
    NotLongClickable(String),
    #[error("object {0:?} is invisible and cannot be acted on")]
    InvisibleObject(String),
    #[error("object {0:?} is not a text input")]
    NotEditable(String),
    #[error("unknown app {0:?}")]
    UnknownApp(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "at", rename_all = "camelCase")]
pub enum Location {
    Home,
    App { app: String, screen: String },
}

/// What an action did.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ActionResult {
    pub app: String,
    pub screen: String,
    pub transitioned: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<Selection>,
}

/// The object picked by a long-click selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub node: GuiNode,
    pub entities: Vec<EntityMatch>,
}

/// The whole simulated device state.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    apps: Arc<BTreeMap<String, AppDefinition>>,
    env: BTreeMap<String, String>,
    location: Location,
    inputs: BTreeMap<(String, String, String), String>,
    recording: bool,
    geometry: GeometryConfig,
}

fn substitute(text: &str, env: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let key = after[..end].trim();
                out.push_str(env.get(key).map_or("", String::as_str));
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Id of the launcher button for an app.
pub fn launcher_id(app: &str) -> String {
    let slug: String = app
        .chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    format!("launch_{slug}")
}

impl World {
    pub fn new(apps: BTreeMap<String, AppDefinition>) -> Self {
        Self::with_shared(Arc::new(apps))
    }

    pub fn with_shared(apps: Arc<BTreeMap<String, AppDefinition>>) -> Self {
        World {
            apps,
            env: BTreeMap::new(),
            location: Location::Home,
            inputs: BTreeMap::new(),
            recording: false,
            geometry: GeometryConfig::default(),
        }
    }

    pub fn apps(&self) -> &BTreeMap<String, AppDefinition> {
        &self.apps
    }

    pub fn shared_apps(&self) -> Arc<BTreeMap<String, AppDefinition>> {
        Arc::clone(&self.apps)
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geometry
    }

    pub fn env(&self) -> &BTreeMap<String, String> {
        &self.env
    }

    pub fn set_env(&mut self, key: &str, value: &str) {
        self.env.insert(key.to_string(), value.to_string());
    }

    pub fn location(&self) -> &Location {
        &self.location
    }

    /// `(app, screen)` of the foreground screen, home included.
    pub fn current(&self) -> (&str, &str) {
        match &self.location {
            Location::Home => (HOME_APP, HOME_SCREEN),
            Location::App { app, screen } => (app, screen),
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub(crate) fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    pub fn go_home(&mut self) {
        self.location = Location::Home;
    }

    fn home_screen(&self) -> ScreenDef {
        let objects = self
            .apps
            .keys()
            .enumerate()
            .map(|(i, name)| {
                let (col, row) = ((i % 4) as i32, (i / 4) as i32);
                ObjectDef {
                    id: launcher_id(name),
                    kind: ObjectKind::Button,
                    text: name.clone(),
                    bounds: Rect::new(col * 270 + 20, 200 + row * 300, col * 270 + 250, 400 + row * 300),
                    clickable: true,
                    long_clickable: false,
                    invisible: false,
                }
            })
            .collect();
        ScreenDef {
            id: HOME_SCREEN.to_string(),
            objects,
            transitions: Vec::new(),
        }
    }

    fn current_screen(&self) -> ScreenDef {
        match &self.location {
            Location::Home => self.home_screen(),
            Location::App { app, screen } => self
                .apps
                .get(app)
                .and_then(|a| a.screen(screen))
                .cloned()
                .expect("location always names a loaded screen"),
        }
    }

    /// Graph of the foreground screen. Side-effect free.
    pub fn snapshot(&self) -> UiSnapshot {
        let (app, screen_id) = self.current();
        let screen = self.current_screen();
        let nodes = screen
            .objects
            .iter()
            .map(|o| {
                let key = (app.to_string(), screen_id.to_string(), o.id.clone());
                let raw = self.inputs.get(&key).unwrap_or(&o.text);
                GuiNode {
                    id: o.id.clone(),
                    kind: o.kind,
                    text: substitute(raw, &self.env),
                    bounds: o.bounds,
                    clickable: o.clickable,
                    long_clickable: o.long_clickable,
                    invisible: o.invisible,
                }
            })
            .collect();
        UiSnapshot::build(app, screen_id, nodes, &self.geometry)
    }

    fn launch(&mut self, app: &str) -> Result<(), WorldError> {
        let def = self.apps.get(app).ok_or_else(|| WorldError::UnknownApp(app.to_string()))?;
        self.location = Location::App {
            app: def.app_name.clone(),
            screen: def.initial_screen.clone(),
        };
        Ok(())
    }

    /// Executes one action. This is the only way the world changes, apart from
    /// environment variables and [`World::go_home`].
    pub fn perform(&mut self, action: &Action) -> Result<ActionResult, WorldError> {
        let mut transitioned = false;
        let mut selected = None;
        match action {
            Action::GoHome => {
                transitioned = self.location != Location::Home;
                self.location = Location::Home;
            }
            Action::LaunchApp { app } => {
                self.launch(app)?;
                transitioned = true;
            }
            Action::Click { object } | Action::LongClickSelect { object } | Action::SetText { object, .. } => {
                let screen = self.current_screen();
                let (app, screen_id) = self.current();
                let (app, screen_id) = (app.to_string(), screen_id.to_string());
                let def = screen.object(object).ok_or_else(|| WorldError::NoSuchObject {
                    app: app.clone(),
                    screen: screen_id.clone(),
                    object: object.clone(),
                })?;
                if def.invisible {
                    return Err(WorldError::InvisibleObject(object.clone()));
                }
                match action {
                    Action::Click { .. } => {
                        if !def.clickable {
                            return Err(WorldError::NotClickable(object.clone()));
                        }
                        if self.location == Location::Home {
                            let name = def.text.clone();
                            self.launch(&name)?;
                            transitioned = true;
                        } else if let Some(to) = screen.transition(object, TransitionAction::Click) {
                            self.location = Location::App {
                                app,
                                screen: to.to_string(),
                            };
                            transitioned = true;
                        }
                    }
                    Action::LongClickSelect { .. } => {
                        if !def.long_clickable && def.kind != ObjectKind::TextView {
                            return Err(WorldError::NotLongClickable(object.clone()));
                        }
                        let snap = self.snapshot();
                        let node = snap.node(object).cloned().expect("object exists on this screen");
                        selected = Some(Selection {
                            entities: snap.entities_of(object).to_vec(),
                            node,
                        });
                    }
                    Action::SetText { text, .. } => {
                        if def.kind != ObjectKind::Input {
                            return Err(WorldError::NotEditable(object.clone()));
                        }
                        self.inputs.insert((app, screen_id, object.clone()), text.clone());
                    }
                    _ => unreachable!("outer match covers object actions only"),
                }
            }
        }
        let (app, screen) = self.current();
        Ok(ActionResult {
            app: app.to_string(),
            screen: screen.to_string(),
            transitioned,
            selected,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_text_round_trips() {
        for a in [
            Action::click("order"),
            Action::long_click("current_temp"),
            Action::SetText {
                object: "q".into(),
                text: "pizza, large".into(),
            },
            Action::launch("Spending Tracker"),
            Action::GoHome,
        ] {
            assert_eq!(a.to_string().parse::<Action>().unwrap(), a);
        }
        assert!("jump(x)".parse::<Action>().is_err());
        assert_eq!(
            parse_action_list("launchApp(Maps); click(directions)").unwrap().len(),
            2
        );
    }

    #[test]
    fn placeholders_substitute_missing_as_empty() {
        let mut env = BTreeMap::new();
        env.insert("a.b".to_string(), "90".to_string());
        assert_eq!(substitute("{{a.b}}°F / {{ c }}", &env), "90°F / ");
        assert_eq!(substitute("{{open", &env), "{{open");
    }
}
