use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GeometryConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ObjectKind {
    TextView,
    Button,
    Input,
    Image,
    ListItem,
}

impl ObjectKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::TextView => "textView",
            ObjectKind::Button => "button",
            ObjectKind::Input => "input",
            ObjectKind::Image => "image",
            ObjectKind::ListItem => "listItem",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Screen rectangle `(left, top, right, bottom)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct Rect {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl From<[i32; 4]> for Rect {
    fn from(b: [i32; 4]) -> Self {
        Rect {
            left: b[0],
            top: b[1],
            right: b[2],
            bottom: b[3],
        }
    }
}

impl From<Rect> for [i32; 4] {
    fn from(r: Rect) -> Self {
        [r.left, r.top, r.right, r.bottom]
    }
}

impl Rect {
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        Rect { left, top, right, bottom }
    }

    pub fn area(&self) -> i64 {
        i64::from(self.right - self.left) * i64::from(self.bottom - self.top)
    }

    pub fn contains(&self, other: &Rect) -> bool {
        self.left <= other.left && self.top <= other.top && self.right >= other.right && self.bottom >= other.bottom
    }

    /// Center in doubled coordinates, so it stays integral.
    pub fn center2(&self) -> (i64, i64) {
        (
            i64::from(self.left) + i64::from(self.right),
            i64::from(self.top) + i64::from(self.bottom),
        )
    }

    pub fn center_distance(&self, other: &Rect) -> f64 {
        let (ax, ay) = self.center2();
        let (bx, by) = other.center2();
        (((ax - bx).pow(2) + (ay - by).pow(2)) as f64).sqrt() / 2.0
    }

    pub fn vertical_overlap(&self, other: &Rect) -> bool {
        self.top < other.bottom && other.top < self.bottom
    }

    pub fn horizontal_overlap(&self, other: &Rect) -> bool {
        self.left < other.right && other.left < self.right
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ObjectDef {
    pub id: String,
    pub kind: ObjectKind,
    #[serde(default)]
    pub text: String,
    pub bounds: Rect,
    #[serde(default)]
    pub clickable: bool,
    #[serde(default)]
    pub long_clickable: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub invisible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TransitionAction {
    Click,
    LongClickSelect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TransitionDef {
    pub object: String,
    pub action: TransitionAction,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScreenDef {
    pub id: String,
    pub objects: Vec<ObjectDef>,
    #[serde(default)]
    pub transitions: Vec<TransitionDef>,
}

impl ScreenDef {
    pub fn object(&self, id: &str) -> Option<&ObjectDef> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn transition(&self, object: &str, action: TransitionAction) -> Option<&str> {
        self.transitions
            .iter()
            .find(|t| t.object == object && t.action == action)
            .map(|t| t.to.as_str())
    }
}

/// A simulated app: a set of screens connected by transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AppDefinition {
    pub app_name: String,
    pub initial_screen: String,
    pub screens: Vec<ScreenDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AppError {
    #[error("malformed app definition{}{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default(), .field.as_ref().map(|f| format!(" ({f})")).unwrap_or_default())]
    MalformedDefinition {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn malformed(field: impl Into<String>, message: impl Into<String>) -> AppError {
    AppError::MalformedDefinition {
        line: None,
        field: Some(field.into()),
        message: message.into(),
    }
}

impl AppDefinition {
    pub fn screen(&self, id: &str) -> Option<&ScreenDef> {
        self.screens.iter().find(|s| s.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self, AppError> {
        if text.trim().is_empty() {
            return Err(AppError::MalformedDefinition {
                line: Some(1),
                field: None,
                message: "empty definition".into(),
            });
        }
        let app: AppDefinition = serde_json::from_str(text).map_err(|e| AppError::MalformedDefinition {
            line: Some(e.line()),
            field: None,
            message: e.to_string(),
        })?;
        app.validate(&GeometryConfig::default())?;
        Ok(app)
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self, geometry: &GeometryConfig) -> Result<(), AppError> {
        if self.app_name.trim().is_empty() {
            return Err(malformed("appName", "must not be empty"));
        }
        if self.app_name.eq_ignore_ascii_case(super::HOME_APP) {
            return Err(malformed("appName", "\"Home\" is reserved"));
        }
        let mut screen_ids = BTreeSet::new();
        for s in &self.screens {
            if !screen_ids.insert(s.id.as_str()) {
                return Err(malformed("screens.id", format!("duplicate screen {:?}", s.id)));
            }
        }
        if !screen_ids.contains(self.initial_screen.as_str()) {
            return Err(malformed(
                "initialScreen",
                format!("screen {:?} does not exist", self.initial_screen),
            ));
        }
        for s in &self.screens {
            let mut ids = BTreeSet::new();
            for o in &s.objects {
                let field = format!("screens[{}].objects[{}]", s.id, o.id);
                if o.id.is_empty() || o.id.starts_with("__") {
                    return Err(malformed(field, "object id must be non-empty and not start with \"__\""));
                }
                if !ids.insert(o.id.as_str()) {
                    return Err(malformed(field, "duplicate object id"));
                }
                let b = o.bounds;
                if b.left >= b.right || b.top >= b.bottom {
                    return Err(malformed(field + ".bounds", "degenerate rectangle"));
                }
                if b.left < 0 || b.top < 0 || b.right > geometry.width || b.bottom > geometry.height {
                    return Err(malformed(field + ".bounds", "outside the virtual screen"));
                }
            }
            for t in &s.transitions {
                let field = format!("screens[{}].transitions[{}]", s.id, t.object);
                if !ids.contains(t.object.as_str()) {
                    return Err(malformed(field, "transition source object does not exist"));
                }
                if !screen_ids.contains(t.to.as_str()) {
                    return Err(malformed(field, format!("target screen {:?} does not exist", t.to)));
                }
            }
        }
        Ok(())
    }
}

/// Loads every `*.json` app definition in a directory, keyed by app name.
pub fn load_app_dir(dir: &Path) -> Result<BTreeMap<String, AppDefinition>, AppError> {
    let entries = std::fs::read_dir(dir).map_err(|e| AppError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut apps = BTreeMap::new();
    for p in paths {
        let app = AppDefinition::load(&p).map_err(|e| match e {
            AppError::MalformedDefinition { line, field, message } => AppError::MalformedDefinition {
                line,
                field,
                message: format!("{}: {message}", p.display()),
            },
            other => other,
        })?;
        if apps.contains_key(&app.app_name) {
            return Err(malformed("appName", format!("duplicate app {:?}", app.app_name)));
        }
        apps.insert(app.app_name.clone(), app);
    }
    Ok(apps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"{
        "appName": "Mini",
        "initialScreen": "a",
        "screens": [
            {"id": "a", "objects": [
                {"id": "go", "kind": "button", "text": "Go", "bounds": [0, 0, 100, 100], "clickable": true}
            ], "transitions": [{"object": "go", "action": "click", "to": "b"}]},
            {"id": "b", "objects": []}
        ]
    }"#;

    #[test]
    fn loads_valid_definition() {
        let app = AppDefinition::from_json(MINI).unwrap();
        assert_eq!(app.screen("a").unwrap().transition("go", TransitionAction::Click), Some("b"));
    }

    #[test]
    fn rejects_missing_target_screen() {
        let bad = MINI.replace(r#""to": "b""#, r#""to": "zzz""#);
        assert!(matches!(AppDefinition::from_json(&bad), Err(AppError::MalformedDefinition { .. })));
    }

    #[test]
    fn rejects_empty_and_unknown_fields() {
        assert!(AppDefinition::from_json("").is_err());
        let extra = MINI.replace(r#""initialScreen""#, r#""color": "red", "initialScreen""#);
        let err = AppDefinition::from_json(&extra).unwrap_err();
        assert!(matches!(err, AppError::MalformedDefinition { line: Some(_), .. }));
    }

    #[test]
    fn rejects_degenerate_bounds() {
        let bad = MINI.replace("[0, 0, 100, 100]", "[10, 0, 10, 100]");
        assert!(AppDefinition::from_json(&bad).is_err());
    }
}
