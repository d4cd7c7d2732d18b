use std::collections::BTreeSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::{check_bool_expr, BoolConceptEntry, KbError, KnowledgeBase, ProcedureEntry, ScriptEntry, ValueConceptEntry};

pub const KB_FORMAT_VERSION: u64 = 1;

const SECTIONS: [&str; 4] = ["procedures", "booleanConcepts", "valueConcepts", "scripts"];

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FileOut<'a> {
    version: u64,
    procedures: Vec<&'a ProcedureEntry>,
    boolean_concepts: Vec<&'a BoolConceptEntry>,
    value_concepts: Vec<&'a ValueConceptEntry>,
    scripts: Vec<&'a ScriptEntry>,
}

fn corrupt(section: Option<&str>, index: Option<usize>, message: impl Into<String>) -> KbError {
    KbError::CorruptStore {
        section: section.map(str::to_string),
        index,
        message: message.into(),
    }
}

fn records<T: DeserializeOwned>(root: &serde_json::Map<String, Value>, section: &str) -> Result<Vec<T>, KbError> {
    let Some(value) = root.get(section) else {
        return Ok(Vec::new());
    };
    let Value::Array(items) = value else {
        return Err(corrupt(Some(section), None, "section must be an array"));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, item)| T::deserialize(item).map_err(|e| corrupt(Some(section), Some(i), e.to_string())))
        .collect()
}

fn unique_names<'a>(section: &str, names: impl Iterator<Item = &'a str>) -> Result<(), KbError> {
    let mut seen = BTreeSet::new();
    for (i, n) in names.enumerate() {
        if n.is_empty() {
            return Err(corrupt(Some(section), Some(i), "empty name"));
        }
        if !seen.insert(n) {
            return Err(corrupt(Some(section), Some(i), format!("duplicate name {n:?}")));
        }
    }
    Ok(())
}

fn unique_contexts<'a>(section: &str, index: usize, contexts: impl Iterator<Item = &'a str>) -> Result<(), KbError> {
    let mut seen = BTreeSet::new();
    let mut any = false;
    for c in contexts {
        any = true;
        if !seen.insert(c) {
            return Err(corrupt(Some(section), Some(index), format!("duplicate context {c:?}")));
        }
    }
    if !any {
        return Err(corrupt(Some(section), Some(index), "entry has no variants"));
    }
    Ok(())
}

impl KnowledgeBase {
    /// Canonical JSON form: entries sorted by name, so equal KBs give identical bytes.
    pub fn to_canonical_json(&self) -> String {
        let out = FileOut {
            version: KB_FORMAT_VERSION,
            procedures: self.procedures.values().collect(),
            boolean_concepts: self.bool_concepts.values().collect(),
            value_concepts: self.value_concepts.values().collect(),
            scripts: self.scripts.values().collect(),
        };
        let mut s = serde_json::to_string_pretty(&out).expect("KB values always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, KbError> {
        let root: Value = serde_json::from_str(text).map_err(|e| corrupt(None, None, format!("line {}: {e}", e.line())))?;
        let Value::Object(root) = root else {
            return Err(corrupt(None, None, "top level must be an object"));
        };
        for key in root.keys() {
            if key != "version" && !SECTIONS.contains(&key.as_str()) {
                return Err(corrupt(None, None, format!("unknown field {key:?}")));
            }
        }
        match root.get("version").and_then(Value::as_u64) {
            Some(KB_FORMAT_VERSION) => {}
            Some(v) => return Err(corrupt(None, None, format!("unsupported format version {v}"))),
            None => return Err(corrupt(None, None, "missing format version")),
        }
        let procedures: Vec<ProcedureEntry> = records(&root, "procedures")?;
        let bools: Vec<BoolConceptEntry> = records(&root, "booleanConcepts")?;
        let values: Vec<ValueConceptEntry> = records(&root, "valueConcepts")?;
        let scripts: Vec<ScriptEntry> = records(&root, "scripts")?;

        unique_names("procedures", procedures.iter().map(|p| p.name.as_str()))?;
        unique_names("booleanConcepts", bools.iter().map(|p| p.name.as_str()))?;
        unique_names("valueConcepts", values.iter().map(|p| p.name.as_str()))?;
        unique_names("scripts", scripts.iter().map(|p| p.name.as_str()))?;
        for (i, p) in procedures.iter().enumerate() {
            if p.triggers.is_empty() {
                return Err(corrupt(Some("procedures"), Some(i), "procedure has no trigger utterance"));
            }
        }
        for (i, b) in bools.iter().enumerate() {
            unique_contexts("booleanConcepts", i, b.variants.iter().map(|v| v.context.as_str()))?;
            for v in &b.variants {
                check_bool_expr(&b.name, &v.expr).map_err(|e| corrupt(Some("booleanConcepts"), Some(i), e.to_string()))?;
            }
        }
        for (i, v) in values.iter().enumerate() {
            unique_contexts("valueConcepts", i, v.variants.iter().map(|x| x.context.as_str()))?;
            if let Some(bad) = v.variants.iter().find(|x| x.source.dimension() != v.dimension) {
                return Err(corrupt(
                    Some("valueConcepts"),
                    Some(i),
                    format!("variant {:?} has dimension {}, entry has {}", bad.context, bad.source.dimension(), v.dimension),
                ));
            }
        }
        for (i, s) in scripts.iter().enumerate() {
            if !s.expr.typecheck().is_ok() || !s.expr.is_executable() {
                return Err(corrupt(Some("scripts"), Some(i), "script is not a well-typed, hole-free expression"));
            }
        }
        let mut kb = KnowledgeBase::new();
        kb.procedures = procedures.into_iter().map(|p| (p.name.clone(), p)).collect();
        kb.bool_concepts = bools.into_iter().map(|p| (p.name.clone(), p)).collect();
        kb.value_concepts = values.into_iter().map(|p| (p.name.clone(), p)).collect();
        kb.scripts = scripts.into_iter().map(|p| (p.name.clone(), p)).collect();
        Ok(kb)
    }

    /// Writes the canonical form to `path` (via a temporary file and rename).
    pub fn persist(&self, path: &Path) -> Result<(), KbError> {
        let io = |e: std::io::Error| KbError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_canonical_json()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path).map_err(|e| KbError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }
}
