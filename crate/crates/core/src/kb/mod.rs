//! Learned procedures, concepts and rules, with per-context concept variants.

mod persist;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use persist::KB_FORMAT_VERSION;

use crate::demo::{RecordedScript, ValueQuery};
use crate::dsl::{render, Dimension, Expr, ExprType, TypedValue};
use crate::text::normalize_phrase;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProcedureEntry {
    pub name: String,
    pub triggers: BTreeSet<String>,
    pub script: RecordedScript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BoolVariant {
    pub context: String,
    #[serde(with = "render::as_text")]
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BoolConceptEntry {
    pub name: String,
    pub triggers: BTreeSet<String>,
    /// Oldest first; the last one is the most recently stored.
    pub variants: Vec<BoolVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ValueSource {
    Query(ValueQuery),
    Constant(TypedValue),
}

impl ValueSource {
    pub fn dimension(&self) -> Dimension {
        match self {
            ValueSource::Query(q) => q.expected_dimension,
            ValueSource::Constant(v) => v.dimension(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ValueVariant {
    pub context: String,
    pub source: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ValueConceptEntry {
    pub name: String,
    pub triggers: BTreeSet<String>,
    pub dimension: Dimension,
    pub variants: Vec<ValueVariant>,
}

/// A taught top-level rule that can be run on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScriptEntry {
    pub name: String,
    pub utterance: String,
    pub context: String,
    #[serde(with = "render::as_text")]
    pub expr: Expr,
}

/// Reference returned by [`KnowledgeBase::lookup_by_utterance`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntryRef {
    Procedure(String),
    BoolConcept(String),
    ValueConcept(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("unknown entry {0:?}")]
    UnknownName(String),
    #[error("value concept {name:?} holds {existing} values, cannot add a {new} variant")]
    DimensionConflict {
        name: String,
        existing: Dimension,
        new: Dimension,
    },
    #[error("invalid entry {name:?}: {message}")]
    InvalidEntry { name: String, message: String },
    #[error("corrupt knowledge base{}{}: {message}", .section.as_ref().map(|s| format!(" in {s}")).unwrap_or_default(), .index.map(|i| format!(" at record {i}")).unwrap_or_default())]
    CorruptStore {
        section: Option<String>,
        index: Option<usize>,
        message: String,
    },
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
}

/// Outcome of a per-context lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved<'a, T> {
    pub variant: &'a T,
    /// Context under which `variant` was stored.
    pub context: &'a str,
    /// True when no variant exists for the requested context and the dialog should ask.
    pub reuse_decision_needed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    procedures: BTreeMap<String, ProcedureEntry>,
    bool_concepts: BTreeMap<String, BoolConceptEntry>,
    value_concepts: BTreeMap<String, ValueConceptEntry>,
    scripts: BTreeMap<String, ScriptEntry>,
}

fn normalized_triggers<'a>(name: &'a str, triggers: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
    std::iter::once(name)
        .chain(triggers.into_iter().map(String::as_str))
        .map(normalize_phrase)
        .filter(|t| !t.is_empty())
        .collect()
}

fn upsert<V>(variants: &mut Vec<V>, context_of: impl Fn(&V) -> &str, v: V) {
    let ctx = context_of(&v).to_string();
    variants.retain(|x| context_of(x) != ctx);
    variants.push(v);
}

fn check_bool_expr(name: &str, expr: &Expr) -> Result<(), KbError> {
    let invalid = |message: String| KbError::InvalidEntry {
        name: name.to_string(),
        message,
    };
    if expr.ty() != ExprType::Bool {
        return Err(invalid(format!("expression has type {}, expected Bool", expr.ty())));
    }
    if let Some(e) = expr.typecheck().errors.first() {
        return Err(invalid(e.message.clone()));
    }
    if !expr.is_executable() {
        return Err(invalid("expression still contains holes".into()));
    }
    Ok(())
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.procedures.is_empty() && self.bool_concepts.is_empty() && self.value_concepts.is_empty() && self.scripts.is_empty()
    }

    pub fn procedures(&self) -> impl Iterator<Item = &ProcedureEntry> {
        self.procedures.values()
    }

    pub fn bool_concepts(&self) -> impl Iterator<Item = &BoolConceptEntry> {
        self.bool_concepts.values()
    }

    pub fn value_concepts(&self) -> impl Iterator<Item = &ValueConceptEntry> {
        self.value_concepts.values()
    }

    pub fn scripts(&self) -> impl Iterator<Item = &ScriptEntry> {
        self.scripts.values()
    }

    pub fn procedure(&self, name: &str) -> Option<&ProcedureEntry> {
        self.procedures.get(name)
    }

    pub fn bool_concept(&self, name: &str) -> Option<&BoolConceptEntry> {
        self.bool_concepts.get(name)
    }

    pub fn value_concept(&self, name: &str) -> Option<&ValueConceptEntry> {
        self.value_concepts.get(name)
    }

    pub fn script(&self, name: &str) -> Option<&ScriptEntry> {
        self.scripts.get(name)
    }

    /// Upserts a procedure; triggers accumulate and the script is replaced.
    pub fn store_procedure(&mut self, script: RecordedScript, triggers: &[String]) -> Result<(), KbError> {
        let name = script.name.clone();
        if name.is_empty() {
            return Err(KbError::InvalidEntry {
                name,
                message: "empty procedure name".into(),
            });
        }
        let mut new_triggers = normalized_triggers(&script.goal, triggers);
        if let Some(old) = self.procedures.get(&name) {
            new_triggers.extend(old.triggers.iter().cloned());
        }
        self.procedures.insert(
            name.clone(),
            ProcedureEntry {
                name,
                triggers: new_triggers,
                script,
            },
        );
        Ok(())
    }

    /// Upserts a Boolean concept variant for `context`.
    pub fn store_bool(&mut self, name: &str, triggers: &[String], context: &str, expr: Expr) -> Result<(), KbError> {
        check_bool_expr(name, &expr)?;
        let entry = self.bool_concepts.entry(name.to_string()).or_insert_with(|| BoolConceptEntry {
            name: name.to_string(),
            triggers: BTreeSet::new(),
            variants: Vec::new(),
        });
        entry.triggers.extend(normalized_triggers(name, triggers));
        upsert(&mut entry.variants, |v| &v.context, BoolVariant {
            context: context.to_string(),
            expr,
        });
        Ok(())
    }

    /// Upserts a value concept variant for `context`. All variants share one dimension.
    pub fn store_value(&mut self, name: &str, triggers: &[String], context: &str, source: ValueSource) -> Result<(), KbError> {
        let dimension = source.dimension();
        if let Some(existing) = self.value_concepts.get(name) {
            if existing.dimension != dimension {
                return Err(KbError::DimensionConflict {
                    name: name.to_string(),
                    existing: existing.dimension,
                    new: dimension,
                });
            }
        }
        let entry = self.value_concepts.entry(name.to_string()).or_insert_with(|| ValueConceptEntry {
            name: name.to_string(),
            triggers: BTreeSet::new(),
            dimension,
            variants: Vec::new(),
        });
        entry.triggers.extend(normalized_triggers(name, triggers));
        upsert(&mut entry.variants, |v| &v.context, ValueVariant {
            context: context.to_string(),
            source,
        });
        Ok(())
    }

    pub fn store_script(&mut self, entry: ScriptEntry) -> Result<(), KbError> {
        let invalid = |message: String| KbError::InvalidEntry {
            name: entry.name.clone(),
            message,
        };
        if entry.name.is_empty() {
            return Err(invalid("empty script name".into()));
        }
        if let Some(e) = entry.expr.typecheck().errors.first() {
            return Err(invalid(e.message.clone()));
        }
        if !entry.expr.is_executable() {
            return Err(invalid("script still contains holes".into()));
        }
        self.scripts.insert(entry.name.clone(), entry);
        Ok(())
    }

    pub fn resolve_bool_in_context(&self, name: &str, context: &str) -> Result<Resolved<'_, BoolVariant>, KbError> {
        let entry = self.bool_concepts.get(name).ok_or_else(|| KbError::UnknownName(name.to_string()))?;
        resolve(&entry.variants, |v| &v.context, context).ok_or_else(|| KbError::UnknownName(name.to_string()))
    }

    pub fn resolve_value_in_context(&self, name: &str, context: &str) -> Result<Resolved<'_, ValueVariant>, KbError> {
        let entry = self.value_concepts.get(name).ok_or_else(|| KbError::UnknownName(name.to_string()))?;
        resolve(&entry.variants, |v| &v.context, context).ok_or_else(|| KbError::UnknownName(name.to_string()))
    }

    /// Entries with a trigger phrase contained in `phrase`, longest trigger first.
    pub fn lookup_by_utterance(&self, phrase: &str) -> Vec<EntryRef> {
        let words = crate::text::phrase_words(phrase);
        let mut hits: Vec<(usize, EntryRef)> = Vec::new();
        let mut consider = |triggers: &BTreeSet<String>, r: EntryRef| {
            let best = triggers
                .iter()
                .map(|t| crate::text::phrase_words(t))
                .filter(|t| crate::text::find_subsequence(&words, t).is_some())
                .map(|t| t.len())
                .max();
            if let Some(len) = best {
                hits.push((len, r));
            }
        };
        for e in self.procedures.values() {
            consider(&e.triggers, EntryRef::Procedure(e.name.clone()));
        }
        for e in self.bool_concepts.values() {
            consider(&e.triggers, EntryRef::BoolConcept(e.name.clone()));
        }
        for e in self.value_concepts.values() {
            consider(&e.triggers, EntryRef::ValueConcept(e.name.clone()));
        }
        hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        hits.into_iter().map(|(_, r)| r).collect()
    }
}

fn resolve<'a, V>(variants: &'a [V], context_of: impl Fn(&V) -> &str, context: &str) -> Option<Resolved<'a, V>> {
    if let Some(v) = variants.iter().find(|v| context_of(v) == context) {
        return Some(Resolved {
            variant: v,
            context: context_of(v),
            reuse_decision_needed: false,
        });
    }
    variants.last().map(|v| Resolved {
        variant: v,
        context: context_of(v),
        reuse_decision_needed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::CmpOp;

    fn above(name: &str, f: f64) -> Expr {
        Expr::Compare {
            lhs: Box::new(Expr::ValueConcept(name.into())),
            op: CmpOp::Gt,
            rhs: Box::new(Expr::Const(TypedValue::fahrenheit(f).unwrap())),
        }
    }

    #[test]
    fn upsert_appends_new_contexts() {
        let mut kb = KnowledgeBase::new();
        kb.store_bool("hot", &["it's hot".into()], "order a cup of Iced Cappuccino", above("temperature", 85.0))
            .unwrap();
        kb.store_bool("hot", &[], "start the cook timer", above("oven temperature", 400.0)).unwrap();
        assert_eq!(kb.bool_concept("hot").unwrap().variants.len(), 2);
        assert_eq!(kb.lookup_by_utterance("hot"), [EntryRef::BoolConcept("hot".into())]);
    }

    #[test]
    fn resolve_prefers_exact_context_then_latest() {
        let mut kb = KnowledgeBase::new();
        kb.store_bool("hot", &[], "a", above("t", 85.0)).unwrap();
        kb.store_bool("hot", &[], "b", above("t", 400.0)).unwrap();
        let r = kb.resolve_bool_in_context("hot", "a").unwrap();
        assert_eq!((r.context, r.reuse_decision_needed), ("a", false));
        let r = kb.resolve_bool_in_context("hot", "c").unwrap();
        assert_eq!((r.context, r.reuse_decision_needed), ("b", true));
        assert!(matches!(kb.resolve_bool_in_context("cold", "a"), Err(KbError::UnknownName(_))));
    }

    #[test]
    fn value_dimensions_must_agree() {
        let mut kb = KnowledgeBase::new();
        kb.store_value("commute", &[], "a", ValueSource::Constant(TypedValue::minutes(20.0).unwrap()))
            .unwrap();
        let err = kb
            .store_value("commute", &[], "b", ValueSource::Constant(TypedValue::usd(5.0).unwrap()))
            .unwrap_err();
        assert!(matches!(err, KbError::DimensionConflict { .. }));
    }

    #[test]
    fn holes_are_rejected() {
        let mut kb = KnowledgeBase::new();
        assert!(kb.store_bool("hot", &[], "a", Expr::ResolveBool("x".into())).is_err());
    }

    #[test]
    fn lookup_orders_longest_trigger_first() {
        let mut kb = KnowledgeBase::new();
        kb.store_bool("heavy traffic", &["the traffic is heavy".into()], "a", above("t", 1.0)).unwrap();
        kb.store_bool("heavy", &[], "a", above("t", 1.0)).unwrap();
        let hits = kb.lookup_by_utterance("if the traffic is heavy");
        assert_eq!(hits[0], EntryRef::BoolConcept("heavy traffic".into()));
        assert_eq!(hits[1], EntryRef::BoolConcept("heavy".into()));
    }
}
