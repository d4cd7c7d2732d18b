use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::app::ObjectKind;
use super::snapshot::{GuiNode, UiSnapshot};
use crate::dsl::Dimension;

/// One condition on a GUI object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Predicate {
    HasEntityDimension(Dimension),
    TextEquals(String),
    NearLabel(String),
    KindIs(ObjectKind),
    ObjectIdIs(String),
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::HasEntityDimension(d) => write!(f, "hasEntityDimension({d})"),
            Predicate::TextEquals(t) => write!(f, "textEquals({t:?})"),
            Predicate::NearLabel(t) => write!(f, "nearLabel({t:?})"),
            Predicate::KindIs(k) => write!(f, "kindIs({k})"),
            Predicate::ObjectIdIs(id) => write!(f, "objectIdIs({id:?})"),
        }
    }
}

/// Conjunction of predicates over the nodes of a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GraphQuery(pub Vec<Predicate>);

impl fmt::Display for GraphQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" ∧ "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no object on {app}/{screen} matches {query}")]
pub struct QueryFailed {
    pub app: String,
    pub screen: String,
    pub query: String,
}

fn same_text(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

impl Predicate {
    pub fn matches(&self, node: &GuiNode, snap: &UiSnapshot) -> bool {
        match self {
            Predicate::HasEntityDimension(d) => snap.entities_of(&node.id).iter().any(|m| m.value.dimension() == *d),
            Predicate::TextEquals(t) => node.text.trim() == t.trim(),
            Predicate::NearLabel(t) => snap.labels_near(&node.id).iter().any(|l| same_text(&l.text, t)),
            Predicate::KindIs(k) => node.kind == *k,
            Predicate::ObjectIdIs(id) => node.id == *id,
        }
    }
}

impl GraphQuery {
    /// The matching node; several matches resolve to the topmost, then leftmost.
    pub fn run<'a>(&self, snap: &'a UiSnapshot) -> Result<&'a GuiNode, QueryFailed> {
        snap.nodes
            .iter()
            .filter(|n| self.0.iter().all(|p| p.matches(n, snap)))
            .min_by(|a, b| {
                (a.bounds.top, a.bounds.left, &a.id).cmp(&(b.bounds.top, b.bounds.left, &b.id))
            })
            .ok_or_else(|| QueryFailed {
                app: snap.app.clone(),
                screen: snap.screen.clone(),
                query: self.to_string(),
            })
    }
}

/// Free-function form of [`GraphQuery::run`].
pub fn run_query<'a>(query: &GraphQuery, snap: &'a UiSnapshot) -> Result<&'a GuiNode, QueryFailed> {
    query.run(snap)
}
