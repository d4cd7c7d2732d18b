use std::collections::BTreeMap;

use serde::Serialize;

use super::app::{ObjectKind, Rect};
use super::GeometryConfig;
use crate::entities::{extract_entities, EntityMatch};

/// Id of the synthetic node that roots the containment forest.
pub const ROOT_ID: &str = "__root__";

/// One GUI object as it appears on screen, placeholders already substituted.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GuiNode {
    pub id: String,
    pub kind: ObjectKind,
    pub text: String,
    pub bounds: Rect,
    pub clickable: bool,
    pub long_clickable: bool,
    pub invisible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    Contains,
    RightOf,
    Below,
    NearLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: String,
    pub relation: Relation,
    pub to: String,
}

/// Graph view of a single screen.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UiSnapshot {
    pub app: String,
    pub screen: String,
    pub nodes: Vec<GuiNode>,
    pub edges: Vec<Edge>,
    pub entities: BTreeMap<String, Vec<EntityMatch>>,
    #[serde(skip)]
    near_label_px: i32,
}

impl UiSnapshot {
    pub(crate) fn build(app: &str, screen: &str, nodes: Vec<GuiNode>, geometry: &GeometryConfig) -> Self {
        let entities: BTreeMap<String, Vec<EntityMatch>> = nodes
            .iter()
            .map(|n| (n.id.clone(), extract_entities(&n.text)))
            .filter(|(_, m)| !m.is_empty())
            .collect();
        let mut edges = Vec::new();
        for child in &nodes {
            let parent = nodes
                .iter()
                .filter(|p| p.id != child.id && p.bounds.contains(&child.bounds))
                .filter(|p| p.bounds != child.bounds || p.id < child.id)
                .min_by(|a, b| a.bounds.area().cmp(&b.bounds.area()).then(b.id.cmp(&a.id)));
            edges.push(Edge {
                from: parent.map_or(ROOT_ID.to_string(), |p| p.id.clone()),
                relation: Relation::Contains,
                to: child.id.clone(),
            });
        }
        let is_label = |n: &GuiNode| n.kind == ObjectKind::TextView && !n.text.trim().is_empty() && !entities.contains_key(&n.id);
        for a in &nodes {
            for b in &nodes {
                if a.id == b.id {
                    continue;
                }
                if a.bounds.left >= b.bounds.right && a.bounds.vertical_overlap(&b.bounds) {
                    edges.push(Edge {
                        from: a.id.clone(),
                        relation: Relation::RightOf,
                        to: b.id.clone(),
                    });
                }
                if a.bounds.top >= b.bounds.bottom && a.bounds.horizontal_overlap(&b.bounds) {
                    edges.push(Edge {
                        from: a.id.clone(),
                        relation: Relation::Below,
                        to: b.id.clone(),
                    });
                }
                if is_label(b) && a.bounds.center_distance(&b.bounds) <= f64::from(geometry.near_label_px) {
                    edges.push(Edge {
                        from: a.id.clone(),
                        relation: Relation::NearLabel,
                        to: b.id.clone(),
                    });
                }
            }
        }
        UiSnapshot {
            app: app.to_string(),
            screen: screen.to_string(),
            nodes,
            edges,
            entities,
            near_label_px: geometry.near_label_px,
        }
    }

    pub fn node(&self, id: &str) -> Option<&GuiNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn entities_of(&self, id: &str) -> &[EntityMatch] {
        self.entities.get(id).map_or(&[], Vec::as_slice)
    }

    /// Containment parent, or [`ROOT_ID`].
    pub fn parent(&self, id: &str) -> Option<&str> {
        self.edges
            .iter()
            .find(|e| e.relation == Relation::Contains && e.to == id)
            .map(|e| e.from.as_str())
    }

    /// Objects sharing `id`'s containment parent, excluding `id` itself.
    pub fn siblings(&self, id: &str) -> Vec<&GuiNode> {
        let Some(parent) = self.parent(id) else {
            return Vec::new();
        };
        self.nodes
            .iter()
            .filter(|n| n.id != id && self.parent(&n.id) == Some(parent))
            .collect()
    }

    /// Labels linked from `id` by a nearLabel edge.
    pub fn labels_near(&self, id: &str) -> Vec<&GuiNode> {
        self.edges
            .iter()
            .filter(|e| e.relation == Relation::NearLabel && e.from == id)
            .filter_map(|e| self.node(&e.to))
            .collect()
    }

    /// Closest label by center distance; ties go to the label further left, then further up.
    pub fn nearest_label(&self, id: &str) -> Option<&GuiNode> {
        let me = self.node(id)?;
        self.labels_near(id).into_iter().min_by(|a, b| {
            let da = me.bounds.center_distance(&a.bounds);
            let db = me.bounds.center_distance(&b.bounds);
            da.total_cmp(&db)
                .then(a.bounds.center2().0.cmp(&b.bounds.center2().0))
                .then(a.bounds.center2().1.cmp(&b.bounds.center2().1))
                .then(a.id.cmp(&b.id))
        })
    }

    pub fn near_label_px(&self) -> i32 {
        self.near_label_px
    }

    pub fn has_edge(&self, from: &str, relation: Relation, to: &str) -> bool {
        self.edges
            .iter()
            .any(|e| e.from == from && e.relation == relation && e.to == to)
    }
}
