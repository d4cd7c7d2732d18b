use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::value::{CmpOp, TypedValue};

/// Syntax tree of a script.
///
/// `Resolve*` variants are typed holes: spans of the utterance the parser could not
/// ground. A script is executable iff it contains none.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Conditional {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Option<Box<Expr>>,
    },
    Compare {
        lhs: Box<Expr>,
        op: CmpOp,
        rhs: Box<Expr>,
    },
    BoolConcept(String),
    Const(TypedValue),
    ValueConcept(String),
    Call {
        procedure: String,
        args: BTreeMap<String, String>,
    },
    ResolveBool(String),
    ResolveValue(String),
    ResolveProcedure(String),
}

/// Static type of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExprType {
    Bool,
    Value,
    Proc,
    Script,
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExprType::Bool => "Bool",
            ExprType::Value => "Value",
            ExprType::Proc => "Proc",
            ExprType::Script => "Script",
        })
    }
}

/// Child position inside a parent node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Cond,
    Then,
    Else,
    Lhs,
    Rhs,
}

impl Slot {
    pub fn name(self) -> &'static str {
        match self {
            Slot::Cond => "cond",
            Slot::Then => "then",
            Slot::Else => "else",
            Slot::Lhs => "lhs",
            Slot::Rhs => "rhs",
        }
    }

    pub fn expected_type(self) -> ExprType {
        match self {
            Slot::Cond => ExprType::Bool,
            Slot::Then | Slot::Else => ExprType::Proc,
            Slot::Lhs | Slot::Rhs => ExprType::Value,
        }
    }
}

/// Address of a node, as the list of slots walked from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodePath(pub Vec<Slot>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, slot: Slot) -> Self {
        let mut v = self.0.clone();
        v.push(slot);
        NodePath(v)
    }

    /// `prefix` followed by this path.
    pub fn under(&self, prefix: &NodePath) -> Self {
        let mut v = prefix.0.clone();
        v.extend_from_slice(&self.0);
        NodePath(v)
    }

    pub fn starts_with(&self, prefix: &NodePath) -> bool {
        self.0.starts_with(&prefix.0)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<&str> = self.0.iter().map(|s| s.name()).collect();
        f.write_str(&parts.join("."))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid node path {0:?}")]
pub struct BadPath(pub String);

impl FromStr for NodePath {
    type Err = BadPath;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "root" || s.is_empty() {
            return Ok(NodePath::root());
        }
        s.split('.')
            .map(|p| match p {
                "cond" => Ok(Slot::Cond),
                "then" => Ok(Slot::Then),
                "else" => Ok(Slot::Else),
                "lhs" => Ok(Slot::Lhs),
                "rhs" => Ok(Slot::Rhs),
                _ => Err(BadPath(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NodePath)
    }
}

/// One failed slot check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub path: NodePath,
    pub expected: Option<ExprType>,
    pub actual: ExprType,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeReport {
    pub errors: Vec<TypeError>,
}

impl TypeReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// A hole as reported by [`Expr::holes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hole {
    pub path: NodePath,
    pub ty: ExprType,
    pub span: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstituteError {
    #[error("no hole at {0}")]
    PathNotAHole(NodePath),
    #[error("hole at {path} has type {expected}, replacement has type {actual}")]
    TypeMismatch {
        path: NodePath,
        expected: ExprType,
        actual: ExprType,
    },
}

impl Expr {
    pub fn ty(&self) -> ExprType {
        match self {
            Expr::Conditional { .. } => ExprType::Script,
            Expr::Compare { .. } | Expr::BoolConcept(_) | Expr::ResolveBool(_) => ExprType::Bool,
            Expr::Const(_) | Expr::ValueConcept(_) | Expr::ResolveValue(_) => ExprType::Value,
            Expr::Call { .. } | Expr::ResolveProcedure(_) => ExprType::Proc,
        }
    }

    pub fn hole_span(&self) -> Option<&str> {
        match self {
            Expr::ResolveBool(s) | Expr::ResolveValue(s) | Expr::ResolveProcedure(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_hole(&self) -> bool {
        self.hole_span().is_some()
    }

    /// Direct children with their slots, in left-to-right order.
    pub fn children(&self) -> Vec<(Slot, &Expr)> {
        match self {
            Expr::Conditional { cond, then, otherwise } => {
                let mut v = vec![(Slot::Cond, cond.as_ref()), (Slot::Then, then.as_ref())];
                if let Some(e) = otherwise {
                    v.push((Slot::Else, e.as_ref()));
                }
                v
            }
            Expr::Compare { lhs, rhs, .. } => vec![(Slot::Lhs, lhs.as_ref()), (Slot::Rhs, rhs.as_ref())],
            _ => Vec::new(),
        }
    }

    fn child_mut(&mut self, slot: Slot) -> Option<&mut Expr> {
        match (self, slot) {
            (Expr::Conditional { cond, .. }, Slot::Cond) => Some(cond),
            (Expr::Conditional { then, .. }, Slot::Then) => Some(then),
            (Expr::Conditional { otherwise, .. }, Slot::Else) => otherwise.as_deref_mut(),
            (Expr::Compare { lhs, .. }, Slot::Lhs) => Some(lhs),
            (Expr::Compare { rhs, .. }, Slot::Rhs) => Some(rhs),
            _ => None,
        }
    }

    pub fn get(&self, path: &NodePath) -> Option<&Expr> {
        let mut node = self;
        for slot in &path.0 {
            node = node.children().into_iter().find(|(s, _)| s == slot)?.1;
        }
        Some(node)
    }

    pub fn get_mut(&mut self, path: &NodePath) -> Option<&mut Expr> {
        let mut node = self;
        for slot in &path.0 {
            node = node.child_mut(*slot)?;
        }
        Some(node)
    }

    /// Pre-order walk yielding every node with its path.
    pub fn walk(&self) -> Vec<(NodePath, &Expr)> {
        fn go<'a>(e: &'a Expr, path: NodePath, out: &mut Vec<(NodePath, &'a Expr)>) {
            let children = e.children();
            out.push((path.clone(), e));
            for (slot, child) in children {
                go(child, path.child(slot), out);
            }
        }
        let mut out = Vec::new();
        go(self, NodePath::root(), &mut out);
        out
    }

    /// Holes in depth-first, left-to-right order.
    pub fn holes(&self) -> Vec<Hole> {
        self.walk()
            .into_iter()
            .filter_map(|(path, e)| {
                e.hole_span().map(|span| Hole {
                    path,
                    ty: e.ty(),
                    span: span.to_string(),
                })
            })
            .collect()
    }

    pub fn hole_count(&self) -> usize {
        self.walk().iter().filter(|(_, e)| e.is_hole()).count()
    }

    pub fn is_executable(&self) -> bool {
        self.hole_count() == 0
    }

    pub fn typecheck(&self) -> TypeReport {
        let mut errors = Vec::new();
        for (path, node) in self.walk() {
            if let Some(span) = node.hole_span() {
                if span.trim().is_empty() {
                    errors.push(TypeError {
                        path: path.clone(),
                        expected: None,
                        actual: node.ty(),
                        message: "hole has an empty utterance span".to_string(),
                    });
                }
            }
            for (slot, child) in node.children() {
                let expected = slot.expected_type();
                if child.ty() != expected {
                    errors.push(TypeError {
                        path: path.child(slot),
                        expected: Some(expected),
                        actual: child.ty(),
                        message: format!("{} slot expects {expected}, got {}", slot.name(), child.ty()),
                    });
                }
            }
        }
        TypeReport { errors }
    }

    /// Replaces the hole at `path`, leaving the input untouched.
    pub fn substitute_hole(&self, path: &NodePath, replacement: Expr) -> Result<Expr, SubstituteError> {
        let target = self.get(path).filter(|e| e.is_hole());
        let Some(target) = target else {
            return Err(SubstituteError::PathNotAHole(path.clone()));
        };
        if target.ty() != replacement.ty() {
            return Err(SubstituteError::TypeMismatch {
                path: path.clone(),
                expected: target.ty(),
                actual: replacement.ty(),
            });
        }
        let mut out = self.clone();
        *out.get_mut(path).expect("path checked above") = replacement;
        Ok(out)
    }

    /// Replaces any node at `path` with a node of the same type.
    pub fn replace_node(&self, path: &NodePath, replacement: Expr) -> Result<Expr, SubstituteError> {
        let Some(target) = self.get(path) else {
            return Err(SubstituteError::PathNotAHole(path.clone()));
        };
        if target.ty() != replacement.ty() {
            return Err(SubstituteError::TypeMismatch {
                path: path.clone(),
                expected: target.ty(),
                actual: replacement.ty(),
            });
        }
        let mut out = self.clone();
        *out.get_mut(path).expect("path checked above") = replacement;
        Ok(out)
    }

    /// Names of the Boolean and value concepts referenced anywhere in the tree.
    pub fn concept_refs(&self) -> Vec<(NodePath, &Expr)> {
        self.walk()
            .into_iter()
            .filter(|(_, e)| matches!(e, Expr::BoolConcept(_) | Expr::ValueConcept(_)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coffee_rule() -> Expr {
        Expr::Conditional {
            cond: Box::new(Expr::ResolveBool("it's hot".into())),
            then: Box::new(Expr::ResolveProcedure("order a cup of Iced Cappuccino".into())),
            otherwise: None,
        }
    }

    #[test]
    fn typecheck_accepts_slot_correct_trees() {
        assert!(coffee_rule().typecheck().is_ok());
        let cmp = Expr::Compare {
            lhs: Box::new(Expr::ValueConcept("temperature".into())),
            op: CmpOp::Gt,
            rhs: Box::new(Expr::Const(TypedValue::fahrenheit(85.0).unwrap())),
        };
        assert!(cmp.typecheck().is_ok());
    }

    #[test]
    fn typecheck_reports_slot_violation() {
        let bad = Expr::Conditional {
            cond: Box::new(Expr::Const(TypedValue::fahrenheit(85.0).unwrap())),
            then: Box::new(Expr::ResolveProcedure("x".into())),
            otherwise: None,
        };
        let report = bad.typecheck();
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].path.to_string(), "cond");
        assert_eq!(report.errors[0].expected, Some(ExprType::Bool));
        assert_eq!(report.errors[0].actual, ExprType::Value);
    }

    #[test]
    fn empty_span_is_a_type_error() {
        assert!(!Expr::ResolveBool("  ".into()).typecheck().is_ok());
    }

    #[test]
    fn holes_in_depth_first_order() {
        let holes = coffee_rule().holes();
        assert_eq!(holes.len(), 2);
        assert_eq!((holes[0].path.to_string(), holes[0].ty), ("cond".to_string(), ExprType::Bool));
        assert_eq!(holes[1].span, "order a cup of Iced Cappuccino");
        let two = Expr::Compare {
            lhs: Box::new(Expr::ResolveValue("price of a Uber".into())),
            op: CmpOp::Gt,
            rhs: Box::new(Expr::ResolveValue("price of a Lyft".into())),
        };
        let spans: Vec<_> = two.holes().into_iter().map(|h| h.span).collect();
        assert_eq!(spans, ["price of a Uber", "price of a Lyft"]);
    }

    #[test]
    fn substitution_checks_type_and_target() {
        let e = coffee_rule();
        let cond = NodePath(vec![Slot::Cond]);
        let out = e.substitute_hole(&cond, Expr::BoolConcept("hot".into())).unwrap();
        assert_eq!(out.get(&cond), Some(&Expr::BoolConcept("hot".into())));
        assert_eq!(e, coffee_rule());
        assert!(matches!(
            e.substitute_hole(&cond, Expr::ResolveProcedure("x".into())),
            Err(SubstituteError::TypeMismatch { .. })
        ));
        assert!(matches!(
            out.substitute_hole(&cond, Expr::BoolConcept("cold".into())),
            Err(SubstituteError::PathNotAHole(_))
        ));
    }

    #[test]
    fn paths_round_trip_through_text() {
        let p: NodePath = "cond.lhs".parse().unwrap();
        assert_eq!(p, NodePath(vec![Slot::Cond, Slot::Lhs]));
        assert_eq!(p.to_string(), "cond.lhs");
        assert_eq!("root".parse::<NodePath>().unwrap(), NodePath::root());
    }
}
