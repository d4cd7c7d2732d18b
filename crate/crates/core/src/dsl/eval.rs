use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::expr::Expr;
use super::value::{CmpOp, Dimension, TypedValue, ValueError};
use crate::demo::{replay_procedure, replay_value_query, DemoError, ReplayedAction};
use crate::kb::{KnowledgeBase, ValueSource};
use crate::screenworld::World;

const MAX_CONCEPT_DEPTH: usize = 16;

/// Everything a script needs at run time.
pub struct ExecutionEnvironment<'a> {
    pub world: &'a mut World,
    pub kb: &'a KnowledgeBase,
    /// The top-level task the script belongs to; selects concept variants.
    pub context: &'a str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Then,
    Else,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "camelCase")]
pub enum TraceEvent {
    #[serde(rename_all = "camelCase")]
    ValueRead {
        concept: String,
        variant_context: String,
        value: TypedValue,
    },
    ComparisonEvaluated {
        lhs: TypedValue,
        op: CmpOp,
        rhs: TypedValue,
        result: bool,
    },
    #[serde(rename_all = "camelCase")]
    ConceptEvaluated {
        concept: String,
        variant_context: String,
        result: bool,
    },
    ConditionEvaluated {
        result: bool,
    },
    BranchTaken {
        branch: Branch,
    },
    ProcedureStarted {
        procedure: String,
        bindings: BTreeMap<String, String>,
    },
    ActionPerformed(ReplayedAction),
    ProcedureFinished {
        procedure: String,
    },
}

/// Ordered record of what a script read and did.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
}

impl ExecutionTrace {
    /// Branch taken by the outermost conditional, if any.
    pub fn branch(&self) -> Option<Branch> {
        self.events.iter().find_map(|e| match e {
            TraceEvent::BranchTaken { branch } => Some(*branch),
            _ => None,
        })
    }

    pub fn actions(&self) -> Vec<&ReplayedAction> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::ActionPerformed(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn procedures(&self) -> Vec<(&str, &BTreeMap<String, String>)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::ProcedureStarted { procedure, bindings } => Some((procedure.as_str(), bindings)),
                _ => None,
            })
            .collect()
    }

    /// Texts of the objects clicked, in order.
    pub fn clicked_texts(&self) -> Vec<&str> {
        self.actions()
            .into_iter()
            .filter(|a| matches!(a.action, crate::screenworld::Action::Click { .. }))
            .filter_map(|a| a.target_text.as_deref())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("script still contains holes")]
    NotExecutable,
    #[error("conditional evaluated without a context label")]
    EmptyContext,
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("unknown procedure {0:?}")]
    UnknownProcedure(String),
    #[error("cannot compare {0} with {1}")]
    DimensionMismatch(Dimension, Dimension),
    #[error("{0}")]
    QueryFailed(String),
    #[error("concept {0:?} refers to itself")]
    RecursionLimit(String),
    #[error("replay failed: {0}")]
    Replay(DemoError),
    #[error("expression of type {0} cannot be evaluated here")]
    WrongType(String),
}

struct Evaluator<'e, 'a> {
    env: &'e mut ExecutionEnvironment<'a>,
    trace: ExecutionTrace,
    depth: usize,
}

impl Evaluator<'_, '_> {
    fn value(&mut self, e: &Expr) -> Result<TypedValue, EvalError> {
        match e {
            Expr::Const(v) => Ok(v.normalize()),
            Expr::ValueConcept(name) => {
                let resolved = self
                    .env
                    .kb
                    .resolve_value_in_context(name, self.env.context)
                    .map_err(|_| EvalError::UnknownConcept(name.clone()))?;
                let value = match &resolved.variant.source {
                    ValueSource::Constant(v) => v.normalize(),
                    ValueSource::Query(q) => replay_value_query(q, self.env.world).map_err(|e| match e {
                        DemoError::QueryFailed(m) => EvalError::QueryFailed(m),
                        other => EvalError::Replay(other),
                    })?,
                };
                self.trace.events.push(TraceEvent::ValueRead {
                    concept: name.clone(),
                    variant_context: resolved.context.to_string(),
                    value,
                });
                Ok(value)
            }
            other => Err(EvalError::WrongType(other.ty().to_string())),
        }
    }

    fn boolean(&mut self, e: &Expr) -> Result<bool, EvalError> {
        match e {
            Expr::Compare { lhs, op, rhs } => {
                let l = self.value(lhs)?;
                let r = self.value(rhs)?;
                let result = l.compare(*op, &r).map_err(|err| match err {
                    ValueError::DimensionMismatch(a, b) => EvalError::DimensionMismatch(a, b),
                    other => EvalError::QueryFailed(other.to_string()),
                })?;
                self.trace.events.push(TraceEvent::ComparisonEvaluated {
                    lhs: l,
                    op: *op,
                    rhs: r,
                    result,
                });
                Ok(result)
            }
            Expr::BoolConcept(name) => {
                if self.depth >= MAX_CONCEPT_DEPTH {
                    return Err(EvalError::RecursionLimit(name.clone()));
                }
                let kb = self.env.kb;
                let resolved = kb
                    .resolve_bool_in_context(name, self.env.context)
                    .map_err(|_| EvalError::UnknownConcept(name.clone()))?;
                self.depth += 1;
                let result = self.boolean(&resolved.variant.expr);
                self.depth -= 1;
                let result = result?;
                self.trace.events.push(TraceEvent::ConceptEvaluated {
                    concept: name.clone(),
                    variant_context: resolved.context.to_string(),
                    result,
                });
                Ok(result)
            }
            other => Err(EvalError::WrongType(other.ty().to_string())),
        }
    }

    fn procedure(&mut self, e: &Expr) -> Result<(), EvalError> {
        let Expr::Call { procedure, args } = e else {
            return Err(EvalError::WrongType(e.ty().to_string()));
        };
        let entry = self
            .env
            .kb
            .procedure(procedure)
            .ok_or_else(|| EvalError::UnknownProcedure(procedure.clone()))?;
        self.trace.events.push(TraceEvent::ProcedureStarted {
            procedure: procedure.clone(),
            bindings: args.clone(),
        });
        let actions = replay_procedure(&entry.script, args, self.env.world).map_err(EvalError::Replay)?;
        self.trace.events.extend(actions.into_iter().map(TraceEvent::ActionPerformed));
        self.trace.events.push(TraceEvent::ProcedureFinished {
            procedure: procedure.clone(),
        });
        Ok(())
    }

    fn script(&mut self, e: &Expr) -> Result<(), EvalError> {
        match e {
            Expr::Conditional { cond, then, otherwise } => {
                if self.env.context.trim().is_empty() {
                    return Err(EvalError::EmptyContext);
                }
                let result = self.boolean(cond)?;
                self.trace.events.push(TraceEvent::ConditionEvaluated { result });
                let branch = match (result, otherwise) {
                    (true, _) => Branch::Then,
                    (false, Some(_)) => Branch::Else,
                    (false, None) => Branch::None,
                };
                self.trace.events.push(TraceEvent::BranchTaken { branch });
                match branch {
                    Branch::Then => self.procedure(then),
                    Branch::Else => self.procedure(otherwise.as_deref().expect("else branch present")),
                    Branch::None => Ok(()),
                }
            }
            Expr::Call { .. } => self.procedure(e),
            Expr::Compare { .. } | Expr::BoolConcept(_) => {
                let result = self.boolean(e)?;
                self.trace.events.push(TraceEvent::ConditionEvaluated { result });
                Ok(())
            }
            Expr::Const(_) | Expr::ValueConcept(_) => self.value(e).map(|_| ()),
            _ => Err(EvalError::NotExecutable),
        }
    }
}

/// Runs a hole-free expression against the environment.
pub fn evaluate(expr: &Expr, env: &mut ExecutionEnvironment<'_>) -> Result<ExecutionTrace, EvalError> {
    if !expr.is_executable() {
        return Err(EvalError::NotExecutable);
    }
    let mut ev = Evaluator {
        env,
        trace: ExecutionTrace::default(),
        depth: 0,
    };
    ev.script(expr)?;
    Ok(ev.trace)
}
