//! The typed script language: values, syntax trees, canonical text, evaluation.

pub mod eval;
pub mod expr;
pub mod render;
pub mod value;

pub use eval::{evaluate, Branch, EvalError, ExecutionEnvironment, ExecutionTrace, TraceEvent};
pub use expr::{Expr, ExprType, Hole, NodePath, Slot, SubstituteError, TypeError, TypeReport};
pub use render::ExprSyntaxError;
pub use value::{CmpOp, Dimension, TypedValue, Unit, ValueError};
