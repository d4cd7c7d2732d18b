//! The teaching conversation: resolves holes depth-first through questions,
//! demonstrations, reuse decisions and confirmations, with undo.

pub mod naming;
pub mod session;
pub mod state;
pub mod templates;

pub use session::{lexicon_for, DialogError, RunError, Session, Speaker, TranscriptRecord, TurnOutcome, UNDO_CAPACITY};
pub use state::{ConceptKind, DialogState, Frame, Learned, Pending, Phase, TurnInput};
pub use templates::{AgentMove, Template};
