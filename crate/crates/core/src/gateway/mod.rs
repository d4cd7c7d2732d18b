//! Session lifecycle, the NDJSON wire protocol, and the scripted-transcript runner.

pub mod protocol;
pub mod server;
pub mod transcript;

pub use protocol::{MessageKind, Request, SessionMessage};
pub use server::{Gateway, GatewayError, SessionSlot};
pub use transcript::{parse_transcript, replay_transcript_file, run_transcript, TranscriptError, TranscriptReport};
