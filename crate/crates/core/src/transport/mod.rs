//! Framed channels and the per-phase byte ledger.

mod channel;
pub mod frame;
mod ledger;

pub use channel::{decode_error, Channel, CipherMode};
pub use frame::{msg, Frame, SessionId, FRAME_HEADER_LEN, MAX_PAYLOAD};
pub use ledger::{ByteLedger, Counter, Direction, LedgerSnapshot, Phase};
