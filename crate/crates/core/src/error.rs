use std::io;

use thiserror::Error;

/// Errors surfaced by the protocol engines, the dealer and the transport.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ring parameters: {0}")]
    InvalidRing(String),
    #[error("fixed-point overflow: |{value}| >= 2^{alpha}")]
    FixedPointOverflow { value: f64, alpha: u8 },
    #[error("drbg bit budget exhausted, reseed required")]
    ReseedRequired,

    #[error("{kind} pool exhausted: requested {requested}, remaining {remaining}")]
    ResourceExhausted {
        kind: &'static str,
        requested: usize,
        remaining: usize,
    },
    #[error("vector length {got} does not match the planned dot product of length {expected}")]
    VdpLengthMismatch { expected: usize, got: usize },
    #[error("share role mismatch")]
    RoleMismatch,
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("message width {0} bits is not supported")]
    MessageWidth(usize),

    #[error("circuit parse error at line {line}: {msg}")]
    CircuitParse { line: usize, msg: String },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("peer disconnected")]
    Disconnected,
    #[error("frame of {0} bytes exceeds the maximum frame size")]
    FrameTooLarge(usize),
    #[error("unexpected message type {got}, expected {expected}")]
    UnexpectedMessage { expected: u8, got: u8 },
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("frame authentication failed")]
    Authentication,
    #[error("GMW level desync: expected level {expected}, peer sent {got}")]
    Desync { expected: u32, got: u32 },

    #[error("STP rejected the request: {code:?}: {detail}")]
    Stp { code: StpErrorCode, detail: String },

    #[error("model/network mismatch: {0}")]
    Model(String),
}

/// Error codes carried in `ERROR` frames from the dealer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StpErrorCode {
    ManifestMismatch = 1,
    SessionReplay = 2,
    Timeout = 3,
    MalformedFrame = 4,
    RoleConflict = 5,
    BadParameters = 6,
}

impl StpErrorCode {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => Self::ManifestMismatch,
            2 => Self::SessionReplay,
            3 => Self::Timeout,
            4 => Self::MalformedFrame,
            5 => Self::RoleConflict,
            6 => Self::BadParameters,
            _ => return None,
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
