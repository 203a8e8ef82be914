use crate::error::{Error, Result};

/// Bytes of framing per message: `u32` length, `u8` type, 16-byte session id.
pub const FRAME_HEADER_LEN: usize = 21;

/// Largest payload a frame may carry.
pub const MAX_PAYLOAD: usize = 1 << 30;

/// Message type codes.
pub mod msg {
    pub const MANIFEST: u8 = 1;
    pub const BUNDLE: u8 = 2;
    pub const ERROR: u8 = 3;
    /// Opens a session between the parties; the id travels in the header.
    pub const HELLO: u8 = 4;

    pub const OT_CHOICES: u8 = 10;
    pub const OT_PAIRS: u8 = 11;

    pub const ASS_SHARE: u8 = 20;
    pub const ASS_EF: u8 = 21;
    pub const DA_MASKED: u8 = 22;
    pub const ASS_REVEAL: u8 = 23;

    pub const GMW_SHARE: u8 = 30;
    pub const GMW_DE: u8 = 31;
    pub const GMW_REVEAL: u8 = 32;

    pub const GC_TABLES: u8 = 40;
    pub const GC_INLABELS: u8 = 41;
    pub const GC_DECODE: u8 = 42;
    pub const GC_OUTPUT: u8 = 43;

    pub fn name(t: u8) -> &'static str {
        match t {
            MANIFEST => "MANIFEST",
            BUNDLE => "BUNDLE",
            ERROR => "ERROR",
            HELLO => "HELLO",
            OT_CHOICES => "OT_CHOICES",
            OT_PAIRS => "OT_PAIRS",
            ASS_SHARE => "ASS_SHARE",
            ASS_EF => "ASS_EF",
            DA_MASKED => "DA_MASKED",
            ASS_REVEAL => "ASS_REVEAL",
            GMW_SHARE => "GMW_SHARE",
            GMW_DE => "GMW_DE",
            GMW_REVEAL => "GMW_REVEAL",
            GC_TABLES => "GC_TABLES",
            GC_INLABELS => "GC_INLABELS",
            GC_DECODE => "GC_DECODE",
            GC_OUTPUT => "GC_OUTPUT",
            _ => "UNKNOWN",
        }
    }

    /// Leading payload bytes that are protocol control rather than data
    /// (the level index of a GMW exchange, the role byte of a manifest).
    pub fn control_len(t: u8) -> usize {
        match t {
            GMW_DE => 4,
            MANIFEST => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(pub [u8; 16]);

impl SessionId {
    pub fn random<R: rand::RngCore>(rng: &mut R) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        SessionId(b)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0u8; 16]
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: u8,
    pub session: SessionId,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: u8, session: SessionId, payload: Vec<u8>) -> Self {
        Frame {
            msg_type,
            session,
            payload,
        }
    }

    pub fn encoded_len(&self) -> usize {
        FRAME_HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(Error::FrameTooLarge(self.payload.len()));
        }
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.push(self.msg_type);
        out.extend_from_slice(&self.session.0);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Parse a header, returning `(payload length, type, session)`.
    pub fn decode_header(h: &[u8; FRAME_HEADER_LEN]) -> Result<(usize, u8, SessionId)> {
        let len = u32::from_le_bytes(h[0..4].try_into().unwrap()) as usize;
        if len > MAX_PAYLOAD {
            return Err(Error::FrameTooLarge(len));
        }
        let session = SessionId(h[5..21].try_into().unwrap());
        Ok((len, h[4], session))
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(Error::Malformed("short frame".into()));
        }
        let (len, msg_type, session) = Self::decode_header(bytes[..FRAME_HEADER_LEN].try_into().unwrap())?;
        if bytes.len() != FRAME_HEADER_LEN + len {
            return Err(Error::Malformed(format!(
                "frame length field {len} does not match {} payload bytes",
                bytes.len() - FRAME_HEADER_LEN
            )));
        }
        Ok(Frame {
            msg_type,
            session,
            payload: bytes[FRAME_HEADER_LEN..].to_vec(),
        })
    }
}
