use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::Duration;

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce};
use sha2::{Digest, Sha256};

use super::frame::{msg, Frame, SessionId, FRAME_HEADER_LEN, MAX_PAYLOAD};
use super::ledger::{ByteLedger, Counter, Direction, Phase};
use crate::error::{Error, Result, StpErrorCode};

const SALT_LEN: usize = 16;
const TAG_LEN: usize = 16;
const RECORD_LEN_PREFIX: usize = 4;

/// Channel protection. `Null` sends frames as-is so the ledger matches the
/// protocol-level byte counts; `Aead` wraps every frame in an AES-256-GCM
/// record keyed from a pre-shared key.
#[derive(Clone)]
pub enum CipherMode {
    Null,
    Aead { psk: Vec<u8> },
}

impl std::fmt::Debug for CipherMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CipherMode::Null => f.write_str("Null"),
            CipherMode::Aead { .. } => f.write_str("Aead(..)"),
        }
    }
}

struct AeadState {
    tx: Aes256Gcm,
    rx: Aes256Gcm,
    tx_ctr: u64,
    rx_ctr: u64,
}

fn derive_key(psk: &[u8], salt_i: &[u8], salt_r: &[u8], label: &[u8]) -> Aes256Gcm {
    let mut h = Sha256::new();
    h.update(psk);
    h.update(salt_i);
    h.update(salt_r);
    h.update(label);
    Aes256Gcm::new(&h.finalize())
}

impl AeadState {
    fn new(psk: &[u8], salt_i: &[u8], salt_r: &[u8], initiator: bool) -> Self {
        let i2r = derive_key(psk, salt_i, salt_r, b"i2r");
        let r2i = derive_key(psk, salt_i, salt_r, b"r2i");
        let (tx, rx) = if initiator { (i2r, r2i) } else { (r2i, i2r) };
        AeadState {
            tx,
            rx,
            tx_ctr: 0,
            rx_ctr: 0,
        }
    }

    fn nonce(ctr: u64) -> [u8; 12] {
        let mut n = [0u8; 12];
        n[4..].copy_from_slice(&ctr.to_le_bytes());
        n
    }

    fn seal(&mut self, pt: &[u8]) -> Vec<u8> {
        let n = Self::nonce(self.tx_ctr);
        self.tx_ctr += 1;
        self.tx.encrypt(Nonce::from_slice(&n), pt).expect("aead encrypt")
    }

    fn open(&mut self, ct: &[u8]) -> Result<Vec<u8>> {
        let n = Self::nonce(self.rx_ctr);
        self.rx_ctr += 1;
        self.rx
            .decrypt(Nonce::from_slice(&n), ct)
            .map_err(|_| Error::Authentication)
    }
}

/// Message-oriented byte link.
trait Link: Send {
    fn send_record(&mut self, rec: Vec<u8>) -> Result<()>;
    fn recv_record(&mut self) -> Result<Vec<u8>>;
    fn set_timeout(&mut self, t: Option<Duration>) -> Result<()>;
}

struct MemLink {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    timeout: Option<Duration>,
}

impl Link for MemLink {
    fn send_record(&mut self, rec: Vec<u8>) -> Result<()> {
        self.tx.send(rec).map_err(|_| Error::Disconnected)
    }

    fn recv_record(&mut self) -> Result<Vec<u8>> {
        match self.timeout {
            None => self.rx.recv().map_err(|_| Error::Disconnected),
            Some(t) => self.rx.recv_timeout(t).map_err(|e| match e {
                RecvTimeoutError::Timeout => {
                    Error::Io(std::io::Error::new(std::io::ErrorKind::TimedOut, "receive timed out"))
                }
                RecvTimeoutError::Disconnected => Error::Disconnected,
            }),
        }
    }

    fn set_timeout(&mut self, t: Option<Duration>) -> Result<()> {
        self.timeout = t;
        Ok(())
    }
}

/// TCP link. In null mode records are raw frames, delimited by the frame's
/// own length field; in AEAD mode each record carries a `u32` length prefix.
/// Writes go through a dedicated thread so two peers sending large frames at
/// the same time cannot block each other.
struct TcpLink {
    stream: TcpStream,
    length_prefixed: bool,
    writer: Option<Sender<Vec<u8>>>,
    writer_thread: Option<std::thread::JoinHandle<()>>,
    write_error: Arc<std::sync::Mutex<Option<std::io::Error>>>,
}

impl TcpLink {
    fn new(stream: TcpStream, length_prefixed: bool) -> Result<Self> {
        let mut w = stream.try_clone()?;
        let (tx, rx) = mpsc::channel::<Vec<u8>>();
        let write_error = Arc::new(std::sync::Mutex::new(None));
        let err = write_error.clone();
        let h = std::thread::spawn(move || {
            for rec in rx {
                if let Err(e) = w.write_all(&rec) {
                    *err.lock().unwrap() = Some(e);
                    return;
                }
            }
            let _ = w.flush();
        });
        Ok(TcpLink {
            stream,
            length_prefixed,
            writer: Some(tx),
            writer_thread: Some(h),
            write_error,
        })
    }
}

impl Drop for TcpLink {
    fn drop(&mut self) {
        self.writer.take();
        if let Some(h) = self.writer_thread.take() {
            let _ = h.join();
        }
    }
}

fn map_eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Disconnected
    } else {
        Error::Io(e)
    }
}

impl Link for TcpLink {
    fn send_record(&mut self, rec: Vec<u8>) -> Result<()> {
        if let Some(e) = self.write_error.lock().unwrap().take() {
            return Err(Error::Io(e));
        }
        let rec = if self.length_prefixed {
            let mut v = Vec::with_capacity(4 + rec.len());
            v.extend_from_slice(&(rec.len() as u32).to_le_bytes());
            v.extend_from_slice(&rec);
            v
        } else {
            rec
        };
        self.writer
            .as_ref()
            .unwrap()
            .send(rec)
            .map_err(|_| Error::Disconnected)
    }

    fn recv_record(&mut self) -> Result<Vec<u8>> {
        if self.length_prefixed {
            let mut l = [0u8; 4];
            self.stream.read_exact(&mut l).map_err(map_eof)?;
            let len = u32::from_le_bytes(l) as usize;
            if len > MAX_PAYLOAD + FRAME_HEADER_LEN + TAG_LEN {
                return Err(Error::FrameTooLarge(len));
            }
            let mut rec = vec![0u8; len];
            self.stream.read_exact(&mut rec).map_err(map_eof)?;
            Ok(rec)
        } else {
            let mut h = [0u8; FRAME_HEADER_LEN];
            self.stream.read_exact(&mut h).map_err(map_eof)?;
            let (len, _, _) = Frame::decode_header(&h)?;
            let mut rec = vec![0u8; FRAME_HEADER_LEN + len];
            rec[..FRAME_HEADER_LEN].copy_from_slice(&h);
            self.stream.read_exact(&mut rec[FRAME_HEADER_LEN..]).map_err(map_eof)?;
            Ok(rec)
        }
    }

    fn set_timeout(&mut self, t: Option<Duration>) -> Result<()> {
        self.stream.set_read_timeout(t)?;
        Ok(())
    }
}

/// A framed point-to-point channel with byte accounting.
pub struct Channel {
    link: Box<dyn Link>,
    aead: Option<AeadState>,
    session: SessionId,
    peer: String,
    ledger: Arc<ByteLedger>,
    phase: Phase,
    last_sent: Option<bool>,
}

impl Channel {
    fn with_link(link: Box<dyn Link>, aead: Option<AeadState>, peer: &str, ledger: Arc<ByteLedger>) -> Self {
        Channel {
            link,
            aead,
            session: SessionId::default(),
            peer: peer.to_string(),
            ledger,
            phase: Phase::Online,
            last_sent: None,
        }
    }

    /// In-process channel pair. `names` label the peer each end talks to.
    pub fn mem_pair(
        mode: &CipherMode,
        names: (&str, &str),
        ledgers: (Arc<ByteLedger>, Arc<ByteLedger>),
    ) -> (Channel, Channel) {
        let (tx_a, rx_b) = mpsc::channel();
        let (tx_b, rx_a) = mpsc::channel();
        let (aead_a, aead_b) = match mode {
            CipherMode::Null => (None, None),
            CipherMode::Aead { psk } => {
                let mut si = [0u8; SALT_LEN];
                let mut sr = [0u8; SALT_LEN];
                rand::RngCore::fill_bytes(&mut rand::thread_rng(), &mut si);
                rand::RngCore::fill_bytes(&mut rand::thread_rng(), &mut sr);
                (
                    Some(AeadState::new(psk, &si, &sr, true)),
                    Some(AeadState::new(psk, &si, &sr, false)),
                )
            }
        };
        let a = MemLink {
            tx: tx_a,
            rx: rx_a,
            timeout: None,
        };
        let b = MemLink {
            tx: tx_b,
            rx: rx_b,
            timeout: None,
        };
        (
            Channel::with_link(Box::new(a), aead_a, names.0, ledgers.0),
            Channel::with_link(Box::new(b), aead_b, names.1, ledgers.1),
        )
    }

    /// In-process pair with fresh ledgers and the null cipher.
    pub fn mem_pair_simple() -> (Channel, Channel) {
        Self::mem_pair(
            &CipherMode::Null,
            ("peer", "peer"),
            (Arc::new(ByteLedger::new()), Arc::new(ByteLedger::new())),
        )
    }

    /// Wrap an established TCP stream. `initiator` is the connecting side.
    pub fn from_tcp(
        mut stream: TcpStream,
        initiator: bool,
        mode: &CipherMode,
        peer: &str,
        ledger: Arc<ByteLedger>,
    ) -> Result<Channel> {
        stream.set_nodelay(true)?;
        let aead = match mode {
            CipherMode::Null => None,
            CipherMode::Aead { psk } => {
                let mut mine = [0u8; SALT_LEN];
                rand::RngCore::fill_bytes(&mut rand::thread_rng(), &mut mine);
                stream.write_all(&mine)?;
                let mut theirs = [0u8; SALT_LEN];
                stream.read_exact(&mut theirs).map_err(map_eof)?;
                let (si, sr) = if initiator { (mine, theirs) } else { (theirs, mine) };
                Some(AeadState::new(psk, &si, &sr, initiator))
            }
        };
        let length_prefixed = aead.is_some();
        let ch = Channel::with_link(Box::new(TcpLink::new(stream, length_prefixed)?), aead, peer, ledger);
        if length_prefixed {
            ch.account_raw(Direction::Sent, SALT_LEN as u64);
            ch.account_raw(Direction::Received, SALT_LEN as u64);
        }
        Ok(ch)
    }

    pub fn connect<A: ToSocketAddrs>(addr: A, mode: &CipherMode, peer: &str, ledger: Arc<ByteLedger>) -> Result<Channel> {
        let s = TcpStream::connect(addr)?;
        Self::from_tcp(s, true, mode, peer, ledger)
    }

    fn account_raw(&self, dir: Direction, bytes: u64) {
        self.ledger.record(
            self.phase,
            dir,
            &self.peer,
            0,
            Counter {
                overhead_bytes: bytes,
                ..Counter::default()
            },
        );
    }

    pub fn ledger(&self) -> &Arc<ByteLedger> {
        &self.ledger
    }

    pub fn peer(&self) -> &str {
        &self.peer
    }

    pub fn session(&self) -> SessionId {
        self.session
    }

    pub fn set_session(&mut self, s: SessionId) {
        self.session = s;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Attribute subsequent traffic to `phase`. Setting the current phase again is a no-op.
    pub fn phase_mark(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn set_timeout(&mut self, t: Option<Duration>) -> Result<()> {
        self.link.set_timeout(t)
    }

    pub fn send(&mut self, msg_type: u8, payload: Vec<u8>) -> Result<()> {
        let frame = Frame::new(msg_type, self.session, payload);
        let plen = frame.payload.len();
        let ctl = msg::control_len(msg_type).min(plen);
        let mut rec = frame.encode()?;
        let mut wire = rec.len();
        if let Some(a) = self.aead.as_mut() {
            rec = a.seal(&rec);
            wire = rec.len() + RECORD_LEN_PREFIX;
        }
        self.link.send_record(rec)?;
        let flights = u64::from(self.last_sent != Some(true));
        self.last_sent = Some(true);
        let payload = (plen - ctl) as u64;
        self.ledger.record(
            self.phase,
            Direction::Sent,
            &self.peer,
            msg_type,
            Counter {
                payload_bytes: payload,
                overhead_bytes: wire as u64 - payload,
                messages: 1,
                flights,
            },
        );
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Frame> {
        let rec = self.link.recv_record()?;
        let mut wire = rec.len();
        let bytes = match self.aead.as_mut() {
            Some(a) => {
                wire += RECORD_LEN_PREFIX;
                a.open(&rec)?
            }
            None => rec,
        };
        let frame = Frame::decode(&bytes)?;
        let plen = frame.payload.len();
        let ctl = msg::control_len(frame.msg_type).min(plen);
        let flights = u64::from(self.last_sent != Some(false));
        self.last_sent = Some(false);
        let payload = (plen - ctl) as u64;
        self.ledger.record(
            self.phase,
            Direction::Received,
            &self.peer,
            frame.msg_type,
            Counter {
                payload_bytes: payload,
                overhead_bytes: wire as u64 - payload,
                messages: 1,
                flights,
            },
        );
        Ok(frame)
    }

    /// Receive a frame of the given type. `ERROR` frames become [`Error::Stp`].
    pub fn recv_expect(&mut self, msg_type: u8) -> Result<Vec<u8>> {
        let f = self.recv()?;
        if f.msg_type == msg::ERROR && msg_type != msg::ERROR {
            return Err(decode_error(&f.payload));
        }
        if f.msg_type != msg_type {
            return Err(Error::UnexpectedMessage {
                expected: msg_type,
                got: f.msg_type,
            });
        }
        if !self.session.is_zero() && f.session != self.session {
            return Err(Error::Malformed(format!(
                "session {} does not match channel session {}",
                f.session.to_hex(),
                self.session.to_hex()
            )));
        }
        Ok(f.payload)
    }

    /// Send an `ERROR` frame.
    pub fn send_error(&mut self, code: StpErrorCode, detail: &str) -> Result<()> {
        let mut p = vec![code as u8];
        p.extend_from_slice(detail.as_bytes());
        self.send(msg::ERROR, p)
    }
}

pub fn decode_error(p: &[u8]) -> Error {
    match p.first().and_then(|c| StpErrorCode::from_u8(*c)) {
        Some(code) => Error::Stp {
            code,
            detail: String::from_utf8_lossy(&p[1..]).into_owned(),
        },
        None => Error::Malformed("unknown error frame".into()),
    }
}
