//! The offline dealer. Each party connects, sends its manifest (prefixed with
//! its role) and receives its bundle once both manifests for the session have
//! arrived and agree. The dealer keeps only the ids of finished sessions.

use std::collections::{HashMap, HashSet};
use std::net::TcpListener;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::rngs::OsRng;

use crate::drbg::Seed;
use crate::error::{Error, Result, StpErrorCode};
use crate::manifest::{deal, expand_bundle, ResourceManifest};
use crate::pools::Pools;
use crate::transport::{msg, ByteLedger, Channel, CipherMode, Phase, SessionId};

#[derive(Clone, Debug)]
pub struct StpConfig {
    /// How long the first party of a session waits for the second.
    pub timeout: Duration,
}

impl Default for StpConfig {
    fn default() -> Self {
        StpConfig {
            timeout: Duration::from_secs(60),
        }
    }
}

type Reply = std::result::Result<Vec<u8>, (StpErrorCode, String)>;

struct Waiter {
    role: u8,
    body: Vec<u8>,
    reply: mpsc::Sender<Reply>,
}

#[derive(Default)]
struct Sessions {
    pending: HashMap<SessionId, Waiter>,
    finished: HashSet<SessionId>,
}

pub struct Stp {
    cfg: StpConfig,
    sessions: Mutex<Sessions>,
}

impl Stp {
    pub fn new(cfg: StpConfig) -> Self {
        Stp {
            cfg,
            sessions: Mutex::new(Sessions::default()),
        }
    }

    /// Serve one party connection: one manifest in, one bundle or error out.
    pub fn handle(&self, mut ch: Channel) -> Result<()> {
        ch.phase_mark(Phase::Offline);
        let f = ch.recv()?;
        if f.msg_type != msg::MANIFEST {
            ch.send_error(StpErrorCode::MalformedFrame, "expected MANIFEST")?;
            return Err(Error::UnexpectedMessage {
                expected: msg::MANIFEST,
                got: f.msg_type,
            });
        }
        ch.set_session(f.session);
        match self.process(f.session, &f.payload) {
            Ok(bundle) => ch.send(msg::BUNDLE, bundle),
            Err((code, detail)) => {
                log::warn!("session {}: {code:?}: {detail}", f.session.to_hex());
                ch.send_error(code, &detail)
            }
        }
    }

    fn process(&self, session: SessionId, payload: &[u8]) -> Reply {
        let bad = |d: &str| Err((StpErrorCode::BadParameters, d.to_string()));
        if session.is_zero() {
            return bad("zero session id");
        }
        let Some((&role, body)) = payload.split_first() else {
            return bad("empty manifest");
        };
        if role > 1 {
            return bad("role must be 0 or 1");
        }
        let manifest = match ResourceManifest::decode(body, session) {
            Ok(m) => m,
            Err(e) => return Err((StpErrorCode::MalformedFrame, e.to_string())),
        };
        let rx = {
            let mut s = self.sessions.lock().unwrap();
            if s.finished.contains(&session) {
                return Err((StpErrorCode::SessionReplay, "session id already used".into()));
            }
            match s.pending.remove(&session) {
                Some(w) => {
                    s.finished.insert(session);
                    drop(s);
                    let err = if w.role == role {
                        Some((StpErrorCode::RoleConflict, format!("both parties claim role {role}")))
                    } else if w.body != body {
                        Some((StpErrorCode::ManifestMismatch, "manifests differ".to_string()))
                    } else {
                        None
                    };
                    if let Some(e) = err {
                        let _ = w.reply.send(Err(e.clone()));
                        return Err(e);
                    }
                    let seed0 = Seed::random(&mut OsRng);
                    let seed1 = Seed::random(&mut OsRng);
                    let (b0, b1) = deal(&manifest, &seed0, &seed1);
                    let (mine, theirs) = if role == 0 { (b0, b1) } else { (b1, b0) };
                    let _ = w.reply.send(Ok(theirs));
                    return Ok(mine);
                }
                None => {
                    let (tx, rx) = mpsc::channel();
                    s.pending.insert(
                        session,
                        Waiter {
                            role,
                            body: body.to_vec(),
                            reply: tx,
                        },
                    );
                    rx
                }
            }
        };
        match rx.recv_timeout(self.cfg.timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => {
                let mut s = self.sessions.lock().unwrap();
                if s.pending.remove(&session).is_some() {
                    s.finished.insert(session);
                    return Err((StpErrorCode::Timeout, "peer never submitted a manifest".into()));
                }
                drop(s);
                // The peer arrived just as we timed out; its reply is on the way.
                rx.recv()
                    .unwrap_or_else(|_| Err((StpErrorCode::Timeout, "session abandoned".into())))
            }
            Err(RecvTimeoutError::Disconnected) => Err((StpErrorCode::Timeout, "session abandoned".into())),
        }
    }

    /// Accept connections forever, one thread per connection.
    pub fn serve(self: Arc<Self>, listener: TcpListener, mode: CipherMode) -> Result<()> {
        let ledger = Arc::new(ByteLedger::new());
        for conn in listener.incoming() {
            let stream = match conn {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let me = self.clone();
            let mode = mode.clone();
            let ledger = ledger.clone();
            std::thread::spawn(move || {
                let peer = stream
                    .peer_addr()
                    .map(|a| a.to_string())
                    .unwrap_or_else(|_| "party".into());
                let r = Channel::from_tcp(stream, false, &mode, &peer, ledger).and_then(|ch| me.handle(ch));
                if let Err(e) = r {
                    log::warn!("connection {peer}: {e}");
                }
            });
        }
        Ok(())
    }
}

/// A party's raw bundle as delivered by the dealer.
#[derive(Clone, PartialEq, Eq)]
pub struct CorrelatedBundle {
    pub role: u8,
    pub bytes: Vec<u8>,
}

impl std::fmt::Debug for CorrelatedBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CorrelatedBundle {{ role: {}, {} bytes }}", self.role, self.bytes.len())
    }
}

impl CorrelatedBundle {
    pub fn seed(&self) -> Result<Seed> {
        Seed::from_slice(self.bytes.get(..32).ok_or_else(|| Error::Malformed("short bundle".into()))?)
    }

    pub fn expand(&self, m: &ResourceManifest) -> Result<Pools> {
        expand_bundle(m, self.role, &self.bytes)
    }
}

/// Submit a manifest to the dealer and wait for this party's bundle. Traffic
/// on `ch` is attributed to the offline phase.
pub fn request_bundle(ch: &mut Channel, m: &ResourceManifest, role: u8) -> Result<CorrelatedBundle> {
    ch.phase_mark(Phase::Offline);
    ch.set_session(m.session);
    let mut p = vec![role];
    p.extend_from_slice(&m.encode());
    ch.send(msg::MANIFEST, p)?;
    let bytes = ch.recv_expect(msg::BUNDLE)?;
    if bytes.len() != m.bundle_len(role) {
        return Err(Error::Malformed(format!(
            "bundle of {} bytes, expected {}",
            bytes.len(),
            m.bundle_len(role)
        )));
    }
    Ok(CorrelatedBundle { role, bytes })
}
