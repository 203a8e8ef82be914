//! Shared pieces of the `stp` and `party` binaries.

pub mod config;
pub mod programs;

use std::fmt;
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use hybrid2pc::drbg::{Drbg, Seed};
use hybrid2pc::manifest::ResourceManifest;
use hybrid2pc::session::{open_session, Party};
use hybrid2pc::transport::{ByteLedger, Channel, Counter, Direction, LedgerSnapshot, Phase};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::Serialize;

use config::{PeerEndpoint, Settings};

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    /// Dealer unreachable or the offline phase failed.
    pub const OFFLINE_FAIL: i32 = 3;
    /// Peer unreachable or the session handshake failed.
    pub const PEER_FAIL: i32 = 4;
    pub const ONLINE_FAIL: i32 = 5;

    pub fn name(code: i32) -> &'static str {
        match code {
            OK => "OK",
            USAGE => "USAGE",
            OFFLINE_FAIL => "OFFLINE_FAIL",
            PEER_FAIL => "PEER_FAIL",
            ONLINE_FAIL => "ONLINE_FAIL",
            _ => "UNKNOWN",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub detail: String,
}

impl CliError {
    pub fn new(code: i32, detail: impl fmt::Display) -> Self {
        CliError {
            code,
            detail: detail.to_string(),
        }
    }

    pub fn usage(detail: impl fmt::Display) -> Self {
        Self::new(exit::USAGE, detail)
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": exit::name(self.code),
            "exit_code": self.code,
            "detail": self.detail,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", exit::name(self.code), self.detail)
    }
}

pub fn offline_fail(e: impl fmt::Display) -> CliError {
    CliError::new(exit::OFFLINE_FAIL, e)
}

pub fn peer_fail(e: impl fmt::Display) -> CliError {
    CliError::new(exit::PEER_FAIL, e)
}

pub fn online_fail(e: impl fmt::Display) -> CliError {
    CliError::new(exit::ONLINE_FAIL, e)
}

/// Connections of one party run. The dealer serves one manifest per
/// connection, so every session after the first dials it again.
pub struct Link {
    pub settings: Settings,
    pub ledger: Arc<ByteLedger>,
    stp: Option<Channel>,
    peer: Option<Channel>,
    seeds: Option<Drbg>,
    pub sessions: Vec<String>,
    pub offline_ms: f64,
}

fn dial_stp(s: &Settings, ledger: &Arc<ByteLedger>) -> Result<Channel, CliError> {
    let mut ch = Channel::connect(s.stp.as_str(), &s.mode, "stp", ledger.clone())
        .map_err(|e| offline_fail(format!("dealer {}: {e}", s.stp)))?;
    ch.set_timeout(Some(s.timeout)).map_err(offline_fail)?;
    Ok(ch)
}

fn dial_peer(s: &Settings, ledger: &Arc<ByteLedger>) -> Result<Channel, CliError> {
    let stream = match &s.peer {
        PeerEndpoint::Listen(addr) => {
            let l = TcpListener::bind(addr).map_err(|e| peer_fail(format!("listen {addr}: {e}")))?;
            log::info!("waiting for peer on {addr}");
            let (st, from) = l.accept().map_err(peer_fail)?;
            log::info!("peer connected from {from}");
            return Channel::from_tcp(st, false, &s.mode, "peer", ledger.clone())
                .and_then(|mut c| c.set_timeout(Some(s.timeout)).map(|_| c))
                .map_err(peer_fail);
        }
        PeerEndpoint::Connect(addr) => {
            // The peer may not be listening yet.
            let deadline = Instant::now() + s.timeout;
            loop {
                match TcpStream::connect(addr.as_str()) {
                    Ok(st) => break st,
                    Err(e) if Instant::now() < deadline => {
                        log::debug!("peer {addr}: {e}, retrying");
                        thread::sleep(Duration::from_millis(50));
                    }
                    Err(e) => return Err(peer_fail(format!("peer {addr}: {e}"))),
                }
            }
        }
    };
    let mut ch = Channel::from_tcp(stream, true, &s.mode, "peer", ledger.clone()).map_err(peer_fail)?;
    ch.set_timeout(Some(s.timeout)).map_err(peer_fail)?;
    Ok(ch)
}

impl Link {
    /// Reach the dealer first so that a dead dealer fails fast, then the peer.
    pub fn open(settings: Settings) -> Result<Self, CliError> {
        let ledger = Arc::new(ByteLedger::new());
        let stp = dial_stp(&settings, &ledger)?;
        let peer = dial_peer(&settings, &ledger)?;
        let seeds = settings.rng_seed.as_ref().map(|s| Drbg::new(s, b"cli-sessions"));
        Ok(Link {
            settings,
            ledger,
            stp: Some(stp),
            peer: Some(peer),
            seeds,
            sessions: vec![],
            offline_ms: 0.0,
        })
    }

    /// Agree on a session id with the peer and run the offline phase for `m`.
    pub fn start(&mut self, m: &mut ResourceManifest) -> Result<Party, CliError> {
        let s = &self.settings;
        let mut peer = self.peer.take().ok_or_else(|| peer_fail("peer channel lost"))?;
        let mut stp = match self.stp.take() {
            Some(c) => c,
            None => dial_stp(s, &self.ledger)?,
        };
        let fixed = if self.sessions.is_empty() { s.session } else { None };
        let t = Instant::now();
        let id = open_session(&mut peer, s.role, fixed).map_err(peer_fail)?;
        m.session = id;
        let mut seed = [0u8; 32];
        match &mut self.seeds {
            Some(d) => d.fill_bytes(&mut seed),
            None => OsRng.fill_bytes(&mut seed),
        }
        let party = Party::offline(s.role, m, &mut stp, peer, &Seed(seed)).map_err(offline_fail)?;
        self.offline_ms += t.elapsed().as_secs_f64() * 1e3;
        self.sessions.push(id.to_hex());
        Ok(party)
    }

    /// Take the peer channel back after a session's online phase.
    pub fn finish(&mut self, party: Party) {
        self.peer = Some(party.ch);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseBytes {
    pub sent: Counter,
    pub received: Counter,
}

impl PhaseBytes {
    pub fn of(snap: &LedgerSnapshot, phase: Phase) -> Self {
        PhaseBytes {
            sent: snap.total(phase, Direction::Sent),
            received: snap.total(phase, Direction::Received),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WallClock {
    pub offline_ms: f64,
    pub online_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RingReport {
    pub l: u8,
    pub alpha: u8,
    pub beta: u8,
}

/// Everything a run reports. Byte counts come straight from the ledger.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub program: String,
    pub role: u8,
    pub sessions: Vec<String>,
    pub ring: RingReport,
    pub profile: hybrid2pc::ml::Profile,
    pub cipher: &'static str,
    pub offline: PhaseBytes,
    pub online: PhaseBytes,
    /// Online flights this party sent, and runs of frames it received.
    pub rounds: u64,
    pub wall_clock: WallClock,
    pub result: serde_json::Value,
}

impl Report {
    pub fn build(program: &str, link: &Link, online_ms: f64, result: serde_json::Value) -> Self {
        let snap = link.ledger.snapshot();
        let s = &link.settings;
        let online = PhaseBytes::of(&snap, Phase::Online);
        Report {
            program: program.into(),
            role: s.role,
            sessions: link.sessions.clone(),
            ring: RingReport {
                l: s.ring.l(),
                alpha: s.ring.alpha(),
                beta: s.ring.beta(),
            },
            profile: s.profile,
            cipher: match s.mode {
                hybrid2pc::transport::CipherMode::Null => "null",
                hybrid2pc::transport::CipherMode::Aead { .. } => "aes-256-gcm",
            },
            rounds: online.sent.flights.max(online.received.flights),
            offline: PhaseBytes::of(&snap, Phase::Offline),
            online,
            wall_clock: WallClock {
                offline_ms: link.offline_ms,
                online_ms,
                total_ms: link.offline_ms + online_ms,
            },
            result,
        }
    }

    pub fn text(&self) -> String {
        format!(
            "role {} {} sessions={}\n  offline: sent {} B, received {} B\n  online:  sent {} B, received {} B, rounds {}\n  time: offline {:.1} ms, online {:.1} ms",
            self.role,
            self.program,
            self.sessions.len(),
            self.offline.sent.payload_bytes,
            self.offline.received.payload_bytes,
            self.online.sent.payload_bytes,
            self.online.received.payload_bytes,
            self.rounds,
            self.wall_clock.offline_ms,
            self.wall_clock.online_ms,
        )
    }
}
