//! A party's protocol state and an in-process harness that runs both parties
//! and the dealer on threads, over memory channels or TCP loopback.

use std::net::TcpListener;
use std::sync::Arc;

use rand::rngs::OsRng;

use crate::correlated::Block;
use crate::drbg::{Drbg, Seed};
use crate::error::{Error, Result};
use crate::manifest::ResourceManifest;
use crate::pools::Pools;
use crate::ring::RingParams;
use crate::stp::{request_bundle, Stp, StpConfig};
use crate::transport::{ByteLedger, Channel, CipherMode, Phase, SessionId};

/// Who learns a revealed value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reveal {
    To(u8),
    Both,
}

impl Reveal {
    pub fn includes(&self, role: u8) -> bool {
        match self {
            Reveal::To(r) => *r == role,
            Reveal::Both => true,
        }
    }
}

/// Garbling state kept across circuits of one session so that label-based
/// shares produced by one circuit can feed the next.
#[derive(Debug, Clone, Copy)]
pub struct GcState {
    /// Global free-XOR offset (garbler only), with the low bit set.
    pub delta: Block,
    /// Count of AND gate instances garbled or evaluated so far.
    pub serial: u64,
}

/// One party of a two-party session. Role 0 is the server: garbler and OT
/// sender. Role 1 is the client: evaluator and OT receiver.
pub struct Party {
    pub role: u8,
    pub ring: RingParams,
    pub ch: Channel,
    pub pools: Pools,
    pub rng: Drbg,
    pub gc: GcState,
}

impl Party {
    pub fn new(role: u8, ring: RingParams, ch: Channel, pools: Pools, rng_seed: &Seed) -> Self {
        let mut rng = Drbg::new(rng_seed, b"local");
        let delta = if role == 0 { rng.next_u128() | 1 } else { 0 };
        Party {
            role,
            ring,
            ch,
            pools,
            rng,
            gc: GcState { delta, serial: 0 },
        }
    }

    /// Run the offline phase against the dealer, then switch `peer` to the online phase.
    pub fn offline(
        role: u8,
        m: &ResourceManifest,
        stp: &mut Channel,
        mut peer: Channel,
        rng_seed: &Seed,
    ) -> Result<Self> {
        let bundle = request_bundle(stp, m, role)?;
        let pools = bundle.expand(m)?;
        peer.set_session(m.session);
        peer.phase_mark(Phase::Online);
        Ok(Party::new(role, m.ring, peer, pools, rng_seed))
    }

    pub fn is_garbler(&self) -> bool {
        self.role == 0
    }
}

/// Agree on a session id over the peer channel: role 0 picks it (or uses
/// `fixed`) and announces it in an empty `HELLO` frame.
pub fn open_session(peer: &mut Channel, role: u8, fixed: Option<SessionId>) -> Result<SessionId> {
    peer.phase_mark(Phase::Offline);
    if role == 0 {
        let id = fixed.unwrap_or_else(|| SessionId::random(&mut OsRng));
        peer.set_session(id);
        peer.send(crate::transport::msg::HELLO, vec![])?;
        Ok(id)
    } else {
        let f = peer.recv()?;
        if f.msg_type != crate::transport::msg::HELLO {
            return Err(Error::UnexpectedMessage {
                expected: crate::transport::msg::HELLO,
                got: f.msg_type,
            });
        }
        if f.session.is_zero() || fixed.is_some_and(|s| s != f.session) {
            return Err(Error::Malformed("peer announced an unexpected session id".into()));
        }
        peer.set_session(f.session);
        Ok(f.session)
    }
}

#[derive(Clone, Debug)]
pub struct LocalOptions {
    pub mode: CipherMode,
    /// Seeds for each party's private randomness; random when `None`.
    pub rng_seeds: Option<(Seed, Seed)>,
    /// Connect all three parties over TCP loopback instead of memory channels.
    pub tcp: bool,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            mode: CipherMode::Null,
            rng_seeds: None,
            tcp: false,
        }
    }
}

pub struct LocalRun<R0, R1> {
    pub out0: R0,
    pub out1: R1,
    pub ledger0: Arc<ByteLedger>,
    pub ledger1: Arc<ByteLedger>,
}

/// Run both parties and an in-process dealer. Each closure receives its
/// party after the offline phase.
pub fn run_local<R0, R1, F0, F1>(m: &ResourceManifest, f0: F0, f1: F1) -> Result<LocalRun<R0, R1>>
where
    R0: Send,
    R1: Send,
    F0: FnOnce(&mut Party) -> Result<R0> + Send,
    F1: FnOnce(&mut Party) -> Result<R1> + Send,
{
    run_local_with(m, &LocalOptions::default(), f0, f1)
}

pub fn run_local_with<R0, R1, F0, F1>(
    m: &ResourceManifest,
    opts: &LocalOptions,
    f0: F0,
    f1: F1,
) -> Result<LocalRun<R0, R1>>
where
    R0: Send,
    R1: Send,
    F0: FnOnce(&mut Party) -> Result<R0> + Send,
    F1: FnOnce(&mut Party) -> Result<R1> + Send,
{
    let mut m = m.clone();
    if m.session.is_zero() {
        m.session = SessionId::random(&mut OsRng);
    }
    let (s0, s1) = opts
        .rng_seeds
        .unwrap_or_else(|| (Seed::random(&mut OsRng), Seed::random(&mut OsRng)));
    let stp = Stp::new(StpConfig::default());
    let (l0, l1, ls) = (
        Arc::new(ByteLedger::new()),
        Arc::new(ByteLedger::new()),
        Arc::new(ByteLedger::new()),
    );
    let m = &m;
    let (r0, r1) = if opts.tcp {
        let stp_l = TcpListener::bind("127.0.0.1:0")?;
        let peer_l = TcpListener::bind("127.0.0.1:0")?;
        let (stp_addr, peer_addr) = (stp_l.local_addr()?, peer_l.local_addr()?);
        let mode = &opts.mode;
        std::thread::scope(|s| {
            let stp = &stp;
            for _ in 0..2 {
                let (conn, ls) = (stp_l.try_clone(), ls.clone());
                s.spawn(move || -> Result<()> {
                    let (stream, _) = conn?.accept()?;
                    stp.handle(Channel::from_tcp(stream, false, mode, "party", ls)?)
                });
            }
            let (l0, l1) = (l0.clone(), l1.clone());
            let h0 = s.spawn(move || {
                let mut stp_ch = Channel::connect(stp_addr, mode, "stp", l0.clone())?;
                let (stream, _) = peer_l.accept()?;
                let peer = Channel::from_tcp(stream, false, mode, "peer", l0)?;
                let mut p = Party::offline(0, m, &mut stp_ch, peer, &s0)?;
                f0(&mut p)
            });
            let h1 = s.spawn(move || {
                let mut stp_ch = Channel::connect(stp_addr, mode, "stp", l1.clone())?;
                let peer = Channel::connect(peer_addr, mode, "peer", l1)?;
                let mut p = Party::offline(1, m, &mut stp_ch, peer, &s1)?;
                f1(&mut p)
            });
            (
                h0.join().unwrap_or_else(|_| Err(Error::Disconnected)),
                h1.join().unwrap_or_else(|_| Err(Error::Disconnected)),
            )
        })
    } else {
        let (p0_stp, stp_p0) = Channel::mem_pair(&opts.mode, ("stp", "party0"), (l0.clone(), ls.clone()));
        let (p1_stp, stp_p1) = Channel::mem_pair(&opts.mode, ("stp", "party1"), (l1.clone(), ls));
        let (c0, c1) = Channel::mem_pair(&opts.mode, ("peer", "peer"), (l0.clone(), l1.clone()));
        std::thread::scope(|s| {
            let stp = &stp;
            s.spawn(move || stp.handle(stp_p0));
            s.spawn(move || stp.handle(stp_p1));
            let h0 = s.spawn(move || {
                let mut stp_ch = p0_stp;
                let mut p = Party::offline(0, m, &mut stp_ch, c0, &s0)?;
                f0(&mut p)
            });
            let h1 = s.spawn(move || {
                let mut stp_ch = p1_stp;
                let mut p = Party::offline(1, m, &mut stp_ch, c1, &s1)?;
                f1(&mut p)
            });
            (
                h0.join().unwrap_or_else(|_| Err(Error::Disconnected)),
                h1.join().unwrap_or_else(|_| Err(Error::Disconnected)),
            )
        })
    };
    // Report the root cause rather than the peer's resulting disconnect.
    let (out0, out1) = match (r0, r1) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::Disconnected), Err(e)) | (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(LocalRun {
        out0,
        out1,
        ledger0: l0,
        ledger1: l1,
    })
}
