use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Offline,
    Online,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sent,
    Received,
}

/// Traffic counters for one `(phase, direction, peer)` key.
///
/// `payload_bytes` is protocol data only; framing, control prefixes and
/// cipher expansion go to `overhead_bytes`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counter {
    pub payload_bytes: u64,
    pub overhead_bytes: u64,
    pub messages: u64,
    /// Runs of consecutive sends not interrupted by a receive.
    pub flights: u64,
}

impl Counter {
    pub fn total_bytes(&self) -> u64 {
        self.payload_bytes + self.overhead_bytes
    }

    fn add(&mut self, o: &Counter) {
        self.payload_bytes += o.payload_bytes;
        self.overhead_bytes += o.overhead_bytes;
        self.messages += o.messages;
        self.flights += o.flights;
    }

    fn sub(&self, o: &Counter) -> Counter {
        Counter {
            payload_bytes: self.payload_bytes - o.payload_bytes,
            overhead_bytes: self.overhead_bytes - o.overhead_bytes,
            messages: self.messages - o.messages,
            flights: self.flights - o.flights,
        }
    }
}

pub type LedgerKey = (Phase, Direction, String);

/// Monotone per-party traffic ledger, shared by all of a party's channels.
#[derive(Debug, Default)]
pub struct ByteLedger {
    inner: Mutex<BTreeMap<LedgerKey, Counter>>,
    by_type: Mutex<BTreeMap<(Direction, u8), u64>>,
}

impl ByteLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn record(&self, phase: Phase, dir: Direction, peer: &str, msg_type: u8, delta: Counter) {
        self.inner
            .lock()
            .unwrap()
            .entry((phase, dir, peer.to_string()))
            .or_default()
            .add(&delta);
        *self.by_type.lock().unwrap().entry((dir, msg_type)).or_default() += delta.payload_bytes;
    }

    /// Counter for one key; zero for peers never seen.
    pub fn get(&self, phase: Phase, dir: Direction, peer: &str) -> Counter {
        self.inner
            .lock()
            .unwrap()
            .get(&(phase, dir, peer.to_string()))
            .copied()
            .unwrap_or_default()
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            counters: self.inner.lock().unwrap().clone(),
            by_type: self.by_type.lock().unwrap().clone(),
        }
    }
}

/// Point-in-time copy of a ledger; differences measure a protocol section.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LedgerSnapshot {
    pub counters: BTreeMap<LedgerKey, Counter>,
    pub by_type: BTreeMap<(Direction, u8), u64>,
}

impl LedgerSnapshot {
    pub fn get(&self, phase: Phase, dir: Direction, peer: &str) -> Counter {
        self.counters
            .get(&(phase, dir, peer.to_string()))
            .copied()
            .unwrap_or_default()
    }

    /// Sum over all peers.
    pub fn total(&self, phase: Phase, dir: Direction) -> Counter {
        let mut c = Counter::default();
        for ((p, d, _), v) in &self.counters {
            if *p == phase && *d == dir {
                c.add(v);
            }
        }
        c
    }

    /// Payload bytes for a message type in one direction.
    pub fn type_bytes(&self, dir: Direction, msg_type: u8) -> u64 {
        self.by_type.get(&(dir, msg_type)).copied().unwrap_or(0)
    }

    /// `self - earlier`, key by key.
    pub fn since(&self, earlier: &LedgerSnapshot) -> LedgerSnapshot {
        let mut counters = BTreeMap::new();
        for (k, v) in &self.counters {
            let base = earlier.counters.get(k).copied().unwrap_or_default();
            counters.insert(k.clone(), v.sub(&base));
        }
        let mut by_type = BTreeMap::new();
        for (k, v) in &self.by_type {
            by_type.insert(*k, v - earlier.by_type.get(k).copied().unwrap_or(0));
        }
        LedgerSnapshot { counters, by_type }
    }

    /// Message types that carried payload in a direction.
    pub fn types_used(&self, dir: Direction) -> Vec<u8> {
        self.by_type
            .iter()
            .filter(|((d, _), v)| *d == dir && **v > 0)
            .map(|((_, t), _)| *t)
            .collect()
    }
}
