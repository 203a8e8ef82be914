//! Atomic-operation benchmarks: `n` parallel instances of one primitive on
//! random shared operands, with the measured traffic next to its closed form.

use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use serde::Serialize;

use crate::ass::{mul_da, mul_mt};
use crate::bits::{bits_word, word_bits};
use crate::circuit::library::{build_cmp, build_eq, build_mux, Variant};
use crate::circuit::{Builder, Circuit};
use crate::convert::{a2y, b2a, b2y, y2b};
use crate::correlated::{Bits, Block};
use crate::error::{Error, Result};
use crate::gc::{gc_run, tables_per_cycle};
use crate::gmw::gmw_eval;
use crate::manifest::ResourceManifest;
use crate::ring::RingParams;
use crate::session::{run_local_with, LocalOptions, Party, Reveal};
use crate::transport::{msg, Counter, Direction, LedgerSnapshot, Phase};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomicOp {
    Add,
    Mult,
    /// Multiplication of a cleartext by a shared value via Du-Atallah.
    MultDa,
    Xor,
    And,
    Cmp,
    Eq,
    Mux,
    Y2b,
    B2y,
    B2a,
    A2y,
}

impl AtomicOp {
    pub const ALL: [AtomicOp; 12] = [
        AtomicOp::Add,
        AtomicOp::Mult,
        AtomicOp::MultDa,
        AtomicOp::Xor,
        AtomicOp::And,
        AtomicOp::Cmp,
        AtomicOp::Eq,
        AtomicOp::Mux,
        AtomicOp::Y2b,
        AtomicOp::B2y,
        AtomicOp::B2a,
        AtomicOp::A2y,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AtomicOp::Add => "add",
            AtomicOp::Mult => "mult",
            AtomicOp::MultDa => "mult-da",
            AtomicOp::Xor => "xor",
            AtomicOp::And => "and",
            AtomicOp::Cmp => "cmp",
            AtomicOp::Eq => "eq",
            AtomicOp::Mux => "mux",
            AtomicOp::Y2b => "y2b",
            AtomicOp::B2y => "b2y",
            AtomicOp::B2a => "b2a",
            AtomicOp::A2y => "a2y",
        }
    }

    /// Ops evaluated as a Boolean circuit, under either engine.
    pub fn is_boolean(&self) -> bool {
        matches!(self, AtomicOp::Xor | AtomicOp::And | AtomicOp::Cmp | AtomicOp::Eq | AtomicOp::Mux)
    }
}

impl FromStr for AtomicOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AtomicOp::ALL
            .into_iter()
            .find(|o| o.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Model(format!("unknown op {s}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Arith,
    Gmw,
    Gc,
    Convert,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpReport {
    pub op: AtomicOp,
    pub engine: Engine,
    pub n: usize,
    pub width: usize,
    /// Bundle payload delivered to both parties.
    pub offline_bytes: u64,
    /// Online payload sent by role 0 and role 1.
    pub online_sent: [u64; 2],
    pub expected_sent: [u64; 2],
    /// Garbled-table payload (GC only).
    pub table_bytes: u64,
    pub expected_table_bytes: u64,
    /// Flights of the busier party.
    pub rounds: u64,
    /// Online messages sent by both parties.
    pub messages: u64,
    pub and_gates: usize,
    pub and_depth: usize,
    pub online_ms: f64,
    /// Outputs reconstructed to the expected values.
    pub correct: bool,
}

impl OpReport {
    pub fn online_total(&self) -> u64 {
        self.online_sent[0] + self.online_sent[1]
    }

    pub fn matches_closed_form(&self) -> bool {
        self.online_sent == self.expected_sent && self.table_bytes == self.expected_table_bytes
    }
}

fn xor_circuit(w: usize) -> Circuit {
    let mut b = Builder::new();
    let x = b.input(0, w);
    let y = b.input(1, w);
    let out = x.iter().zip(&y).map(|(&a, &c)| b.xor(a, c)).collect();
    b.finish(&format!("xor{w}"), out)
}

fn and_circuit(w: usize) -> Circuit {
    let mut b = Builder::new();
    let x = b.input(0, w);
    let y = b.input(1, w);
    let out = x.iter().zip(&y).map(|(&a, &c)| b.and(a, c)).collect();
    b.finish(&format!("and{w}"), out)
}

/// The `n`-fold circuit for a Boolean op. GMW uses the low-depth variants.
pub fn op_circuit(op: AtomicOp, engine: Engine, n: usize, w: usize) -> Result<Circuit> {
    let v = if engine == Engine::Gmw { Variant::Depth } else { Variant::Size };
    let c = match op {
        AtomicOp::Xor => xor_circuit(w),
        AtomicOp::And => and_circuit(w),
        AtomicOp::Cmp => build_cmp(w, v)?,
        AtomicOp::Eq => build_eq(w)?,
        AtomicOp::Mux => build_mux(w)?,
        _ => return Err(Error::Model(format!("{} is not a Boolean op", op.name()))),
    };
    Ok(c.replicate(n))
}

fn random_bits(rng: &mut impl RngCore, n: usize) -> Bits {
    (0..n).map(|_| rng.next_u32() & 1 == 1).collect()
}

fn random_words(rng: &mut impl RngCore, n: usize, p: RingParams) -> Vec<u64> {
    (0..n).map(|_| p.reduce(rng.next_u64())).collect()
}

fn bytes(bits: usize) -> u64 {
    bits.div_ceil(8) as u64
}

/// Closed-form online payload per direction and garbled-table bytes.
pub fn closed_form(op: AtomicOp, engine: Engine, n: usize, w: usize) -> Result<([u64; 2], u64)> {
    let nw = n * w;
    Ok(match op {
        AtomicOp::Add | AtomicOp::Y2b => ([0, 0], 0),
        AtomicOp::Mult => ([bytes(2 * nw); 2], 0),
        AtomicOp::MultDa => ([bytes(nw); 2], 0),
        AtomicOp::B2y => ([32 * nw as u64, bytes(nw)], 0),
        AtomicOp::B2a => ([bytes(2 * nw * w), bytes(nw)], 0),
        AtomicOp::A2y => {
            let adder = crate::circuit::library::build_share_adder(w, 0, Variant::Depth)?.replicate(n);
            let t = 16 * tables_per_cycle(&adder, 0, 1) as u64;
            ([32 * nw as u64 + 16 * nw as u64 + t, bytes(nw)], t)
        }
        _ => {
            let c = op_circuit(op, engine, n, w)?;
            match engine {
                Engine::Gmw => {
                    let lc = c.levelize();
                    let per: u64 = lc.and_levels.iter().map(|l| bytes(2 * l.len())).sum();
                    ([per, per], 0)
                }
                Engine::Gc => {
                    let (n0, n1) = (c.inputs[0].len(), c.inputs[1].len());
                    let t = 16 * tables_per_cycle(&c, 0, 1) as u64;
                    let garbler = 32 * n1 as u64 + 16 * n0 as u64 + t + bytes(c.outputs.len());
                    ([garbler, bytes(n1)], t)
                }
                _ => return Err(Error::Model("Boolean ops run under gmw or gc".into())),
            }
        }
    })
}

/// What a party's closure hands back: its local view, for checking outside.
struct View {
    inputs: Vec<Bits>,
    arith_in: Vec<Vec<u64>>,
    out_bits: Bits,
    out_arith: Vec<u64>,
    window: (LedgerSnapshot, LedgerSnapshot),
    ms: f64,
}

fn party_run(party: &mut Party, op: AtomicOp, engine: Engine, n: usize, c: Option<&Circuit>) -> Result<View> {
    let p = party.ring;
    let l = p.l() as usize;
    let role = party.role;
    let mut v = View {
        inputs: vec![],
        arith_in: vec![],
        out_bits: Bits::new(),
        out_arith: vec![],
        window: (party.ch.ledger().snapshot(), party.ch.ledger().snapshot()),
        ms: 0.0,
    };
    // Operand preparation happens before the measurement window opens.
    let mut pre_labels: Vec<Block> = vec![];
    match op {
        AtomicOp::Add | AtomicOp::Mult | AtomicOp::MultDa | AtomicOp::A2y => {
            v.arith_in = vec![random_words(&mut party.rng, n, p), random_words(&mut party.rng, n, p)];
        }
        AtomicOp::B2y | AtomicOp::B2a => v.inputs = vec![random_bits(&mut party.rng, n * l)],
        AtomicOp::Y2b => {
            v.inputs = vec![random_bits(&mut party.rng, n * l)];
            pre_labels = b2y(party, &v.inputs[0])?;
        }
        _ => {
            let c = c.expect("Boolean op without circuit");
            let len = if engine == Engine::Gmw {
                c.input_len()
            } else {
                c.inputs[role as usize].len()
            };
            v.inputs = vec![random_bits(&mut party.rng, len)];
        }
    }
    let lc = c.filter(|_| engine == Engine::Gmw).map(|c| c.levelize());
    let start_snap = party.ch.ledger().snapshot();
    let t0 = Instant::now();
    match op {
        AtomicOp::Add => {
            v.out_arith = v.arith_in[0].iter().zip(&v.arith_in[1]).map(|(&a, &b)| p.add(a, b)).collect();
        }
        AtomicOp::Mult => v.out_arith = mul_mt(party, &v.arith_in[0], &v.arith_in[1])?,
        AtomicOp::MultDa => {
            let x = (role == 0).then(|| v.arith_in[0].clone());
            v.out_arith = mul_da(party, x.as_deref(), &v.arith_in[1])?;
        }
        AtomicOp::Y2b => v.out_bits = y2b(&pre_labels),
        AtomicOp::B2y => {
            let labels = b2y(party, &v.inputs[0])?;
            v.out_bits = y2b(&labels);
        }
        AtomicOp::B2a => v.out_arith = b2a(party, &v.inputs[0])?,
        AtomicOp::A2y => v.out_bits = y2b(&a2y(party, &v.arith_in[0], 0)?),
        _ => {
            let c = c.unwrap();
            if let Some(lc) = &lc {
                v.out_bits = gmw_eval(party, lc, &v.inputs)?.pop().unwrap();
            } else if let Some(mut o) = gc_run(party, c, &v.inputs, Reveal::To(1))? {
                v.out_bits = o.pop().unwrap();
            }
        }
    }
    v.ms = t0.elapsed().as_secs_f64() * 1e3;
    v.window = (start_snap, party.ch.ledger().snapshot());
    Ok(v)
}

pub fn op_manifest(op: AtomicOp, engine: Engine, n: usize, ring: RingParams, c: Option<&Circuit>) -> ResourceManifest {
    let mut m = ResourceManifest::new(ring);
    let nl = (n * ring.l() as usize) as u64;
    match op {
        AtomicOp::Add => {}
        AtomicOp::Mult => m.num_amt = n as u64,
        AtomicOp::MultDa => m.vdp_lengths = vec![1; n],
        AtomicOp::Y2b | AtomicOp::B2y | AtomicOp::B2a | AtomicOp::A2y => m.num_ot = nl,
        _ => {
            let c = c.unwrap();
            if engine == Engine::Gmw {
                m.num_bmt = c.and_count() as u64;
            } else {
                m.num_ot = c.inputs[1].len() as u64;
            }
        }
    }
    m
}

fn words_of(bits: &Bits, w: usize) -> Vec<u64> {
    let v: Vec<bool> = bits.iter().by_vals().collect();
    v.chunks(w).map(bits_word).collect()
}

fn check(op: AtomicOp, engine: Engine, ring: RingParams, c: Option<&Circuit>, v0: &View, v1: &View) -> Result<bool> {
    let p = ring;
    let l = p.l() as usize;
    let sum = |a: &[u64], b: &[u64]| -> Vec<u64> { a.iter().zip(b).map(|(&x, &y)| p.add(x, y)).collect() };
    Ok(match op {
        AtomicOp::Add => {
            let want = sum(&sum(&v0.arith_in[0], &v1.arith_in[0]), &sum(&v0.arith_in[1], &v1.arith_in[1]));
            sum(&v0.out_arith, &v1.out_arith) == want
        }
        AtomicOp::Mult => {
            let x = sum(&v0.arith_in[0], &v1.arith_in[0]);
            let y = sum(&v0.arith_in[1], &v1.arith_in[1]);
            let want: Vec<u64> = x.iter().zip(&y).map(|(&a, &b)| p.mul(a, b)).collect();
            sum(&v0.out_arith, &v1.out_arith) == want
        }
        AtomicOp::MultDa => {
            let y = sum(&v0.arith_in[1], &v1.arith_in[1]);
            let want: Vec<u64> = v0.arith_in[0].iter().zip(&y).map(|(&a, &b)| p.mul(a, b)).collect();
            sum(&v0.out_arith, &v1.out_arith) == want
        }
        AtomicOp::Y2b | AtomicOp::B2y => (v0.out_bits.clone() ^ &v1.out_bits) == (v0.inputs[0].clone() ^ &v1.inputs[0]),
        AtomicOp::B2a => {
            let x = words_of(&(v0.inputs[0].clone() ^ &v1.inputs[0]), l);
            sum(&v0.out_arith, &v1.out_arith) == x
        }
        AtomicOp::A2y => {
            let want: Bits = sum(&v0.arith_in[0], &v1.arith_in[0])
                .into_iter()
                .flat_map(|x| word_bits(x, l))
                .collect();
            (v0.out_bits.clone() ^ &v1.out_bits) == want
        }
        _ => {
            let c = c.unwrap();
            let (inputs, got) = if engine == Engine::Gmw {
                (v0.inputs[0].clone() ^ &v1.inputs[0], v0.out_bits.clone() ^ &v1.out_bits)
            } else {
                let mut x = v0.inputs[0].clone();
                x.extend_from_bitslice(&v1.inputs[0]);
                (x, v1.out_bits.clone())
            };
            let x: Vec<bool> = inputs.iter().by_vals().collect();
            let want: Bits = c.eval(&x)?.into_iter().collect();
            got == want
        }
    })
}

/// The engine an op actually runs under: Boolean ops take `engine`
/// (GMW or GC), the others have a fixed protocol.
pub fn effective_engine(op: AtomicOp, engine: Engine) -> Result<Engine> {
    Ok(if op.is_boolean() {
        if !matches!(engine, Engine::Gmw | Engine::Gc) {
            return Err(Error::Model("Boolean ops run under gmw or gc".into()));
        }
        engine
    } else if matches!(op, AtomicOp::Add | AtomicOp::Mult | AtomicOp::MultDa) {
        Engine::Arith
    } else {
        Engine::Convert
    })
}

/// Circuit and manifest for one op, identical at both parties.
pub fn plan_op(op: AtomicOp, engine: Engine, n: usize, ring: RingParams) -> Result<(Option<Circuit>, ResourceManifest)> {
    let engine = effective_engine(op, engine)?;
    let c = if op.is_boolean() {
        Some(op_circuit(op, engine, n, ring.l() as usize)?)
    } else {
        None
    };
    let m = op_manifest(op, engine, n, ring, c.as_ref());
    Ok((c, m))
}

/// One party's measurement of an op it ran against a remote peer.
#[derive(Clone, Debug, Serialize)]
pub struct PartyMeasure {
    pub op: AtomicOp,
    pub engine: Engine,
    pub n: usize,
    pub sent: Counter,
    pub received: Counter,
    /// Closed-form payload this party should send.
    pub expected_sent: u64,
    pub online_ms: f64,
}

/// Run `op` on random operands against the peer on `party.ch`. `c` must come from [`plan_op`].
pub fn run_party_op(party: &mut Party, op: AtomicOp, engine: Engine, n: usize, c: Option<&Circuit>) -> Result<PartyMeasure> {
    let engine = effective_engine(op, engine)?;
    let v = party_run(party, op, engine, n, c)?;
    let d = v.window.1.since(&v.window.0);
    let (expected, _) = closed_form(op, engine, n, party.ring.l() as usize)?;
    Ok(PartyMeasure {
        op,
        engine,
        n,
        sent: d.total(Phase::Online, Direction::Sent),
        received: d.total(Phase::Online, Direction::Received),
        expected_sent: expected[party.role as usize],
        online_ms: v.ms,
    })
}

/// Run one op over `n` parallel instances in a fresh local session.
pub fn run_op(op: AtomicOp, engine: Engine, n: usize, ring: RingParams, opts: &LocalOptions) -> Result<OpReport> {
    let w = ring.l() as usize;
    let engine = effective_engine(op, engine)?;
    let (c, m) = plan_op(op, engine, n, ring)?;
    let cr = c.as_ref();
    let run = run_local_with(
        &m,
        opts,
        |p| party_run(p, op, engine, n, cr),
        |p| party_run(p, op, engine, n, cr),
    )?;
    let (v0, v1) = (&run.out0, &run.out1);
    let sent = |v: &View| v.window.1.since(&v.window.0).total(Phase::Online, Direction::Sent);
    let (s0, s1) = (sent(v0), sent(v1));
    let offline = |l: &crate::transport::ByteLedger| l.snapshot().total(Phase::Offline, Direction::Received).payload_bytes;
    let (expected_sent, expected_table_bytes) = closed_form(op, engine, n, w)?;
    let (and_gates, and_depth) = match (&c, op) {
        (Some(c), _) => (c.and_count(), c.levelize().and_levels.len()),
        (None, AtomicOp::A2y) => {
            let a = crate::circuit::library::build_share_adder(w, 0, Variant::Depth)?;
            (a.and_count() * n, a.levelize().and_levels.len())
        }
        _ => (0, 0),
    };
    Ok(OpReport {
        op,
        engine,
        n,
        width: w,
        offline_bytes: offline(&run.ledger0) + offline(&run.ledger1),
        online_sent: [s0.payload_bytes, s1.payload_bytes],
        expected_sent,
        table_bytes: v0.window.1.since(&v0.window.0).type_bytes(Direction::Sent, msg::GC_TABLES),
        expected_table_bytes,
        rounds: s0.flights.max(s1.flights),
        messages: s0.messages + s1.messages,
        and_gates,
        and_depth,
        online_ms: v0.ms.max(v1.ms),
        correct: check(op, engine, ring, cr, v0, v1)?,
    })
}

/// The default suite: every op at `n` instances, Boolean ops under `engine`.
pub fn run_suite(engine: Engine, n: usize, ring: RingParams, opts: &LocalOptions) -> Result<Vec<OpReport>> {
    AtomicOp::ALL.iter().map(|&op| run_op(op, engine, n, ring, opts)).collect()
}

/// One fixed-width table row per report.
pub fn format_row(r: &OpReport) -> String {
    format!(
        "{:<8} {:<7} {:>6} {:>12} {:>12} {:>12} {:>12} {:>6} {:>10.2} {}",
        r.op.name(),
        format!("{:?}", r.engine).to_lowercase(),
        r.n,
        r.offline_bytes,
        r.online_sent[0],
        r.online_sent[1],
        r.table_bytes,
        r.rounds,
        r.online_ms,
        if r.correct && r.matches_closed_form() { "ok" } else { "MISMATCH" }
    )
}

pub fn table_header() -> String {
    format!(
        "{:<8} {:<7} {:>6} {:>12} {:>12} {:>12} {:>12} {:>6} {:>10} check",
        "op", "engine", "n", "offline_B", "sent0_B", "sent1_B", "tables_B", "rounds", "ms"
    )
}
