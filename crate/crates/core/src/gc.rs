//! Garbled circuits: free-XOR, point-and-permute, half-gates ANDs and a
//! fixed-key AES hash. Sequential circuits are garbled cycle by cycle with a
//! two-ciphertext translation table per register linking consecutive cycles.
//!
//! A Yao share of a bit is a label: the garbler holds the zero label `K`,
//! the evaluator holds the active label `K ^ x*R`.

use std::sync::OnceLock;

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};
use aes::Aes128;
use rand::RngCore;

use crate::bits::{pack, unpack};
use crate::circuit::{Circuit, Gate};
use crate::correlated::{Bits, Block};
use crate::error::{Error, Result};
use crate::ot::{ot_recv, ot_send, OT_KAPPA};
use crate::session::{Party, Reveal};
use crate::transport::msg;

const FIXED_KEY: [u8; 16] = *b"fixed-key garble";
/// Public labels of the constant wires.
pub const CONST_LABEL: [Block; 2] = [0x5d3c_9b1e_77a0_42f6_0c8e_1d95_b3f7_6a21, 0xa4e1_0f7b_3c92_d856_e17a_4b03_9f6c_25d8];

fn cipher() -> &'static Aes128 {
    static C: OnceLock<Aes128> = OnceLock::new();
    C.get_or_init(|| Aes128::new(GenericArray::from_slice(&FIXED_KEY)))
}

/// `H(X, t) = E(2X ^ t) ^ 2X ^ t`, with `2X` a one-bit left rotation.
pub fn hash(x: Block, t: u128) -> Block {
    let y = x.rotate_left(1) ^ t;
    let mut b = GenericArray::from(y.to_le_bytes());
    cipher().encrypt_block(&mut b);
    u128::from_le_bytes(b.into()) ^ y
}

/// Hash tweak for slot `slot` of cycle `cycle` in circuit instance `serial`.
pub fn tweak(serial: u64, cycle: u32, slot: u32) -> u128 {
    (serial as u128) << 64 | (cycle as u128) << 32 | slot as u128
}

fn lsb(x: Block) -> bool {
    x & 1 == 1
}

fn sel(b: bool, x: Block) -> Block {
    if b {
        x
    } else {
        0
    }
}

/// Ciphertexts sent by the garbler for one cycle: two per AND gate in gate
/// order, then two per register except after the last cycle.
pub type CycleTables = Vec<Block>;

pub fn tables_per_cycle(c: &Circuit, cycle: usize, cycles: usize) -> usize {
    let regs = if cycle + 1 < cycles { c.registers.len() } else { 0 };
    2 * (c.and_count() + regs)
}

fn garble_and(a0: Block, b0: Block, delta: Block, j0: u128, j1: u128) -> (Block, [Block; 2]) {
    let (pa, pb) = (lsb(a0), lsb(b0));
    let (ha0, ha1) = (hash(a0, j0), hash(a0 ^ delta, j0));
    let (hb0, hb1) = (hash(b0, j1), hash(b0 ^ delta, j1));
    let tg = ha0 ^ ha1 ^ sel(pb, delta);
    let te = hb0 ^ hb1 ^ a0;
    let w0 = ha0 ^ sel(pa, tg) ^ hb0 ^ sel(pb, te ^ a0);
    (w0, [tg, te])
}

fn eval_and(a: Block, b: Block, t: [Block; 2], j0: u128, j1: u128) -> Block {
    hash(a, j0) ^ sel(lsb(a), t[0]) ^ hash(b, j1) ^ sel(lsb(b), t[1] ^ a)
}

/// Garble `inputs.len()` cycles. `inputs[c]` holds the zero labels of the
/// `IN0 || IN1` wires for cycle `c`; fresh register labels come from `rng`.
/// Returns the tables and the output zero labels per cycle.
pub fn gc_garble<R: RngCore>(
    c: &Circuit,
    delta: Block,
    serial: u64,
    inputs: &[Vec<Block>],
    rng: &mut R,
) -> Result<(Vec<CycleTables>, Vec<Vec<Block>>)> {
    let cycles = inputs.len();
    let mut lab = vec![0 as Block; c.num_wires as usize];
    lab[0] = CONST_LABEL[0];
    lab[1] = CONST_LABEL[1] ^ delta;
    for r in &c.registers {
        lab[r.q as usize] = lab[r.init as usize];
    }
    let mut tables = Vec::with_capacity(cycles);
    let mut outs = Vec::with_capacity(cycles);
    for (cy, x) in inputs.iter().enumerate() {
        if x.len() != c.input_len() {
            return Err(Error::WidthMismatch {
                expected: c.input_len(),
                got: x.len(),
            });
        }
        for (w, l) in c.inputs.iter().flatten().zip(x) {
            lab[*w as usize] = *l;
        }
        let mut t = Vec::with_capacity(tables_per_cycle(c, cy, cycles));
        let mut slot = 0u32;
        for g in &c.gates {
            match *g {
                Gate::Xor { a, b, out } => lab[out as usize] = lab[a as usize] ^ lab[b as usize],
                Gate::Not { a, out } => lab[out as usize] = lab[a as usize] ^ delta,
                Gate::And { a, b, out } => {
                    let j0 = tweak(serial, cy as u32, slot);
                    let j1 = tweak(serial, cy as u32, slot + 1);
                    let (w0, tt) = garble_and(lab[a as usize], lab[b as usize], delta, j0, j1);
                    lab[out as usize] = w0;
                    t.extend(tt);
                    slot += 2;
                }
            }
        }
        outs.push(c.outputs.iter().map(|w| lab[*w as usize]).collect());
        if cy + 1 < cycles {
            let next: Vec<(Block, Block)> = c
                .registers
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let d0 = lab[r.d as usize];
                    let q0 = random_block(rng);
                    let j = tweak(serial, cy as u32, slot + i as u32);
                    let row0 = hash(d0, j) ^ q0;
                    let row1 = hash(d0 ^ delta, j) ^ q0 ^ delta;
                    let rows = if lsb(d0) { (row1, row0) } else { (row0, row1) };
                    t.push(rows.0);
                    t.push(rows.1);
                    (r.q as Block, q0)
                })
                .collect();
            for (q, q0) in next {
                lab[q as usize] = q0;
            }
        }
        tables.push(t);
    }
    Ok((tables, outs))
}

/// Evaluate with active labels; mirrors [`gc_garble`].
pub fn gc_evaluate(c: &Circuit, serial: u64, inputs: &[Vec<Block>], tables: &[CycleTables]) -> Result<Vec<Vec<Block>>> {
    let cycles = inputs.len();
    if tables.len() != cycles {
        return Err(Error::WidthMismatch {
            expected: cycles,
            got: tables.len(),
        });
    }
    let mut lab = vec![0 as Block; c.num_wires as usize];
    lab[0] = CONST_LABEL[0];
    lab[1] = CONST_LABEL[1];
    for r in &c.registers {
        lab[r.q as usize] = lab[r.init as usize];
    }
    let mut outs = Vec::with_capacity(cycles);
    for (cy, (x, t)) in inputs.iter().zip(tables).enumerate() {
        if x.len() != c.input_len() {
            return Err(Error::WidthMismatch {
                expected: c.input_len(),
                got: x.len(),
            });
        }
        if t.len() != tables_per_cycle(c, cy, cycles) {
            return Err(Error::Malformed(format!("cycle {cy}: {} ciphertexts", t.len())));
        }
        for (w, l) in c.inputs.iter().flatten().zip(x) {
            lab[*w as usize] = *l;
        }
        let mut slot = 0u32;
        for g in &c.gates {
            match *g {
                Gate::Xor { a, b, out } => lab[out as usize] = lab[a as usize] ^ lab[b as usize],
                Gate::Not { a, out } => lab[out as usize] = lab[a as usize],
                Gate::And { a, b, out } => {
                    let s = slot as usize;
                    let j0 = tweak(serial, cy as u32, slot);
                    let j1 = tweak(serial, cy as u32, slot + 1);
                    lab[out as usize] = eval_and(lab[a as usize], lab[b as usize], [t[s], t[s + 1]], j0, j1);
                    slot += 2;
                }
            }
        }
        outs.push(c.outputs.iter().map(|w| lab[*w as usize]).collect());
        if cy + 1 < cycles {
            let next: Vec<Block> = c
                .registers
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let d = lab[r.d as usize];
                    let j = tweak(serial, cy as u32, slot + i as u32);
                    let row = slot as usize + 2 * i + lsb(d) as usize;
                    hash(d, j) ^ t[row]
                })
                .collect();
            for (r, q) in c.registers.iter().zip(next) {
                lab[r.q as usize] = q;
            }
        }
    }
    Ok(outs)
}

/// Decode bits (LSBs of the zero labels).
pub fn decode_bits(zero: &[Block]) -> Bits {
    zero.iter().map(|&k| lsb(k)).collect()
}

pub fn random_block<R: RngCore + ?Sized>(rng: &mut R) -> Block {
    let mut b = [0u8; 16];
    rng.fill_bytes(&mut b);
    u128::from_le_bytes(b)
}

fn blocks_to_bytes(v: &[Block]) -> Vec<u8> {
    v.iter().flat_map(|b| b.to_le_bytes()).collect()
}

fn blocks_from_bytes(b: &[u8], n: usize) -> Result<Vec<Block>> {
    if b.len() != 16 * n {
        return Err(Error::Malformed(format!("{} label bytes, expected {}", b.len(), 16 * n)));
    }
    Ok(b.chunks_exact(16).map(|c| u128::from_le_bytes(c.try_into().unwrap())).collect())
}

fn require_role(party: &Party, role: u8) -> Result<()> {
    if party.role != role {
        return Err(Error::RoleMismatch);
    }
    Ok(())
}

/// Garbler: fresh labels for its own bits; the active ones go to the evaluator.
/// Returns the zero labels.
pub fn yao_input_garbler(party: &mut Party, bits: &Bits) -> Result<Vec<Block>> {
    require_role(party, 0)?;
    if bits.is_empty() {
        return Ok(vec![]);
    }
    let delta = party.gc.delta;
    let zero: Vec<Block> = (0..bits.len()).map(|_| party.rng.next_u128()).collect();
    let active: Vec<Block> = zero.iter().zip(bits.iter()).map(|(&k, b)| k ^ sel(*b, delta)).collect();
    party.ch.send(msg::GC_INLABELS, blocks_to_bytes(&active))?;
    Ok(zero)
}

/// Evaluator side of [`yao_input_garbler`]: receive `n` active labels.
pub fn yao_input_recv(party: &mut Party, n: usize) -> Result<Vec<Block>> {
    require_role(party, 1)?;
    if n == 0 {
        return Ok(vec![]);
    }
    blocks_from_bytes(&party.ch.recv_expect(msg::GC_INLABELS)?, n)
}

/// Evaluator: obtain active labels for its own bits by OT.
pub fn yao_input_evaluator(party: &mut Party, bits: &Bits) -> Result<Vec<Block>> {
    require_role(party, 1)?;
    ot_recv(&mut party.ch, &mut party.pools.ot_recv, OT_KAPPA, bits)
}

/// Garbler side of [`yao_input_evaluator`]: offer both labels of `n` fresh
/// wires. Returns the zero labels.
pub fn yao_input_send(party: &mut Party, n: usize) -> Result<Vec<Block>> {
    require_role(party, 0)?;
    if n == 0 {
        return Ok(vec![]);
    }
    let delta = party.gc.delta;
    let zero: Vec<Block> = (0..n).map(|_| party.rng.next_u128()).collect();
    let pairs: Vec<[Block; 2]> = zero.iter().map(|&k| [k, k ^ delta]).collect();
    ot_send(&mut party.ch, &mut party.pools.ot_send, OT_KAPPA, &pairs)?;
    Ok(zero)
}

/// Garble (role 0) or evaluate (role 1) on Yao shares. `inputs[c]` holds
/// labels for the `IN0 || IN1` wires of cycle `c`. Each cycle with any
/// ciphertexts is one `GC_TABLES` frame.
pub fn yao_eval(party: &mut Party, c: &Circuit, inputs: &[Vec<Block>]) -> Result<Vec<Vec<Block>>> {
    let serial = party.gc.serial;
    party.gc.serial += 1;
    let cycles = inputs.len();
    if party.role == 0 {
        let delta = party.gc.delta;
        let (tables, outs) = gc_garble(c, delta, serial, inputs, &mut party.rng)?;
        for t in tables {
            if !t.is_empty() {
                party.ch.send(msg::GC_TABLES, blocks_to_bytes(&t))?;
            }
        }
        Ok(outs)
    } else {
        let mut tables = Vec::with_capacity(cycles);
        for cy in 0..cycles {
            let n = tables_per_cycle(c, cy, cycles);
            tables.push(if n == 0 {
                vec![]
            } else {
                blocks_from_bytes(&party.ch.recv_expect(msg::GC_TABLES)?, n)?
            });
        }
        gc_evaluate(c, serial, inputs, &tables)
    }
}

/// Open Yao shares. The garbler's decode bits reach the evaluator in
/// `GC_DECODE`; for the garbler the evaluator returns decoded bits (or, if
/// only the garbler learns, its label LSBs) in `GC_OUTPUT`.
pub fn yao_reveal(party: &mut Party, labels: &[Block], to: Reveal) -> Result<Option<Bits>> {
    let n = labels.len();
    let mine = decode_bits(labels);
    if n == 0 {
        return Ok(to.includes(party.role).then(Bits::new));
    }
    if party.role == 0 {
        if to.includes(1) {
            party.ch.send(msg::GC_DECODE, pack(&mine))?;
        }
        if !to.includes(0) {
            return Ok(None);
        }
        let got = unpack(&party.ch.recv_expect(msg::GC_OUTPUT)?, n)?;
        Ok(Some(if to.includes(1) { got } else { got ^ &mine }))
    } else {
        let out = if to.includes(1) {
            let d = unpack(&party.ch.recv_expect(msg::GC_DECODE)?, n)?;
            Some(d ^ &mine)
        } else {
            None
        };
        if to.includes(0) {
            let back = out.clone().unwrap_or(mine);
            party.ch.send(msg::GC_OUTPUT, pack(&back))?;
        }
        Ok(out)
    }
}

/// Run a circuit under GC end to end: `own[c]` holds this party's input bits
/// (its `IN` group) for cycle `c`. Returns the decoded output bits per cycle
/// at the parties selected by `to`.
pub fn gc_run(party: &mut Party, c: &Circuit, own: &[Bits], to: Reveal) -> Result<Option<Vec<Bits>>> {
    let cycles = own.len();
    let (n0, n1) = (c.inputs[0].len(), c.inputs[1].len());
    let mine = if party.role == 0 { n0 } else { n1 };
    for x in own {
        if x.len() != mine {
            return Err(Error::WidthMismatch {
                expected: mine,
                got: x.len(),
            });
        }
    }
    let flat: Bits = own.iter().flat_map(|b| b.iter().by_vals()).collect();
    let (l0, l1) = if party.role == 0 {
        let l1 = yao_input_send(party, n1 * cycles)?;
        let l0 = yao_input_garbler(party, &flat)?;
        (l0, l1)
    } else {
        let l1 = yao_input_evaluator(party, &flat)?;
        let l0 = yao_input_recv(party, n0 * cycles)?;
        (l0, l1)
    };
    let inputs: Vec<Vec<Block>> = (0..cycles)
        .map(|cy| {
            let mut v = l0[cy * n0..(cy + 1) * n0].to_vec();
            v.extend_from_slice(&l1[cy * n1..(cy + 1) * n1]);
            v
        })
        .collect();
    let outs = yao_eval(party, c, &inputs)?;
    let m = c.outputs.len();
    let flat_out: Vec<Block> = outs.into_iter().flatten().collect();
    Ok(yao_reveal(party, &flat_out, to)?.map(|bits| {
        (0..cycles)
            .map(|cy| bits[cy * m..(cy + 1) * m].to_bitvec())
            .collect()
    }))
}
