//! Online phase of precomputed (Beaver) oblivious transfer.
//!
//! The receiver sends `b' = r xor b` for each instance in one `OT_CHOICES`
//! frame; the sender answers with `(q0 xor m0, q1 xor m1)` when `b' = 0` and
//! `(q0 xor m1, q1 xor m0)` otherwise, all pairs bit-packed into a single
//! `OT_PAIRS` frame. The receiver recovers `m_b = s_r xor q_r`.
//!
//! Messages of at most 128 bits are masked with the low bits of `q`; wider
//! messages are masked with a DRBG stream keyed by `q`.

use crate::bits::{pack, unpack, BitReader, BitWriter};
use crate::correlated::{substream, Bits, Block, OtReceiverMasks, OtSenderMasks, ResourceTag};
use crate::drbg::Seed;
use crate::error::{Error, Result};
use crate::transport::{msg, Channel};

pub const OT_KAPPA: usize = 128;

/// Sender masks with a consumption watermark.
#[derive(Debug, Default)]
pub struct OtSenderPool {
    q: Vec<[Block; 2]>,
    next: usize,
}

/// Receiver masks with a consumption watermark.
#[derive(Debug, Default)]
pub struct OtReceiverPool {
    r: Bits,
    qr: Vec<Block>,
    next: usize,
}

fn exhausted(requested: usize, remaining: usize) -> Error {
    Error::ResourceExhausted {
        kind: "OT",
        requested,
        remaining,
    }
}

impl OtSenderPool {
    pub fn new(m: OtSenderMasks) -> Self {
        OtSenderPool { q: m.q, next: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.q.len() - self.next
    }

    fn take(&mut self, n: usize) -> Result<&[[Block; 2]]> {
        if n > self.remaining() {
            return Err(exhausted(n, self.remaining()));
        }
        let s = self.next;
        self.next += n;
        Ok(&self.q[s..s + n])
    }
}

impl OtReceiverPool {
    pub fn new(m: OtReceiverMasks) -> Self {
        OtReceiverPool {
            r: m.r,
            qr: m.qr,
            next: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.qr.len() - self.next
    }

    fn take(&mut self, n: usize) -> Result<(Bits, &[Block])> {
        if n > self.remaining() {
            return Err(exhausted(n, self.remaining()));
        }
        let s = self.next;
        self.next += n;
        Ok((self.r[s..s + n].to_bitvec(), &self.qr[s..s + n]))
    }
}

/// `m`-bit pad derived from a 128-bit mask.
fn pad(q: Block, m: usize) -> Vec<u8> {
    let qb = q.to_le_bytes();
    if m <= OT_KAPPA {
        let mut v = qb[..m.div_ceil(8)].to_vec();
        if m % 8 != 0 {
            *v.last_mut().unwrap() &= (1u8 << (m % 8)) - 1;
        }
        return v;
    }
    let mut s = [0u8; 32];
    s[..16].copy_from_slice(&qb);
    let mut d = substream(&Seed(s), ResourceTag::OtPad, 0);
    d.fill_bits(m).expect("pad length")
}

fn xor_into(a: &mut [u8], b: &[u8]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

fn check_msg(m: usize, v: &[u8]) -> Result<()> {
    if m == 0 || v.len() != m.div_ceil(8) {
        return Err(Error::MessageWidth(m));
    }
    Ok(())
}

/// Sender side over `m`-bit messages given as `ceil(m/8)`-byte little-endian strings.
pub fn ot_send_bytes(ch: &mut Channel, pool: &mut OtSenderPool, m: usize, msgs: &[[Vec<u8>; 2]]) -> Result<()> {
    if msgs.is_empty() {
        return Ok(());
    }
    for [a, b] in msgs {
        check_msg(m, a)?;
        check_msg(m, b)?;
    }
    let n = msgs.len();
    let masks = pool.take(n)?;
    let flipped = unpack(&ch.recv_expect(msg::OT_CHOICES)?, n)?;
    let mut w = BitWriter::with_capacity(2 * n * m);
    for (i, ([m0, m1], q)) in msgs.iter().zip(masks).enumerate() {
        let (x0, x1) = if flipped[i] { (m1, m0) } else { (m0, m1) };
        let mut s0 = pad(q[0], m);
        xor_into(&mut s0, x0);
        let mut s1 = pad(q[1], m);
        xor_into(&mut s1, x1);
        w.push_bytes(&s0, m);
        w.push_bytes(&s1, m);
    }
    ch.send(msg::OT_PAIRS, w.finish())
}

pub fn ot_recv_bytes(ch: &mut Channel, pool: &mut OtReceiverPool, m: usize, choices: &Bits) -> Result<Vec<Vec<u8>>> {
    let n = choices.len();
    if n == 0 {
        return Ok(vec![]);
    }
    if m == 0 {
        return Err(Error::MessageWidth(m));
    }
    let (r, qr) = pool.take(n)?;
    let mut flipped = r.clone();
    flipped ^= choices;
    ch.send(msg::OT_CHOICES, pack(&flipped))?;
    let pairs = ch.recv_expect(msg::OT_PAIRS)?;
    if pairs.len() != (2 * n * m).div_ceil(8) {
        return Err(Error::Malformed(format!("OT_PAIRS of {} bytes for {n} OTs", pairs.len())));
    }
    let mut rd = BitReader::new(&pairs);
    let mut out = Vec::with_capacity(n);
    for (i, q) in qr.iter().enumerate() {
        let s0 = rd.read_bytes(m);
        let s1 = rd.read_bytes(m);
        let mut v = if r[i] { s1 } else { s0 };
        xor_into(&mut v, &pad(*q, m));
        out.push(v);
    }
    Ok(out)
}

fn block_bytes(v: u128, m: usize) -> Vec<u8> {
    let mask = if m >= 128 { u128::MAX } else { (1u128 << m) - 1 };
    (v & mask).to_le_bytes()[..m.div_ceil(8)].to_vec()
}

/// Sender side for messages of at most 128 bits.
pub fn ot_send(ch: &mut Channel, pool: &mut OtSenderPool, m: usize, msgs: &[[u128; 2]]) -> Result<()> {
    if m > OT_KAPPA {
        return Err(Error::MessageWidth(m));
    }
    let v: Vec<[Vec<u8>; 2]> = msgs
        .iter()
        .map(|[a, b]| [block_bytes(*a, m), block_bytes(*b, m)])
        .collect();
    ot_send_bytes(ch, pool, m, &v)
}

pub fn ot_recv(ch: &mut Channel, pool: &mut OtReceiverPool, m: usize, choices: &Bits) -> Result<Vec<u128>> {
    if m > OT_KAPPA {
        return Err(Error::MessageWidth(m));
    }
    Ok(ot_recv_bytes(ch, pool, m, choices)?
        .into_iter()
        .map(|b| {
            let mut x = [0u8; 16];
            x[..b.len()].copy_from_slice(&b);
            u128::from_le_bytes(x)
        })
        .collect())
}
