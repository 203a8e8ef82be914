//! Correlated randomness: multiplication triples, precomputed-OT masks and
//! vector-dot-product shares.
//!
//! Every kind of material is drawn from its own DRBG substream, personalized
//! with a one-byte resource tag followed by a little-endian `u32` stream index.
//! The dealer runs exactly the same expansion code as the parties, so each
//! party can regenerate its own view from a 256-bit seed; only the values that
//! depend on both seeds (the corrections) travel explicitly to party 1.
//!
//! Draw order per substream:
//! - A-MT, seed 0: `(a, b, c)` per triple; seed 1: `(a, b)` per triple.
//! - B-MT, seed 0: `n` bits of `a`, then `n` of `b`, then `n` of `c`; seed 1: `a`, `b`.
//! - OT, sender seed: `(q0, q1)` per OT as 16-byte little-endian blocks;
//!   receiver seed: `n` choice bits `r`.
//! - VDP, seed 0: `[a0]_0..[a0]_{n-1}` then `a2` per dot product; seed 1: `[a1]_j`.

use bitvec::prelude::*;

use crate::drbg::{Drbg, Seed};
use crate::error::{Error, Result};
use crate::ring::RingParams;

pub type Bits = BitVec<u8, Lsb0>;
pub type BitSlice = bitvec::slice::BitSlice<u8, Lsb0>;

pub type Block = u128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ResourceTag {
    Amt = 1,
    Bmt = 2,
    Ot = 3,
    Vdp = 4,
    OtPad = 5,
}

pub fn substream(seed: &Seed, tag: ResourceTag, index: u32) -> Drbg {
    let mut pers = [0u8; 5];
    pers[0] = tag as u8;
    pers[1..].copy_from_slice(&index.to_le_bytes());
    Drbg::new(seed, &pers)
}

fn next_ring(d: &mut Drbg, p: RingParams) -> u64 {
    p.reduce(d.next_word(p.bytes()))
}

fn next_bits(d: &mut Drbg, n: usize) -> Bits {
    let mut v = Bits::from_vec(d.fill_bits(n).expect("bit budget"));
    v.truncate(n);
    v
}

/// One party's additive shares of an arithmetic triple.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ArithTriple {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

/// One party's XOR shares of a batch of Boolean triples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoolTriples {
    pub a: Bits,
    pub b: Bits,
    pub c: Bits,
}

impl BoolTriples {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Sender side of precomputed OTs: both masks for every instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OtSenderMasks {
    pub q: Vec<[Block; 2]>,
}

/// Receiver side: the random choice bit and the selected mask.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OtReceiverMasks {
    pub r: Bits,
    pub qr: Vec<Block>,
}

/// Party 0 material for one dot product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VdpShare0 {
    pub a0: Vec<u64>,
    pub a2: u64,
}

/// Party 1 material for one dot product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VdpShare1 {
    pub a1: Vec<u64>,
    pub a3: u64,
}

/// `c1 = (a0 + a1)(b0 + b1) - c0 mod 2^l`.
pub fn amt_correction(a0: u64, a1: u64, b0: u64, b1: u64, c0: u64, p: RingParams) -> u64 {
    p.sub(p.mul(p.add(a0, a1), p.add(b0, b1)), c0)
}

/// `c1 = ((a0 ^ a1) & (b0 ^ b1)) ^ c0`.
pub fn bmt_correction(a0: bool, a1: bool, b0: bool, b1: bool, c0: bool) -> bool {
    ((a0 ^ a1) & (b0 ^ b1)) ^ c0
}

/// `a3 = sum_j [a0]_j [a1]_j - a2 mod 2^l`.
pub fn vdp_correction(a0: &[u64], a1: &[u64], a2: u64, p: RingParams) -> u64 {
    let dot = a0
        .iter()
        .zip(a1)
        .fold(0u64, |acc, (&x, &y)| acc.wrapping_add(x.wrapping_mul(y)));
    p.sub(p.reduce(dot), a2)
}

pub fn amt_party0(seed0: &Seed, n: usize, p: RingParams) -> Vec<ArithTriple> {
    let mut d = substream(seed0, ResourceTag::Amt, 0);
    (0..n)
        .map(|_| ArithTriple {
            a: next_ring(&mut d, p),
            b: next_ring(&mut d, p),
            c: next_ring(&mut d, p),
        })
        .collect()
}

/// Party 1 view: `(a1, b1)` from the seed, `c1` from the dealer's list.
pub fn amt_party1(seed1: &Seed, c1: &[u64], p: RingParams) -> Vec<ArithTriple> {
    let mut d = substream(seed1, ResourceTag::Amt, 0);
    c1.iter()
        .map(|&c| {
            let a = next_ring(&mut d, p);
            let b = next_ring(&mut d, p);
            ArithTriple { a, b, c }
        })
        .collect()
}

/// Dealer side: both views plus the corrections sent to party 1.
pub fn gen_amt_batch(
    seed0: &Seed,
    seed1: &Seed,
    n: usize,
    p: RingParams,
) -> (Vec<ArithTriple>, Vec<ArithTriple>, Vec<u64>) {
    let t0 = amt_party0(seed0, n, p);
    let mut d1 = substream(seed1, ResourceTag::Amt, 0);
    let mut t1 = Vec::with_capacity(n);
    let mut c1 = Vec::with_capacity(n);
    for t in &t0 {
        let a = next_ring(&mut d1, p);
        let b = next_ring(&mut d1, p);
        let c = amt_correction(t.a, a, t.b, b, t.c, p);
        t1.push(ArithTriple { a, b, c });
        c1.push(c);
    }
    (t0, t1, c1)
}

pub fn bmt_party0(seed0: &Seed, n: usize) -> BoolTriples {
    let mut d = substream(seed0, ResourceTag::Bmt, 0);
    let a = next_bits(&mut d, n);
    let b = next_bits(&mut d, n);
    let c = next_bits(&mut d, n);
    BoolTriples { a, b, c }
}

pub fn bmt_party1(seed1: &Seed, c1: Bits) -> BoolTriples {
    let n = c1.len();
    let mut d = substream(seed1, ResourceTag::Bmt, 0);
    let a = next_bits(&mut d, n);
    let b = next_bits(&mut d, n);
    BoolTriples { a, b, c: c1 }
}

pub fn gen_bmt_batch(seed0: &Seed, seed1: &Seed, n: usize) -> (BoolTriples, BoolTriples, Bits) {
    let t0 = bmt_party0(seed0, n);
    let mut d1 = substream(seed1, ResourceTag::Bmt, 0);
    let a1 = next_bits(&mut d1, n);
    let b1 = next_bits(&mut d1, n);
    // Word-wise evaluation of the correction formula.
    let mut c1 = t0.a.clone();
    c1 ^= &a1;
    let mut bb = t0.b.clone();
    bb ^= &b1;
    c1 &= &bb;
    c1 ^= &t0.c;
    let t1 = BoolTriples {
        a: a1,
        b: b1,
        c: c1.clone(),
    };
    (t0, t1, c1)
}

pub fn ot_sender(seed_s: &Seed, n: usize) -> OtSenderMasks {
    let mut d = substream(seed_s, ResourceTag::Ot, 0);
    OtSenderMasks {
        q: (0..n).map(|_| [d.next_u128(), d.next_u128()]).collect(),
    }
}

pub fn ot_receiver_bits(seed_r: &Seed, n: usize) -> Bits {
    let mut d = substream(seed_r, ResourceTag::Ot, 0);
    next_bits(&mut d, n)
}

pub fn gen_ot_masks(
    seed_s: &Seed,
    seed_r: &Seed,
    n: usize,
) -> (OtSenderMasks, OtReceiverMasks, Vec<Block>) {
    let s = ot_sender(seed_s, n);
    let r = ot_receiver_bits(seed_r, n);
    let qr: Vec<Block> = s
        .q
        .iter()
        .zip(r.iter())
        .map(|(q, bit)| q[*bit as usize])
        .collect();
    let recv = OtReceiverMasks { r, qr: qr.clone() };
    (s, recv, qr)
}

pub fn vdp_party0(seed0: &Seed, lengths: &[u32], p: RingParams) -> Vec<VdpShare0> {
    let mut d = substream(seed0, ResourceTag::Vdp, 0);
    lengths
        .iter()
        .map(|&n| {
            let a0 = (0..n).map(|_| next_ring(&mut d, p)).collect();
            let a2 = next_ring(&mut d, p);
            VdpShare0 { a0, a2 }
        })
        .collect()
}

pub fn vdp_party1(seed1: &Seed, lengths: &[u32], a3: &[u64], p: RingParams) -> Result<Vec<VdpShare1>> {
    if lengths.len() != a3.len() {
        return Err(Error::WidthMismatch {
            expected: lengths.len(),
            got: a3.len(),
        });
    }
    let mut d = substream(seed1, ResourceTag::Vdp, 0);
    Ok(lengths
        .iter()
        .zip(a3)
        .map(|(&n, &a3)| VdpShare1 {
            a1: (0..n).map(|_| next_ring(&mut d, p)).collect(),
            a3,
        })
        .collect())
}

/// Dealer side VDPS generation. Streams through the masks without keeping
/// them; returns only the corrections `a3` for party 1.
pub fn gen_vdps(seed0: &Seed, seed1: &Seed, lengths: &[u32], p: RingParams) -> Vec<u64> {
    let mut d0 = substream(seed0, ResourceTag::Vdp, 0);
    let mut d1 = substream(seed1, ResourceTag::Vdp, 0);
    lengths
        .iter()
        .map(|&n| {
            let mut dot = 0u64;
            for _ in 0..n {
                let a0 = next_ring(&mut d0, p);
                let a1 = next_ring(&mut d1, p);
                dot = dot.wrapping_add(a0.wrapping_mul(a1));
            }
            let a2 = next_ring(&mut d0, p);
            p.sub(p.reduce(dot), a2)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeds() -> (Seed, Seed) {
        (Seed([11; 32]), Seed([22; 32]))
    }

    #[test]
    fn amt_correction_example() {
        let p = RingParams::integer(8).unwrap();
        assert_eq!(amt_correction(1, 1, 3, 1, 5, p), 3);
    }

    #[test]
    fn bmt_correction_example_and_exhaustive() {
        let c1 = bmt_correction(true, false, true, true, true);
        assert!(c1);
        assert!(!(c1 ^ true)); // c = 0 = a & b with a = 1, b = 0
        for m in 0u8..32 {
            let bit = |i: u8| (m >> i) & 1 == 1;
            let (a0, a1, b0, b1, c0) = (bit(0), bit(1), bit(2), bit(3), bit(4));
            let c1 = bmt_correction(a0, a1, b0, b1, c0);
            assert_eq!((a0 ^ a1) & (b0 ^ b1), c0 ^ c1);
        }
    }

    #[test]
    fn vdp_correction_examples() {
        let p = RingParams::integer(8).unwrap();
        assert_eq!(vdp_correction(&[1, 2], &[3, 4], 5, p), 6);
        // n = 1 collapses to a single masked product
        assert_eq!(vdp_correction(&[10], &[20], 7, p), 193);
    }

    #[test]
    fn amt_batch_relation_and_views() {
        let (s0, s1) = seeds();
        let p = RingParams::integer(32).unwrap();
        let (t0, t1, c1) = gen_amt_batch(&s0, &s1, 1000, p);
        for (x, y) in t0.iter().zip(&t1) {
            assert_eq!(p.mul(p.add(x.a, y.a), p.add(x.b, y.b)), p.add(x.c, y.c));
        }
        assert_eq!(amt_party0(&s0, 1000, p), t0);
        assert_eq!(amt_party1(&s1, &c1, p), t1);
    }

    #[test]
    fn bmt_batch_relation_and_views() {
        let (s0, s1) = seeds();
        let (t0, t1, c1) = gen_bmt_batch(&s0, &s1, 1003);
        for i in 0..1003 {
            assert_eq!((t0.a[i] ^ t1.a[i]) & (t0.b[i] ^ t1.b[i]), t0.c[i] ^ t1.c[i]);
        }
        assert_eq!(bmt_party0(&s0, 1003), t0);
        assert_eq!(bmt_party1(&s1, c1), t1);
    }

    #[test]
    fn ot_masks_select() {
        let (s0, s1) = seeds();
        let (s, r, qr) = gen_ot_masks(&s0, &s1, 257);
        for i in 0..257 {
            assert_eq!(r.qr[i], s.q[i][r.r[i] as usize]);
        }
        assert_eq!(ot_sender(&s0, 257), s);
        assert_eq!(ot_receiver_bits(&s1, 257), r.r);
        assert_eq!(qr.len(), 257);
        let (s, r, qr) = gen_ot_masks(&s0, &s1, 0);
        assert!(s.q.is_empty() && r.qr.is_empty() && qr.is_empty());
    }

    #[test]
    fn vdps_relation_and_views() {
        let (s0, s1) = seeds();
        let p = RingParams::integer(64).unwrap();
        let lengths = [1u32, 2, 25, 980];
        let a3 = gen_vdps(&s0, &s1, &lengths, p);
        let v0 = vdp_party0(&s0, &lengths, p);
        let v1 = vdp_party1(&s1, &lengths, &a3, p).unwrap();
        for (x, y) in v0.iter().zip(&v1) {
            assert_eq!(p.add(x.a2, y.a3), vdp_correction(&x.a0, &y.a1, 0, p));
        }
    }

    #[test]
    fn streams_are_domain_separated() {
        let (s0, s1) = seeds();
        let p = RingParams::integer(64).unwrap();
        // OT material does not move when A-MT counts change.
        let before = ot_sender(&s0, 10);
        let _ = gen_amt_batch(&s0, &s1, 500, p);
        assert_eq!(ot_sender(&s0, 10), before);
        // A-MT and VDP streams of the same seed start differently.
        let t = amt_party0(&s0, 1, p)[0];
        let v = vdp_party0(&s0, &[1], p);
        assert_ne!(t.a, v[0].a0[0]);
    }
}
