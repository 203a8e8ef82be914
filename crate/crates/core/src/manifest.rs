//! Resource manifests and per-party correlated bundles.

use serde::Serialize;

use crate::bits::{pack, ring_to_bytes, unpack};
use crate::correlated::{self, Bits, Block};
use crate::drbg::{Seed, SEED_LEN};
use crate::error::{Error, Result};
use crate::ot::{OtReceiverPool, OtSenderPool};
use crate::pools::{AmtPool, BmtPool, Pools, VdpPool};
use crate::ring::RingParams;
use crate::transport::SessionId;

/// What the dealer must prepare for one session. Both parties submit the
/// same manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceManifest {
    #[serde(skip)]
    pub session: SessionId,
    pub ring: RingParams,
    pub num_amt: u64,
    pub num_bmt: u64,
    pub num_ot: u64,
    pub vdp_lengths: Vec<u32>,
}

impl ResourceManifest {
    pub fn new(ring: RingParams) -> Self {
        ResourceManifest {
            session: SessionId::default(),
            ring,
            num_amt: 0,
            num_bmt: 0,
            num_ot: 0,
            vdp_lengths: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.num_amt == 0 && self.num_bmt == 0 && self.num_ot == 0 && self.vdp_lengths.is_empty()
    }

    /// Append another manifest's requirements (same ring).
    pub fn extend(&mut self, o: &ResourceManifest) {
        self.num_amt += o.num_amt;
        self.num_bmt += o.num_bmt;
        self.num_ot += o.num_ot;
        self.vdp_lengths.extend_from_slice(&o.vdp_lengths);
    }

    /// Wire encoding: `l, alpha, beta` as `u8`, the three counts as `u64`,
    /// then the dot-product lengths as a `u32` count followed by `u32` entries.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 + 24 + 4 + 4 * self.vdp_lengths.len());
        out.push(self.ring.l());
        out.push(self.ring.alpha());
        out.push(self.ring.beta());
        for c in [self.num_amt, self.num_bmt, self.num_ot] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&(self.vdp_lengths.len() as u32).to_le_bytes());
        for v in &self.vdp_lengths {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(b: &[u8], session: SessionId) -> Result<Self> {
        let bad = || Error::Malformed("truncated manifest".into());
        if b.len() < 31 {
            return Err(bad());
        }
        let ring = RingParams::new(b[0], b[1], b[2])?;
        if !ring.is_wire_width() {
            return Err(Error::InvalidRing(format!("l = {} is not a wire width", ring.l())));
        }
        let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        let count = u32::from_le_bytes(b[27..31].try_into().unwrap()) as usize;
        if b.len() != 31 + 4 * count {
            return Err(bad());
        }
        let vdp_lengths = b[31..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ResourceManifest {
            session,
            ring,
            num_amt: u64_at(3),
            num_bmt: u64_at(11),
            num_ot: u64_at(19),
            vdp_lengths,
        })
    }

    /// Exact size of the bundle payload sent to `role`.
    pub fn bundle_len(&self, role: u8) -> usize {
        if role == 0 {
            return SEED_LEN;
        }
        let w = self.ring.bytes();
        SEED_LEN
            + self.num_amt as usize * w
            + (self.num_bmt as usize).div_ceil(8)
            + 16 * self.num_ot as usize
            + w * self.vdp_lengths.len()
    }
}

/// Dealer side: build both bundle payloads from two fresh seeds.
///
/// Role 0 receives its seed only. Role 1 receives its seed followed by the
/// A-MT corrections, the packed B-MT corrections, the selected OT masks and
/// the dot-product corrections.
pub fn deal(m: &ResourceManifest, seed0: &Seed, seed1: &Seed) -> (Vec<u8>, Vec<u8>) {
    let p = m.ring;
    let b0 = seed0.0.to_vec();
    let mut b1 = Vec::with_capacity(m.bundle_len(1));
    b1.extend_from_slice(&seed1.0);
    let (_, _, c1) = correlated::gen_amt_batch(seed0, seed1, m.num_amt as usize, p);
    b1.extend_from_slice(&ring_to_bytes(&c1, p));
    let (_, _, c1b) = correlated::gen_bmt_batch(seed0, seed1, m.num_bmt as usize);
    b1.extend_from_slice(&pack(&c1b));
    let (_, _, qr) = correlated::gen_ot_masks(seed0, seed1, m.num_ot as usize);
    for q in qr {
        b1.extend_from_slice(&q.to_le_bytes());
    }
    let a3 = correlated::gen_vdps(seed0, seed1, &m.vdp_lengths, p);
    b1.extend_from_slice(&ring_to_bytes(&a3, p));
    (b0, b1)
}

/// Party side: expand a bundle into ready-to-use pools.
pub fn expand_bundle(m: &ResourceManifest, role: u8, b: &[u8]) -> Result<Pools> {
    if b.len() != m.bundle_len(role) {
        return Err(Error::Malformed(format!(
            "bundle of {} bytes, manifest implies {}",
            b.len(),
            m.bundle_len(role)
        )));
    }
    let p = m.ring;
    let seed = Seed::from_slice(&b[..SEED_LEN])?;
    let (n_amt, n_bmt, n_ot) = (m.num_amt as usize, m.num_bmt as usize, m.num_ot as usize);
    if role == 0 {
        return Ok(Pools {
            amt: AmtPool::new(correlated::amt_party0(&seed, n_amt, p)),
            bmt: BmtPool::new(correlated::bmt_party0(&seed, n_bmt)),
            ot_send: OtSenderPool::new(correlated::ot_sender(&seed, n_ot)),
            ot_recv: OtReceiverPool::default(),
            vdp: VdpPool::P0(correlated::vdp_party0(&seed, &m.vdp_lengths, p), 0),
        });
    }
    let w = p.bytes();
    let mut off = SEED_LEN;
    let c1 = crate::bits::ring_from_bytes(&b[off..off + n_amt * w], n_amt, p)?;
    off += n_amt * w;
    let c1b: Bits = unpack(&b[off..off + n_bmt.div_ceil(8)], n_bmt)?;
    off += n_bmt.div_ceil(8);
    let qr: Vec<Block> = b[off..off + 16 * n_ot]
        .chunks_exact(16)
        .map(|c| u128::from_le_bytes(c.try_into().unwrap()))
        .collect();
    off += 16 * n_ot;
    let a3 = crate::bits::ring_from_bytes(&b[off..], m.vdp_lengths.len(), p)?;
    let r = correlated::ot_receiver_bits(&seed, n_ot);
    Ok(Pools {
        amt: AmtPool::new(correlated::amt_party1(&seed, &c1, p)),
        bmt: BmtPool::new(correlated::bmt_party1(&seed, c1b)),
        ot_send: OtSenderPool::default(),
        ot_recv: OtReceiverPool::new(correlated::OtReceiverMasks { r, qr }),
        vdp: VdpPool::P1(correlated::vdp_party1(&seed, &m.vdp_lengths, &a3, p)?, 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResourceManifest {
        let mut m = ResourceManifest::new(RingParams::default_for(32).unwrap());
        m.num_amt = 5;
        m.num_bmt = 13;
        m.num_ot = 3;
        m.vdp_lengths = vec![2, 7];
        m
    }

    #[test]
    fn manifest_roundtrip() {
        let m = sample();
        let e = m.encode();
        assert_eq!(e.len(), 31 + 8);
        assert_eq!(&e[..3], &[32, 7, 12]);
        assert_eq!(ResourceManifest::decode(&e, SessionId::default()).unwrap(), m);
        assert!(ResourceManifest::decode(&e[..30], SessionId::default()).is_err());
    }

    #[test]
    fn bundle_sizes() {
        let m = sample();
        let (b0, b1) = deal(&m, &Seed([1; 32]), &Seed([2; 32]));
        assert_eq!(b0.len(), 32);
        assert_eq!(b1.len(), 32 + 5 * 4 + 2 + 48 + 8);
        assert_eq!(b1.len(), m.bundle_len(1));
    }

    #[test]
    fn expanded_pools_satisfy_relations() {
        let m = sample();
        let p = m.ring;
        let (b0, b1) = deal(&m, &Seed([1; 32]), &Seed([2; 32]));
        let mut p0 = expand_bundle(&m, 0, &b0).unwrap();
        let mut p1 = expand_bundle(&m, 1, &b1).unwrap();
        let t0 = p0.amt.take(5).unwrap().to_vec();
        let t1 = p1.amt.take(5).unwrap().to_vec();
        for (x, y) in t0.iter().zip(&t1) {
            assert_eq!(p.mul(p.add(x.a, y.a), p.add(x.b, y.b)), p.add(x.c, y.c));
        }
        let (v0, v1) = (p0.vdp.take0(7).err(), p1.vdp.take1(2).unwrap());
        assert!(v0.is_some(), "length mismatch must be reported");
        let v0 = p0.vdp.take0(2).unwrap();
        let dot = v0.a0.iter().zip(&v1.a1).fold(0, |s, (a, b)| p.add(s, p.mul(*a, *b)));
        assert_eq!(p.add(v0.a2, v1.a3), dot);
    }
}
