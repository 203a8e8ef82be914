//! Additive secret sharing over `Z_{2^l}`.
//!
//! All interactive operations are batched: one frame per direction per call.

use rand::RngCore;

use crate::bits::{ring_from_bytes, ring_to_bytes};
use crate::correlated::ArithTriple;
use crate::error::{Error, Result};
use crate::ring::RingParams;
use crate::session::{Party, Reveal};
use crate::transport::msg;

/// One party's share of a ring element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArithShare {
    pub value: u64,
    pub role: u8,
}

/// `(r, x - r)` for uniform `r`.
pub fn a_share<R: RngCore>(x: u64, rng: &mut R, p: RingParams) -> (ArithShare, ArithShare) {
    let r = p.reduce(rng.next_u64());
    (
        ArithShare { value: r, role: 0 },
        ArithShare {
            value: p.sub(x, r),
            role: 1,
        },
    )
}

pub fn a_reconstruct(s0: ArithShare, s1: ArithShare, p: RingParams) -> Result<u64> {
    if s0.role == s1.role || s0.role > 1 || s1.role > 1 {
        return Err(Error::RoleMismatch);
    }
    Ok(p.add(s0.value, s1.value))
}

/// `sum_j eta_j * share_j (+ offset at role 0)`; purely local.
pub fn a_linear(role: u8, terms: &[(u64, u64)], offset: u64, p: RingParams) -> u64 {
    let s = terms
        .iter()
        .fold(0u64, |acc, &(eta, x)| acc.wrapping_add(eta.wrapping_mul(x)));
    let s = if role == 0 { s.wrapping_add(offset) } else { s };
    p.reduce(s)
}

/// The owner splits its values and sends the other party its shares.
pub fn share_input(party: &mut Party, owner: u8, values: Option<&[u64]>, n: usize) -> Result<Vec<u64>> {
    let p = party.ring;
    if party.role == owner {
        let v = values.ok_or_else(|| Error::Model("owner must supply values".into()))?;
        if v.len() != n {
            return Err(Error::WidthMismatch { expected: n, got: v.len() });
        }
        let mine: Vec<u64> = (0..n).map(|_| p.reduce(party.rng.next_u64())).collect();
        let theirs: Vec<u64> = v.iter().zip(&mine).map(|(&x, &r)| p.sub(x, r)).collect();
        party.ch.send(msg::ASS_SHARE, ring_to_bytes(&theirs, p))?;
        Ok(mine)
    } else {
        ring_from_bytes(&party.ch.recv_expect(msg::ASS_SHARE)?, n, p)
    }
}

/// Exchange shares and reconstruct at the selected parties.
pub fn reveal(party: &mut Party, shares: &[u64], to: Reveal) -> Result<Option<Vec<u64>>> {
    let p = party.ring;
    let peer = 1 - party.role;
    if to.includes(peer) {
        party.ch.send(msg::ASS_REVEAL, ring_to_bytes(shares, p))?;
    }
    if !to.includes(party.role) {
        return Ok(None);
    }
    let other = ring_from_bytes(&party.ch.recv_expect(msg::ASS_REVEAL)?, shares.len(), p)?;
    Ok(Some(shares.iter().zip(other).map(|(&a, b)| p.add(a, b)).collect()))
}

/// Masked operands `(e, f) = (x - a, y - b)` for one multiplication.
pub fn mt_mask(x: u64, y: u64, t: &ArithTriple, p: RingParams) -> (u64, u64) {
    (p.sub(x, t.a), p.sub(y, t.b))
}

/// `z_i = f*a_i + e*b_i + c_i + i*e*f` from the opened `e`, `f`.
pub fn mt_combine(role: u8, e: u64, f: u64, t: &ArithTriple, p: RingParams) -> u64 {
    let mut z = p.add(p.add(p.mul(f, t.a), p.mul(e, t.b)), t.c);
    if role == 1 {
        z = p.add(z, p.mul(e, f));
    }
    z
}

/// Elementwise product of shared vectors using one triple each.
pub fn mul_mt(party: &mut Party, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    if x.len() != y.len() {
        return Err(Error::WidthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let p = party.ring;
    let t = party.pools.amt.take(n)?.to_vec();
    let mut ef = Vec::with_capacity(2 * n);
    let (mut e, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (ei, fi) = mt_mask(x[i], y[i], &t[i], p);
        e.push(ei);
        f.push(fi);
    }
    ef.extend_from_slice(&e);
    ef.extend_from_slice(&f);
    party.ch.send(msg::ASS_EF, ring_to_bytes(&ef, p))?;
    let peer = ring_from_bytes(&party.ch.recv_expect(msg::ASS_EF)?, 2 * n, p)?;
    Ok((0..n)
        .map(|i| {
            let e = p.add(e[i], peer[i]);
            let f = p.add(f[i], peer[n + i]);
            mt_combine(party.role, e, f, &t[i], p)
        })
        .collect())
}

/// Role 0's masked operand `x + a0` for a cleartext-times-shared product.
pub fn da_mask0(x: &[u64], a0: &[u64], p: RingParams) -> Vec<u64> {
    x.iter().zip(a0).map(|(&x, &a)| p.add(x, a)).collect()
}

/// Role 1's masked share `<y>_1 + a1`.
pub fn da_mask1(y1: &[u64], a1: &[u64], p: RingParams) -> Vec<u64> {
    y1.iter().zip(a1).map(|(&y, &a)| p.add(y, a)).collect()
}

/// Role 0 output: `sum x_j <y>0_j - sum a0_j (<y>1_j + a1_j) + a2`.
pub fn da_finish0(x: &[u64], y0: &[u64], a0: &[u64], masked1: &[u64], a2: u64, p: RingParams) -> u64 {
    let mut z = 0u64;
    for j in 0..x.len() {
        z = z
            .wrapping_add(x[j].wrapping_mul(y0[j]))
            .wrapping_sub(a0[j].wrapping_mul(masked1[j]));
    }
    p.add(p.reduce(z), a2)
}

/// Role 1 output: `sum <y>1_j (x_j + a0_j) + a3`.
pub fn da_finish1(y1: &[u64], masked0: &[u64], a3: u64, p: RingParams) -> u64 {
    let z = y1
        .iter()
        .zip(masked0)
        .fold(0u64, |acc, (&y, &m)| acc.wrapping_add(y.wrapping_mul(m)));
    p.add(p.reduce(z), a3)
}

/// Batched dot products `<x_k, y_k>` with `x_k` in the clear at role 0 and
/// `y_k` shared. Role 1 passes `x = None`. Each dot product consumes the
/// next entry of the dot-product pool, whose length must match.
pub fn vdp(party: &mut Party, x: Option<&[Vec<u64>]>, y: &[Vec<u64>]) -> Result<Vec<u64>> {
    let p = party.ring;
    if y.is_empty() {
        return Ok(vec![]);
    }
    let total: usize = y.iter().map(|v| v.len()).sum();
    let mut out = Vec::with_capacity(y.len());
    if party.role == 0 {
        let x = x.ok_or_else(|| Error::Model("role 0 must hold the cleartext operand".into()))?;
        if x.len() != y.len() {
            return Err(Error::WidthMismatch {
                expected: y.len(),
                got: x.len(),
            });
        }
        let mut mats = Vec::with_capacity(y.len());
        let mut masked = Vec::with_capacity(total);
        for (xk, yk) in x.iter().zip(y) {
            if xk.len() != yk.len() {
                return Err(Error::WidthMismatch {
                    expected: yk.len(),
                    got: xk.len(),
                });
            }
            let m = party.pools.vdp.take0(yk.len())?.clone();
            masked.extend(da_mask0(xk, &m.a0, p));
            mats.push(m);
        }
        party.ch.send(msg::DA_MASKED, ring_to_bytes(&masked, p))?;
        let peer = ring_from_bytes(&party.ch.recv_expect(msg::DA_MASKED)?, total, p)?;
        let mut off = 0;
        for ((xk, yk), m) in x.iter().zip(y).zip(&mats) {
            let n = yk.len();
            out.push(da_finish0(xk, yk, &m.a0, &peer[off..off + n], m.a2, p));
            off += n;
        }
    } else {
        let mut mats = Vec::with_capacity(y.len());
        let mut masked = Vec::with_capacity(total);
        for yk in y {
            let m = party.pools.vdp.take1(yk.len())?.clone();
            masked.extend(da_mask1(yk, &m.a1, p));
            mats.push(m);
        }
        party.ch.send(msg::DA_MASKED, ring_to_bytes(&masked, p))?;
        let peer = ring_from_bytes(&party.ch.recv_expect(msg::DA_MASKED)?, total, p)?;
        let mut off = 0;
        for (yk, m) in y.iter().zip(&mats) {
            let n = yk.len();
            out.push(da_finish1(yk, &peer[off..off + n], m.a3, p));
            off += n;
        }
    }
    Ok(out)
}

/// Elementwise `x_i * y_i` with `x` in the clear at role 0: dot products of length 1.
pub fn mul_da(party: &mut Party, x: Option<&[u64]>, y: &[u64]) -> Result<Vec<u64>> {
    let ys: Vec<Vec<u64>> = y.iter().map(|&v| vec![v]).collect();
    let xs: Option<Vec<Vec<u64>>> = x.map(|x| x.iter().map(|&v| vec![v]).collect());
    vdp(party, xs.as_deref(), &ys)
}
