//! Conversions between arithmetic, Boolean (XOR) and Yao (label) sharings.
//!
//! Boolean and Yao vectors of ring elements are bit-major per element:
//! element `i` occupies bits `i*l .. (i+1)*l`, LSB first.

use crate::bits::word_bits;
use crate::circuit::library::{build_share_adder, Variant};
use crate::correlated::{Bits, Block};
use crate::error::{Error, Result};
use crate::gc::{random_block, yao_eval, yao_input_evaluator, yao_input_garbler, yao_input_recv, yao_input_send};
use crate::ot::{ot_recv, ot_recv_bytes, ot_send, ot_send_bytes, OT_KAPPA};
use crate::session::Party;

/// Boolean shares from Yao shares: each party keeps its label LSBs. No communication.
pub fn y2b(labels: &[Block]) -> Bits {
    labels.iter().map(|&k| k & 1 == 1).collect()
}

/// Yao shares from Boolean shares, one 128-bit OT per bit.
pub fn b2y(party: &mut Party, shares: &Bits) -> Result<Vec<Block>> {
    if shares.is_empty() {
        return Ok(vec![]);
    }
    if party.role == 0 {
        let delta = party.gc.delta;
        let z: Vec<Block> = (0..shares.len()).map(|_| random_block(&mut party.rng)).collect();
        let pairs: Vec<[Block; 2]> = z
            .iter()
            .zip(shares.iter())
            .map(|(&z, x0)| if *x0 { [z ^ delta, z] } else { [z, z ^ delta] })
            .collect();
        ot_send(&mut party.ch, &mut party.pools.ot_send, OT_KAPPA, &pairs)?;
        Ok(z)
    } else {
        ot_recv(&mut party.ch, &mut party.pools.ot_recv, OT_KAPPA, shares)
    }
}

/// Arithmetic shares from Boolean shares of `n = shares.len() / l` elements,
/// using `l` OTs of `l`-bit messages per element.
pub fn b2a(party: &mut Party, shares: &Bits) -> Result<Vec<u64>> {
    let p = party.ring;
    let l = p.l() as usize;
    if shares.len() % l != 0 {
        return Err(Error::WidthMismatch {
            expected: shares.len().div_ceil(l) * l,
            got: shares.len(),
        });
    }
    let n = shares.len() / l;
    let nb = p.bytes();
    let word = |v: u64| v.to_le_bytes()[..nb].to_vec();
    if party.role == 0 {
        let mut out = vec![0u64; n];
        let mut msgs = Vec::with_capacity(shares.len());
        for i in 0..n {
            for j in 0..l {
                let r = p.reduce(party.rng.next_word(nb));
                out[i] = p.add(out[i], r);
                let x0 = shares[i * l + j];
                let m = |bit: bool| p.sub(if bit { p.reduce(1u64 << j) } else { 0 }, r);
                msgs.push([word(m(x0)), word(m(!x0))]);
            }
        }
        ot_send_bytes(&mut party.ch, &mut party.pools.ot_send, l, &msgs)?;
        Ok(out)
    } else {
        let got = ot_recv_bytes(&mut party.ch, &mut party.pools.ot_recv, l, shares)?;
        Ok((0..n)
            .map(|i| {
                got[i * l..(i + 1) * l].iter().fold(0u64, |acc, b| {
                    let mut w = [0u8; 8];
                    w[..b.len()].copy_from_slice(b);
                    p.add(acc, u64::from_le_bytes(w))
                })
            })
            .collect())
    }
}

/// Yao shares of `(x0 + x1) >> debt` (arithmetic shift) from arithmetic
/// shares, via one garbled share adder for the whole batch.
pub fn a2y(party: &mut Party, shares: &[u64], debt: usize) -> Result<Vec<Block>> {
    let p = party.ring;
    let l = p.l() as usize;
    if debt >= l {
        return Err(Error::InvalidRing(format!("shift {debt} >= ring width {l}")));
    }
    let n = shares.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let adder = build_share_adder(l, debt, Variant::Depth)?.replicate(n);
    let bits: Bits = shares.iter().flat_map(|&v| word_bits(v, l)).collect();
    let (l0, l1) = if party.role == 0 {
        let l1 = yao_input_send(party, n * l)?;
        (yao_input_garbler(party, &bits)?, l1)
    } else {
        let l1 = yao_input_evaluator(party, &bits)?;
        (yao_input_recv(party, n * l)?, l1)
    };
    // The replicated adder takes copy k's operands from both parties in
    // turn: IN0 holds every copy's x0, IN1 every copy's x1.
    let mut inputs = l0;
    inputs.extend(l1);
    Ok(yao_eval(party, &adder, &[inputs])?.pop().unwrap())
}

pub fn a2b(party: &mut Party, shares: &[u64], debt: usize) -> Result<Bits> {
    Ok(y2b(&a2y(party, shares, debt)?))
}

pub fn y2a(party: &mut Party, labels: &[Block]) -> Result<Vec<u64>> {
    b2a(party, &y2b(labels))
}
