//! GMW evaluation on XOR shares. Linear gates are local; each AND level
//! costs one exchange of masked bits, batched over every gate in the level.

use rand::RngCore;

use crate::bits::{pack, unpack};
use crate::circuit::{Gate, LevelizedCircuit};
use crate::correlated::Bits;
use crate::error::{Error, Result};
use crate::session::{Party, Reveal};
use crate::transport::msg;

fn random_bits<R: RngCore>(rng: &mut R, n: usize) -> Bits {
    let mut b = vec![0u8; n.div_ceil(8)];
    rng.fill_bytes(&mut b);
    let mut v = Bits::from_vec(b);
    v.truncate(n);
    v
}

/// XOR-share `own` (this party's input bits) and receive shares of the
/// peer's `peer_len` bits. Both directions travel in the same round.
/// Returns `[shares of role 0's bits, shares of role 1's bits]`.
pub fn gmw_share_inputs(party: &mut Party, own: &Bits, peer_len: usize) -> Result<[Bits; 2]> {
    let mask = random_bits(&mut party.rng, own.len());
    if !own.is_empty() {
        let theirs = mask.clone() ^ own;
        party.ch.send(msg::GMW_SHARE, pack(&theirs))?;
    }
    let peer = if peer_len > 0 {
        unpack(&party.ch.recv_expect(msg::GMW_SHARE)?, peer_len)?
    } else {
        Bits::new()
    };
    Ok(if party.role == 0 { [mask, peer] } else { [peer, mask] })
}

/// Single-owner variant: the owner passes its bits, the other party `None`.
pub fn gmw_share_input(party: &mut Party, owner: u8, bits: Option<&Bits>, n: usize) -> Result<Bits> {
    if party.role == owner {
        let b = bits.ok_or_else(|| Error::Model("owner must supply input bits".into()))?;
        if b.len() != n {
            return Err(Error::WidthMismatch { expected: n, got: b.len() });
        }
        let [s0, s1] = gmw_share_inputs(party, b, 0)?;
        Ok(if owner == 0 { s0 } else { s1 })
    } else {
        let [s0, s1] = gmw_share_inputs(party, &Bits::new(), n)?;
        Ok(if owner == 0 { s0 } else { s1 })
    }
}

/// `z0 = d&e ^ b0&d ^ a0&e ^ c0`, `z1 = b1&d ^ a1&e ^ c1`.
pub fn and_combine(role: u8, d: bool, e: bool, a: bool, b: bool, c: bool) -> bool {
    let z = (b & d) ^ (a & e) ^ c;
    if role == 0 {
        z ^ (d & e)
    } else {
        z
    }
}

fn apply_linear(role: u8, lc: &LevelizedCircuit, depth: usize, vals: &mut [bool]) {
    for &gi in &lc.linear[depth] {
        match lc.circuit.gates[gi] {
            Gate::Xor { a, b, out } => vals[out as usize] = vals[a as usize] ^ vals[b as usize],
            Gate::Not { a, out } => vals[out as usize] = vals[a as usize] ^ (role == 0),
            Gate::And { .. } => unreachable!("AND gate in a linear level"),
        }
    }
}

/// Evaluate on shares for `inputs.len()` cycles. `inputs[c]` holds this
/// party's shares of the `IN0 || IN1` bits of cycle `c`; the result holds
/// output shares per cycle. Register state starts at the public init values.
pub fn gmw_eval(party: &mut Party, lc: &LevelizedCircuit, inputs: &[Bits]) -> Result<Vec<Bits>> {
    let c = &lc.circuit;
    let role = party.role;
    let nand = c.and_count();
    let needed = nand * inputs.len();
    if party.pools.bmt.remaining() < needed {
        return Err(Error::ResourceExhausted {
            kind: "B-MT",
            requested: needed,
            remaining: party.pools.bmt.remaining(),
        });
    }
    let mut vals = vec![false; c.num_wires as usize];
    vals[1] = role == 0;
    for r in &c.registers {
        vals[r.q as usize] = r.init && role == 0;
    }
    let depth = lc.depth();
    let mut outs = Vec::with_capacity(inputs.len());
    for (cycle, x) in inputs.iter().enumerate() {
        if x.len() != c.input_len() {
            return Err(Error::WidthMismatch {
                expected: c.input_len(),
                got: x.len(),
            });
        }
        for (w, v) in c.inputs.iter().flatten().zip(x.iter()) {
            vals[*w as usize] = *v;
        }
        apply_linear(role, lc, 0, &mut vals);
        for (k, level) in lc.and_levels.iter().enumerate() {
            let n = level.len();
            let t = party.pools.bmt.take(n)?;
            let (ta, tb, tc) = (t.a.to_bitvec(), t.b.to_bitvec(), t.c.to_bitvec());
            let mut de = Bits::with_capacity(2 * n);
            for (i, &gi) in level.iter().enumerate() {
                let Gate::And { a, .. } = c.gates[gi] else { unreachable!() };
                de.push(vals[a as usize] ^ ta[i]);
            }
            for (i, &gi) in level.iter().enumerate() {
                let Gate::And { b, .. } = c.gates[gi] else { unreachable!() };
                de.push(vals[b as usize] ^ tb[i]);
            }
            let index = (cycle * depth + k) as u32;
            let mut payload = index.to_le_bytes().to_vec();
            payload.extend(pack(&de));
            party.ch.send(msg::GMW_DE, payload)?;
            let resp = party.ch.recv_expect(msg::GMW_DE)?;
            if resp.len() < 4 {
                return Err(Error::Malformed("short GMW_DE frame".into()));
            }
            let got = u32::from_le_bytes(resp[..4].try_into().unwrap());
            if got != index {
                return Err(Error::Desync { expected: index, got });
            }
            let peer = unpack(&resp[4..], 2 * n)?;
            for (i, &gi) in level.iter().enumerate() {
                let d = de[i] ^ peer[i];
                let e = de[n + i] ^ peer[n + i];
                vals[c.gates[gi].out() as usize] = and_combine(role, d, e, ta[i], tb[i], tc[i]);
            }
            apply_linear(role, lc, k + 1, &mut vals);
        }
        outs.push(c.outputs.iter().map(|w| vals[*w as usize]).collect());
        let next: Vec<bool> = c.registers.iter().map(|r| vals[r.d as usize]).collect();
        for (r, v) in c.registers.iter().zip(next) {
            vals[r.q as usize] = v;
        }
    }
    Ok(outs)
}

/// Exchange output shares; parties in `to` learn the XOR.
pub fn gmw_reveal(party: &mut Party, shares: &Bits, to: Reveal) -> Result<Option<Bits>> {
    let peer = 1 - party.role;
    if shares.is_empty() {
        return Ok(to.includes(party.role).then(Bits::new));
    }
    if to.includes(peer) {
        party.ch.send(msg::GMW_REVEAL, pack(shares))?;
    }
    if !to.includes(party.role) {
        return Ok(None);
    }
    let other = unpack(&party.ch.recv_expect(msg::GMW_REVEAL)?, shares.len())?;
    Ok(Some(other ^ shares))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_trace() {
        let (x, y) = ((false, true), (true, false));
        let (a, b, c) = ((true, false), (false, false), (true, true));
        let d = x.0 ^ a.0 ^ x.1 ^ a.1;
        let e = y.0 ^ b.0 ^ y.1 ^ b.1;
        assert_eq!((d, e), (false, true));
        let z0 = and_combine(0, d, e, a.0, b.0, c.0);
        let z1 = and_combine(1, d, e, a.1, b.1, c.1);
        assert_eq!((z0, z1), (false, true));
    }

    #[test]
    fn combine_exhaustive() {
        for v in 0u32..1 << 10 {
            let bit = |i: u32| v >> i & 1 == 1;
            let (x0, x1, y0, y1, a0, a1, b0, b1, c0) = (bit(0), bit(1), bit(2), bit(3), bit(4), bit(5), bit(6), bit(7), bit(8));
            let c1 = ((a0 ^ a1) & (b0 ^ b1)) ^ c0;
            let d = x0 ^ a0 ^ x1 ^ a1;
            let e = y0 ^ b0 ^ y1 ^ b1;
            let z = and_combine(0, d, e, a0, b0, c0) ^ and_combine(1, d, e, a1, b1, c1);
            assert_eq!(z, (x0 ^ x1) & (y0 ^ y1));
        }
    }
}
