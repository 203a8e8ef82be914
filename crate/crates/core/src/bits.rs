//! LSB-first bit packing used by every wire format.

use crate::correlated::Bits;
use crate::error::{Error, Result};
use crate::ring::RingParams;

/// Pack bits LSB-first into `ceil(n/8)` bytes, clearing the unused tail.
pub fn pack(bits: &Bits) -> Vec<u8> {
    let n = bits.len();
    let mut out = bits.as_raw_slice()[..n.div_ceil(8)].to_vec();
    if n % 8 != 0 {
        *out.last_mut().unwrap() &= (1u8 << (n % 8)) - 1;
    }
    out
}

pub fn unpack(bytes: &[u8], n: usize) -> Result<Bits> {
    if bytes.len() != n.div_ceil(8) {
        return Err(Error::Malformed(format!(
            "expected {} bytes for {n} bits, got {}",
            n.div_ceil(8),
            bytes.len()
        )));
    }
    let mut b = Bits::from_slice(bytes);
    b.truncate(n);
    Ok(b)
}

pub fn from_bools(v: &[bool]) -> Bits {
    v.iter().copied().collect()
}

/// Little-endian bits of the low `w` bits of `v`.
pub fn word_bits(v: u64, w: usize) -> impl Iterator<Item = bool> {
    (0..w).map(move |i| (v >> i) & 1 == 1)
}

pub fn bits_word(b: &[bool]) -> u64 {
    b.iter().enumerate().fold(0, |acc, (i, &x)| acc | ((x as u64) << i))
}

/// Serial LSB-first bit writer.
#[derive(Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    nbits: usize,
}

impl BitWriter {
    pub fn with_capacity(bits: usize) -> Self {
        BitWriter {
            buf: Vec::with_capacity(bits.div_ceil(8)),
            nbits: 0,
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.nbits % 8 == 0 {
            self.buf.push(0);
        }
        if bit {
            *self.buf.last_mut().unwrap() |= 1 << (self.nbits % 8);
        }
        self.nbits += 1;
    }

    /// Append the low `w` bits of the little-endian byte string `v`.
    pub fn push_bytes(&mut self, v: &[u8], w: usize) {
        if self.nbits % 8 == 0 && w % 8 == 0 {
            self.buf.extend_from_slice(&v[..w / 8]);
            self.nbits += w;
            return;
        }
        for i in 0..w {
            self.push((v[i / 8] >> (i % 8)) & 1 == 1);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct BitReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        BitReader { buf, pos: 0 }
    }

    pub fn read(&mut self) -> bool {
        let b = (self.buf[self.pos / 8] >> (self.pos % 8)) & 1 == 1;
        self.pos += 1;
        b
    }

    /// Read `w` bits into a zero-padded little-endian byte string.
    pub fn read_bytes(&mut self, w: usize) -> Vec<u8> {
        if self.pos % 8 == 0 && w % 8 == 0 {
            let s = self.pos / 8;
            self.pos += w;
            return self.buf[s..s + w / 8].to_vec();
        }
        let mut out = vec![0u8; w.div_ceil(8)];
        for i in 0..w {
            if self.read() {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }
}

/// Ring elements as `l/8`-byte little-endian words.
pub fn ring_to_bytes(v: &[u64], p: RingParams) -> Vec<u8> {
    let w = p.bytes();
    let mut out = Vec::with_capacity(v.len() * w);
    for x in v {
        out.extend_from_slice(&x.to_le_bytes()[..w]);
    }
    out
}

pub fn ring_from_bytes(b: &[u8], n: usize, p: RingParams) -> Result<Vec<u64>> {
    let w = p.bytes();
    if b.len() != n * w {
        return Err(Error::Malformed(format!(
            "expected {} bytes for {n} ring elements, got {}",
            n * w,
            b.len()
        )));
    }
    Ok(b.chunks_exact(w)
        .map(|c| {
            let mut x = [0u8; 8];
            x[..w].copy_from_slice(c);
            p.reduce(u64::from_le_bytes(x))
        })
        .collect())
}
