//! Arithmetic in the ring of integers modulo `2^l` and the signed fixed-point
//! codec layered on top of it.
//!
//! A value is stored as its canonical representative in `[0, 2^l)`. Signed
//! values use the two's-complement reading of the same bits, so addition and
//! subtraction need no special handling. Fixed-point numbers carry `alpha`
//! integer bits and `beta` fraction bits; the ring is sized
//! `l = alpha + 2*beta + 1` so that a single product of two fixed-point
//! numbers fits before it is shifted back down by `beta` bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ring width and fixed-point layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingParams {
    l: u8,
    alpha: u8,
    beta: u8,
}

impl RingParams {
    /// Fixed-point parameters. Requires `l = alpha + 2*beta + 1` and `1 <= l <= 64`.
    pub fn new(l: u8, alpha: u8, beta: u8) -> Result<Self> {
        if l == 0 || l > 64 {
            return Err(Error::InvalidRing(format!("l = {l} is outside 1..=64")));
        }
        if alpha as u32 + 2 * beta as u32 + 1 != l as u32 {
            return Err(Error::InvalidRing(format!(
                "l = {l} must equal alpha + 2*beta + 1 = {}",
                alpha as u32 + 2 * beta as u32 + 1
            )));
        }
        Ok(Self { l, alpha, beta })
    }

    /// Plain integer ring (`beta = 0`).
    pub fn integer(l: u8) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidRing("l = 0".into()));
        }
        Self::new(l, l - 1, 0)
    }

    /// Default fixed-point layout for a byte-aligned ring width.
    pub fn default_for(l: u8) -> Result<Self> {
        match l {
            64 => Self::new(64, 13, 25),
            32 => Self::new(32, 7, 12),
            16 => Self::new(16, 5, 5),
            8 => Self::new(8, 3, 2),
            _ => Err(Error::InvalidRing(format!("no default layout for l = {l}"))),
        }
    }

    pub fn l(&self) -> u8 {
        self.l
    }

    pub fn alpha(&self) -> u8 {
        self.alpha
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    /// Number of bytes used for one element on the wire.
    pub fn bytes(&self) -> usize {
        (self.l as usize).div_ceil(8)
    }

    /// Ring widths the protocol engines accept on the wire.
    pub fn is_wire_width(&self) -> bool {
        matches!(self.l, 8 | 16 | 32 | 64)
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        if self.l == 64 {
            u64::MAX
        } else {
            (1u64 << self.l) - 1
        }
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u64 {
        v & self.mask()
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a.wrapping_mul(b) & self.mask()
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        a.wrapping_neg() & self.mask()
    }

    /// Two's-complement reading of a canonical element.
    #[inline]
    pub fn signed(&self, v: u64) -> i64 {
        let shift = 64 - self.l as u32;
        ((v << shift) as i64) >> shift
    }

    /// Canonical element for a signed integer (reduced mod 2^l).
    #[inline]
    pub fn from_signed(&self, v: i64) -> u64 {
        (v as u64) & self.mask()
    }

    /// Most significant (sign) bit.
    #[inline]
    pub fn msb(&self, v: u64) -> bool {
        (v >> (self.l - 1)) & 1 == 1
    }

    /// Arithmetic right shift by an arbitrary amount within the l-bit word.
    #[inline]
    pub fn ashr(&self, v: u64, k: u32) -> u64 {
        let k = k.min(self.l as u32 - 1);
        self.from_signed(self.signed(v) >> k)
    }

    /// Arithmetic right shift by `beta`: the post-multiplication rescale.
    #[inline]
    pub fn truncate(&self, v: u64) -> u64 {
        self.ashr(v, self.beta as u32)
    }

    pub fn elem(&self, v: u64) -> RingElem {
        RingElem(self.reduce(v))
    }

    /// Encode a real number; fails when `|r| >= 2^alpha`.
    pub fn encode(&self, r: f64) -> Result<FixedPoint> {
        if !r.is_finite() || r.abs() >= 2f64.powi(self.alpha as i32) {
            return Err(Error::FixedPointOverflow {
                value: r,
                alpha: self.alpha,
            });
        }
        // f64::round is half-away-from-zero.
        let scaled = (r * 2f64.powi(self.beta as i32)).round() as i64;
        Ok(FixedPoint {
            raw: RingElem(self.from_signed(scaled)),
            params: *self,
        })
    }

    pub fn decode(&self, raw: u64) -> f64 {
        self.signed(raw) as f64 / 2f64.powi(self.beta as i32)
    }
}

/// Canonical element of `Z_{2^l}`; the width lives in the accompanying [`RingParams`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(transparent)]
pub struct RingElem(pub u64);

impl RingElem {
    pub fn value(self) -> u64 {
        self.0
    }
}

pub fn ring_add(a: RingElem, b: RingElem, p: RingParams) -> RingElem {
    RingElem(p.add(a.0, b.0))
}

pub fn ring_sub(a: RingElem, b: RingElem, p: RingParams) -> RingElem {
    RingElem(p.sub(a.0, b.0))
}

pub fn ring_mul(a: RingElem, b: RingElem, p: RingParams) -> RingElem {
    RingElem(p.mul(a.0, b.0))
}

/// A fixed-point number: `signed(raw) / 2^beta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPoint {
    pub raw: RingElem,
    pub params: RingParams,
}

impl FixedPoint {
    pub fn to_f64(&self) -> f64 {
        self.params.decode(self.raw.0)
    }
}

pub fn fx_encode(r: f64, p: RingParams) -> Result<FixedPoint> {
    p.encode(r)
}

pub fn fx_decode(f: FixedPoint) -> f64 {
    f.to_f64()
}

pub fn fx_truncate(x: RingElem, p: RingParams) -> RingElem {
    RingElem(p.truncate(x.0))
}
