//! Single-use pools of expanded correlated material.

use serde::Serialize;

use crate::correlated::{ArithTriple, BoolTriples, VdpShare0, VdpShare1};
use crate::error::{Error, Result};
use crate::ot::{OtReceiverPool, OtSenderPool};

fn exhausted(kind: &'static str, requested: usize, remaining: usize) -> Error {
    Error::ResourceExhausted {
        kind,
        requested,
        remaining,
    }
}

#[derive(Debug, Default)]
pub struct AmtPool {
    t: Vec<ArithTriple>,
    next: usize,
}

impl AmtPool {
    pub fn new(t: Vec<ArithTriple>) -> Self {
        AmtPool { t, next: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.t.len() - self.next
    }

    pub fn take(&mut self, n: usize) -> Result<&[ArithTriple]> {
        if n > self.remaining() {
            return Err(exhausted("A-MT", n, self.remaining()));
        }
        let s = self.next;
        self.next += n;
        Ok(&self.t[s..s + n])
    }
}

#[derive(Debug, Default)]
pub struct BmtPool {
    t: BoolTriples,
    next: usize,
}

/// A contiguous run of Boolean triple shares.
pub struct BmtSlice<'a> {
    pub a: &'a crate::correlated::BitSlice,
    pub b: &'a crate::correlated::BitSlice,
    pub c: &'a crate::correlated::BitSlice,
}

impl BmtPool {
    pub fn new(t: BoolTriples) -> Self {
        BmtPool { t, next: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.t.len() - self.next
    }

    pub fn take(&mut self, n: usize) -> Result<BmtSlice<'_>> {
        if n > self.remaining() {
            return Err(exhausted("B-MT", n, self.remaining()));
        }
        let s = self.next;
        self.next += n;
        Ok(BmtSlice {
            a: &self.t.a[s..s + n],
            b: &self.t.b[s..s + n],
            c: &self.t.c[s..s + n],
        })
    }
}

/// Dot-product material, consumed in manifest order.
#[derive(Debug)]
pub enum VdpPool {
    P0(Vec<VdpShare0>, usize),
    P1(Vec<VdpShare1>, usize),
}

impl Default for VdpPool {
    fn default() -> Self {
        VdpPool::P0(Vec::new(), 0)
    }
}

impl VdpPool {
    pub fn remaining(&self) -> usize {
        match self {
            VdpPool::P0(v, i) => v.len() - i,
            VdpPool::P1(v, i) => v.len() - i,
        }
    }

    /// Length of the next unconsumed dot product.
    pub fn peek_len(&self) -> Option<usize> {
        match self {
            VdpPool::P0(v, i) => v.get(*i).map(|s| s.a0.len()),
            VdpPool::P1(v, i) => v.get(*i).map(|s| s.a1.len()),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.peek_len() {
            None => Err(exhausted("VDP", 1, 0)),
            Some(len) if len != n => Err(Error::VdpLengthMismatch { expected: len, got: n }),
            Some(_) => Ok(()),
        }
    }

    pub fn take0(&mut self, n: usize) -> Result<&VdpShare0> {
        self.check(n)?;
        match self {
            VdpPool::P0(v, i) => {
                *i += 1;
                Ok(&v[*i - 1])
            }
            VdpPool::P1(..) => Err(Error::RoleMismatch),
        }
    }

    pub fn take1(&mut self, n: usize) -> Result<&VdpShare1> {
        self.check(n)?;
        match self {
            VdpPool::P1(v, i) => {
                *i += 1;
                Ok(&v[*i - 1])
            }
            VdpPool::P0(..) => Err(Error::RoleMismatch),
        }
    }
}

/// Everything one party holds after the offline phase.
#[derive(Debug, Default)]
pub struct Pools {
    pub amt: AmtPool,
    pub bmt: BmtPool,
    pub ot_send: OtSenderPool,
    pub ot_recv: OtReceiverPool,
    pub vdp: VdpPool,
}

/// Unconsumed counts per resource kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Remaining {
    pub amt: usize,
    pub bmt: usize,
    pub ot: usize,
    pub vdp: usize,
}

impl Pools {
    pub fn remaining(&self) -> Remaining {
        Remaining {
            amt: self.amt.remaining(),
            bmt: self.bmt.remaining(),
            ot: self.ot_send.remaining() + self.ot_recv.remaining(),
            vdp: self.vdp.remaining(),
        }
    }
}
