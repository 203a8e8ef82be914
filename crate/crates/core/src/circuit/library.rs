//! Circuit library over two's-complement words (LSB first).

use std::collections::HashMap;

use super::{Builder, Circuit, Wire, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Ripple carry: fewest AND gates.
    Size,
    /// Parallel prefix: logarithmic AND depth.
    Depth,
}

/// Generate/propagate prefix over `g[s..s+n]`, `p[s..s+n]`.
struct Prefix<'a> {
    g: &'a [Wire],
    p: &'a [Wire],
    memo_g: HashMap<(usize, usize), Wire>,
    memo_p: HashMap<(usize, usize), Wire>,
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n.max(1) - 1).leading_zeros()
}

impl Prefix<'_> {
    fn prop(&mut self, b: &mut Builder, s: usize, n: usize) -> Wire {
        if n == 1 {
            return self.p[s];
        }
        if let Some(&w) = self.memo_p.get(&(s, n)) {
            return w;
        }
        let lo = 1 << (ceil_log2(n) - 1);
        let a = self.prop(b, s, lo);
        let c = self.prop(b, s + lo, n - lo);
        let w = b.and(a, c);
        self.memo_p.insert((s, n), w);
        w
    }

    // Group generate of a range. Splitting so the low part has size
    // 2^(d-1) - 1 keeps the AND depth at ceil(log2(n + 1)).
    fn gen(&mut self, b: &mut Builder, s: usize, n: usize) -> Wire {
        if n == 1 {
            return self.g[s];
        }
        if let Some(&w) = self.memo_g.get(&(s, n)) {
            return w;
        }
        let d = ceil_log2(n + 1);
        let lo = (1usize << (d - 1)) - 1;
        let glo = self.gen(b, s, lo);
        let ghi = self.gen(b, s + lo, n - lo);
        let phi = self.prop(b, s + lo, n - lo);
        let t = b.and(phi, glo);
        let w = b.xor(ghi, t);
        self.memo_g.insert((s, n), w);
        w
    }
}

/// Carries `c_1..c_w` of `x + y + cin`: `c_{i+1}` is the carry out of bit `i`.
fn carries(b: &mut Builder, x: &[Wire], y: &[Wire], cin: Wire, v: Variant) -> Vec<Wire> {
    let w = x.len();
    match v {
        Variant::Size => {
            let mut c = cin;
            let mut out = Vec::with_capacity(w);
            for i in 0..w {
                // c' = ((x ^ c) & (y ^ c)) ^ c
                let a = b.xor(x[i], c);
                let d = b.xor(y[i], c);
                let t = b.and(a, d);
                c = b.xor(t, c);
                out.push(c);
            }
            out
        }
        Variant::Depth => {
            let mut g: Vec<Wire> = Vec::with_capacity(w + 1);
            let mut p: Vec<Wire> = Vec::with_capacity(w + 1);
            let off = if cin == ZERO {
                0
            } else {
                g.push(cin);
                p.push(ZERO);
                1
            };
            for i in 0..w {
                let gi = b.and(x[i], y[i]);
                let pi = b.xor(x[i], y[i]);
                g.push(gi);
                p.push(pi);
            }
            let mut pre = Prefix {
                g: &g,
                p: &p,
                memo_g: HashMap::new(),
                memo_p: HashMap::new(),
            };
            (0..w).map(|i| pre.gen(b, 0, i + 1 + off)).collect()
        }
    }
}

fn add_cin(b: &mut Builder, x: &[Wire], y: &[Wire], cin: Wire, v: Variant) -> Vec<Wire> {
    assert_eq!(x.len(), y.len());
    let w = x.len();
    if w == 0 {
        return vec![];
    }
    let c = carries(b, &x[..w - 1], &y[..w - 1], cin, v);
    (0..w)
        .map(|i| {
            let ci = if i == 0 { cin } else { c[i - 1] };
            let s = b.xor(x[i], y[i]);
            b.xor(s, ci)
        })
        .collect()
}

/// `x + y mod 2^w`.
pub fn add_wires(b: &mut Builder, x: &[Wire], y: &[Wire], v: Variant) -> Vec<Wire> {
    add_cin(b, x, y, ZERO, v)
}

/// `x - y mod 2^w`.
pub fn sub_wires(b: &mut Builder, x: &[Wire], y: &[Wire], v: Variant) -> Vec<Wire> {
    let ny: Vec<Wire> = y.iter().map(|&w| b.not(w)).collect();
    add_cin(b, x, &ny, ONE, v)
}

/// Signed `x > y`.
pub fn gt_wires(b: &mut Builder, x: &[Wire], y: &[Wire], v: Variant) -> Wire {
    assert_eq!(x.len(), y.len());
    let w = x.len();
    // Flipping both sign bits maps signed order onto unsigned order, and
    // x > y (unsigned) iff x + !y carries out of the top bit.
    let mut xs = x.to_vec();
    xs[w - 1] = b.not(x[w - 1]);
    let ny: Vec<Wire> = (0..w)
        .map(|i| if i == w - 1 { y[i] } else { b.not(y[i]) })
        .collect();
    *carries(b, &xs, &ny, ZERO, v).last().unwrap()
}

fn and_tree(b: &mut Builder, mut v: Vec<Wire>) -> Wire {
    if v.is_empty() {
        return ONE;
    }
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|c| if c.len() == 2 { b.and(c[0], c[1]) } else { c[0] })
            .collect();
    }
    v[0]
}

pub fn eq_wires(b: &mut Builder, x: &[Wire], y: &[Wire]) -> Wire {
    let same: Vec<Wire> = x
        .iter()
        .zip(y)
        .map(|(&a, &c)| {
            let d = b.xor(a, c);
            b.not(d)
        })
        .collect();
    and_tree(b, same)
}

/// `s ? x : y`, bitwise.
pub fn mux_wires(b: &mut Builder, s: Wire, x: &[Wire], y: &[Wire]) -> Vec<Wire> {
    x.iter()
        .zip(y)
        .map(|(&a, &c)| {
            let d = b.xor(a, c);
            let t = b.and(s, d);
            b.xor(c, t)
        })
        .collect()
}

/// `x` if `x > 0` else 0. One AND per non-sign bit, sharing the negated sign.
pub fn relu_wires(b: &mut Builder, x: &[Wire]) -> Vec<Wire> {
    let w = x.len();
    let pos = b.not(x[w - 1]);
    let mut out: Vec<Wire> = x[..w - 1].iter().map(|&a| b.and(a, pos)).collect();
    out.push(ZERO);
    out
}

/// Arithmetic shift right by `k`: rewiring only.
pub fn ashr_wires(x: &[Wire], k: usize) -> Vec<Wire> {
    let w = x.len();
    (0..w).map(|i| x[(i + k).min(w - 1)]).collect()
}

pub fn max_wires(b: &mut Builder, x: &[Wire], y: &[Wire], v: Variant) -> Vec<Wire> {
    let g = gt_wires(b, x, y, v);
    mux_wires(b, g, x, y)
}

/// `x > 0`.
pub fn is_positive_wires(b: &mut Builder, x: &[Wire]) -> Wire {
    let w = x.len();
    let nz: Vec<Wire> = x.iter().map(|&a| b.not(a)).collect();
    let all_zero = and_tree(b, nz);
    let nonzero = b.not(all_zero);
    let nonneg = b.not(x[w - 1]);
    b.and(nonneg, nonzero)
}

pub fn index_width(n: usize) -> usize {
    (ceil_log2(n) as usize).max(1)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax_wires(b: &mut Builder, values: &[Vec<Wire>], v: Variant) -> Vec<Wire> {
    let iw = index_width(values.len());
    let mut layer: Vec<(Vec<Wire>, Vec<Wire>)> = values
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let idx = (0..iw).map(|k| if (i >> k) & 1 == 1 { ONE } else { ZERO }).collect();
            (x.clone(), idx)
        })
        .collect();
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len().div_ceil(2));
        let mut it = layer.into_iter();
        while let Some(l) = it.next() {
            match it.next() {
                None => next.push(l),
                Some(r) => {
                    // The right candidate has the larger indices: take it only if strictly greater.
                    let g = gt_wires(b, &r.0, &l.0, v);
                    let val = mux_wires(b, g, &r.0, &l.0);
                    let idx = mux_wires(b, g, &r.1, &l.1);
                    next.push((val, idx));
                }
            }
        }
        layer = next;
    }
    layer.pop().map(|x| x.1).unwrap_or_default()
}

fn check_width(w: usize) -> Result<()> {
    if w == 0 || w > 64 {
        return Err(Error::InvalidCircuit(format!("width {w} is outside 1..=64")));
    }
    Ok(())
}

fn binary(name: &str, w: usize, f: impl FnOnce(&mut Builder, &[Wire], &[Wire]) -> Vec<Wire>) -> Result<Circuit> {
    check_width(w)?;
    let mut b = Builder::new();
    let x = b.input(0, w);
    let y = b.input(1, w);
    let out = f(&mut b, &x, &y);
    Ok(b.finish(&format!("{name}{w}"), out))
}

/// IN0 = x, IN1 = y, OUT = x + y.
pub fn build_add(w: usize, v: Variant) -> Result<Circuit> {
    binary("add", w, |b, x, y| add_wires(b, x, y, v))
}

pub fn build_sub(w: usize, v: Variant) -> Result<Circuit> {
    binary("sub", w, |b, x, y| sub_wires(b, x, y, v))
}

/// One output bit: signed `x > y`.
pub fn build_cmp(w: usize, v: Variant) -> Result<Circuit> {
    binary("cmp", w, |b, x, y| vec![gt_wires(b, x, y, v)])
}

pub fn build_eq(w: usize) -> Result<Circuit> {
    binary("eq", w, |b, x, y| vec![eq_wires(b, x, y)])
}

pub fn build_max(w: usize, v: Variant) -> Result<Circuit> {
    binary("max", w, |b, x, y| max_wires(b, x, y, v))
}

/// IN0 = selector bit then x, IN1 = y, OUT = s ? x : y.
pub fn build_mux(w: usize) -> Result<Circuit> {
    check_width(w)?;
    let mut b = Builder::new();
    let s = b.input(0, 1)[0];
    let x = b.input(0, w);
    let y = b.input(1, w);
    let out = mux_wires(&mut b, s, &x, &y);
    Ok(b.finish(&format!("mux{w}"), out))
}

/// Unary ops take their operand split as `IN0 = x`, `IN1` empty.
pub fn build_relu(w: usize) -> Result<Circuit> {
    check_width(w)?;
    let mut b = Builder::new();
    let x = b.input(0, w);
    let out = relu_wires(&mut b, &x);
    Ok(b.finish(&format!("relu{w}"), out))
}

pub fn build_shift(w: usize, k: usize) -> Result<Circuit> {
    check_width(w)?;
    let mut b = Builder::new();
    let x = b.input(0, w);
    Ok(b.finish(&format!("ashr{w}_{k}"), ashr_wires(&x, k)))
}

/// `n` values of width `w`; the first `ceil(n/2)` are IN0, the rest IN1.
pub fn build_argmax(n: usize, w: usize, v: Variant) -> Result<Circuit> {
    check_width(w)?;
    if n == 0 {
        return Err(Error::InvalidCircuit("argmax over zero values".into()));
    }
    let mut b = Builder::new();
    let h = n.div_ceil(2);
    let mut vals: Vec<Vec<Wire>> = (0..h).map(|_| b.input(0, w)).collect();
    vals.extend((h..n).map(|_| b.input(1, w)));
    let out = argmax_wires(&mut b, &vals, v);
    Ok(b.finish(&format!("argmax{n}x{w}"), out))
}

/// `x0 + x1` of two additive shares, shifted right by `debt` bits.
pub fn build_share_adder(w: usize, debt: usize, v: Variant) -> Result<Circuit> {
    binary("a2y", w, |b, x, y| {
        let s = add_wires(b, x, y, v);
        ashr_wires(&s, debt)
    })
}

/// A library circuit by name, as the CLI addresses them.
pub fn by_name(name: &str, w: usize, v: Variant) -> Result<Circuit> {
    match name {
        "add" => build_add(w, v),
        "sub" => build_sub(w, v),
        "cmp" => build_cmp(w, v),
        "eq" => build_eq(w),
        "mux" => build_mux(w),
        "relu" => build_relu(w),
        "max" => build_max(w, v),
        "argmax" => build_argmax(4, w, v),
        _ => Err(Error::InvalidCircuit(format!("unknown library circuit {name}"))),
    }
}
