//! Line-oriented circuit text format.
//!
//! ```text
//! # optional comment / name
//! W <wires> IN0 <ids..> IN1 <ids..> OUT <ids..> CONST0 0 CONST1 1
//! XOR a b c
//! AND a b c
//! NOT a c
//! REG <init> d q
//! ```
//!
//! Gates may appear in any order; they are sorted topologically on parse.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Circuit, Gate, Register, Wire};
use crate::error::{Error, Result};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::CircuitParse { line, msg: msg.into() }
}

fn num(tok: Option<&str>, line: usize) -> Result<Wire> {
    let t = tok.ok_or_else(|| perr(line, "missing operand"))?;
    t.parse().map_err(|_| perr(line, format!("bad wire id {t:?}")))
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut c = Circuit::default();
    let mut header_seen = false;
    let mut gates = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if !header_seen && c.name.is_empty() {
                c.name = rest.trim().to_string();
            }
            continue;
        }
        let mut toks = line.split_whitespace();
        let kw = toks.next().unwrap();
        if !header_seen {
            if kw != "W" {
                return Err(perr(ln, "expected header starting with W"));
            }
            c.num_wires = num(toks.next(), ln)?;
            let mut section = "";
            for t in toks {
                match t {
                    "IN0" | "IN1" | "OUT" | "CONST0" | "CONST1" => section = t,
                    _ => {
                        let w: Wire = t.parse().map_err(|_| perr(ln, format!("bad token {t:?}")))?;
                        match section {
                            "IN0" => c.inputs[0].push(w),
                            "IN1" => c.inputs[1].push(w),
                            "OUT" => c.outputs.push(w),
                            "CONST0" if w == 0 => {}
                            "CONST1" if w == 1 => {}
                            "CONST0" | "CONST1" => return Err(perr(ln, "constants must be wires 0 and 1")),
                            _ => return Err(perr(ln, "wire id before any section")),
                        }
                    }
                }
            }
            header_seen = true;
            continue;
        }
        let g = match kw {
            "XOR" | "AND" => {
                let a = num(toks.next(), ln)?;
                let b = num(toks.next(), ln)?;
                let out = num(toks.next(), ln)?;
                if kw == "XOR" {
                    Gate::Xor { a, b, out }
                } else {
                    Gate::And { a, b, out }
                }
            }
            "NOT" => {
                let a = num(toks.next(), ln)?;
                let out = num(toks.next(), ln)?;
                Gate::Not { a, out }
            }
            "REG" => {
                let init = match toks.next() {
                    Some("0") => false,
                    Some("1") => true,
                    _ => return Err(perr(ln, "register init must be 0 or 1")),
                };
                let d = num(toks.next(), ln)?;
                let q = num(toks.next(), ln)?;
                c.registers.push(Register { init, d, q });
                continue;
            }
            other => return Err(perr(ln, format!("unknown gate {other:?}"))),
        };
        if toks.next().is_some() {
            return Err(perr(ln, "trailing tokens"));
        }
        gates.push((g, ln));
    }
    if !header_seen {
        return Err(perr(0, "missing header"));
    }
    c.gates = topo_sort(&c, gates)?;
    c.validate()?;
    Ok(c)
}

fn topo_sort(c: &Circuit, gates: Vec<(Gate, usize)>) -> Result<Vec<Gate>> {
    let n = c.num_wires as usize;
    let mut driver = vec![usize::MAX; n];
    for (i, (g, ln)) in gates.iter().enumerate() {
        let o = g.out() as usize;
        if o >= n {
            return Err(perr(*ln, format!("wire {o} out of range")));
        }
        if driver[o] != usize::MAX || o < 2 {
            return Err(perr(*ln, format!("wire {o} is driven twice")));
        }
        driver[o] = i;
    }
    let mut pending = vec![0usize; gates.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (i, (g, ln)) in gates.iter().enumerate() {
        let (a, b) = g.ins();
        for w in std::iter::once(a).chain(b) {
            if w as usize >= n {
                return Err(perr(*ln, format!("wire {w} out of range")));
            }
            let d = driver[w as usize];
            if d != usize::MAX {
                pending[i] += 1;
                users[d].push(i);
            }
        }
    }
    // Smallest ready index first, so already-ordered input keeps its order.
    let mut q: BinaryHeap<Reverse<usize>> = (0..gates.len()).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut out = Vec::with_capacity(gates.len());
    while let Some(Reverse(i)) = q.pop() {
        out.push(gates[i].0);
        for &u in &users[i] {
            pending[u] -= 1;
            if pending[u] == 0 {
                q.push(Reverse(u));
            }
        }
    }
    if out.len() != gates.len() {
        let stuck = (0..gates.len()).find(|&i| pending[i] > 0).unwrap();
        return Err(perr(gates[stuck].1, "combinational cycle (loops need a REG)"));
    }
    Ok(out)
}

pub fn emit_circuit(c: &Circuit) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    if !c.name.is_empty() {
        writeln!(s, "# {}", c.name).unwrap();
    }
    let ids = |v: &[Wire]| v.iter().map(|w| format!(" {w}")).collect::<String>();
    writeln!(
        s,
        "W {} IN0{} IN1{} OUT{} CONST0 0 CONST1 1",
        c.num_wires,
        ids(&c.inputs[0]),
        ids(&c.inputs[1]),
        ids(&c.outputs)
    )
    .unwrap();
    for g in &c.gates {
        match *g {
            Gate::Xor { a, b, out } => writeln!(s, "XOR {a} {b} {out}"),
            Gate::And { a, b, out } => writeln!(s, "AND {a} {b} {out}"),
            Gate::Not { a, out } => writeln!(s, "NOT {a} {out}"),
        }
        .unwrap();
    }
    for r in &c.registers {
        writeln!(s, "REG {} {} {}", r.init as u8, r.d, r.q).unwrap();
    }
    s
}
