//! Boolean circuits: representation, validation, plaintext simulation,
//! levelization and unrolling of sequential circuits.
//!
//! Wire 0 is the constant 0 and wire 1 the constant 1. Inputs are grouped
//! per party; a sequential circuit additionally has registers whose `q` wire
//! holds the value latched from `d` at the end of the previous cycle.

mod builder;
pub mod library;
mod text;

pub use builder::Builder;
pub use text::{emit_circuit, parse_circuit};

use crate::error::{Error, Result};

pub type Wire = u32;

pub const ZERO: Wire = 0;
pub const ONE: Wire = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Xor { a: Wire, b: Wire, out: Wire },
    And { a: Wire, b: Wire, out: Wire },
    Not { a: Wire, out: Wire },
}

impl Gate {
    pub fn out(&self) -> Wire {
        match *self {
            Gate::Xor { out, .. } | Gate::And { out, .. } | Gate::Not { out, .. } => out,
        }
    }

    pub fn ins(&self) -> (Wire, Option<Wire>) {
        match *self {
            Gate::Xor { a, b, .. } | Gate::And { a, b, .. } => (a, Some(b)),
            Gate::Not { a, .. } => (a, None),
        }
    }

    pub fn is_and(&self) -> bool {
        matches!(self, Gate::And { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Register {
    pub init: bool,
    pub d: Wire,
    pub q: Wire,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Circuit {
    pub name: String,
    pub num_wires: u32,
    pub inputs: [Vec<Wire>; 2],
    pub outputs: Vec<Wire>,
    pub gates: Vec<Gate>,
    pub registers: Vec<Register>,
}

impl Circuit {
    pub fn input_len(&self) -> usize {
        self.inputs[0].len() + self.inputs[1].len()
    }

    pub fn and_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_and()).count()
    }

    pub fn xor_count(&self) -> usize {
        self.gates.len() - self.and_count()
    }

    pub fn is_sequential(&self) -> bool {
        !self.registers.is_empty()
    }

    /// Check wire ranges, single drivers and topological gate order.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_wires as usize;
        if n < 2 {
            return Err(Error::InvalidCircuit("fewer than 2 wires".into()));
        }
        let mut driven = vec![false; n];
        driven[0] = true;
        driven[1] = true;
        let mut drive = |w: Wire, what: &str| -> Result<()> {
            let i = w as usize;
            if i >= n {
                return Err(Error::InvalidCircuit(format!("{what} wire {w} out of range")));
            }
            if driven[i] {
                return Err(Error::InvalidCircuit(format!("wire {w} is driven twice")));
            }
            driven[i] = true;
            Ok(())
        };
        for w in self.inputs.iter().flatten() {
            drive(*w, "input")?;
        }
        for r in &self.registers {
            drive(r.q, "register")?;
        }
        let mut ready = vec![false; n];
        ready[0] = true;
        ready[1] = true;
        for w in self.inputs.iter().flatten() {
            ready[*w as usize] = true;
        }
        for r in &self.registers {
            ready[r.q as usize] = true;
        }
        for g in &self.gates {
            let (a, b) = g.ins();
            for w in std::iter::once(a).chain(b) {
                if w as usize >= n || !ready[w as usize] {
                    return Err(Error::InvalidCircuit(format!(
                        "gate reads wire {w} before it is computed"
                    )));
                }
            }
            drive(g.out(), "gate")?;
            ready[g.out() as usize] = true;
        }
        for &w in self.outputs.iter().chain(self.registers.iter().map(|r| &r.d)) {
            if w as usize >= n || !ready[w as usize] {
                return Err(Error::InvalidCircuit(format!("wire {w} is read but never driven")));
            }
        }
        Ok(())
    }

    /// One combinational pass given values of inputs and register outputs;
    /// `vals` must already hold those.
    fn eval_pass(&self, vals: &mut [bool]) {
        for g in &self.gates {
            match *g {
                Gate::Xor { a, b, out } => vals[out as usize] = vals[a as usize] ^ vals[b as usize],
                Gate::And { a, b, out } => vals[out as usize] = vals[a as usize] & vals[b as usize],
                Gate::Not { a, out } => vals[out as usize] = !vals[a as usize],
            }
        }
    }

    /// Cycle-accurate plaintext evaluation. `inputs[c]` holds the `IN0 || IN1`
    /// bits for cycle `c`; returns the output bits of every cycle.
    pub fn simulate(&self, inputs: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
        let mut vals = vec![false; self.num_wires as usize];
        vals[1] = true;
        for r in &self.registers {
            vals[r.q as usize] = r.init;
        }
        let mut outs = Vec::with_capacity(inputs.len());
        for x in inputs {
            if x.len() != self.input_len() {
                return Err(Error::WidthMismatch {
                    expected: self.input_len(),
                    got: x.len(),
                });
            }
            for (w, v) in self.inputs.iter().flatten().zip(x) {
                vals[*w as usize] = *v;
            }
            self.eval_pass(&mut vals);
            outs.push(self.outputs.iter().map(|w| vals[*w as usize]).collect());
            let next: Vec<bool> = self.registers.iter().map(|r| vals[r.d as usize]).collect();
            for (r, v) in self.registers.iter().zip(next) {
                vals[r.q as usize] = v;
            }
        }
        Ok(outs)
    }

    /// Single-cycle convenience wrapper.
    pub fn eval(&self, inputs: &[bool]) -> Result<Vec<bool>> {
        Ok(self.simulate(&[inputs.to_vec()])?.pop().unwrap())
    }

    /// Group gates by multiplicative depth.
    pub fn levelize(&self) -> LevelizedCircuit {
        let mut depth = vec![0u32; self.num_wires as usize];
        let mut gate_depth = Vec::with_capacity(self.gates.len());
        let mut max = 0;
        for g in &self.gates {
            let (a, b) = g.ins();
            let d_in = depth[a as usize].max(b.map_or(0, |b| depth[b as usize]));
            let d = if g.is_and() { d_in + 1 } else { d_in };
            depth[g.out() as usize] = d;
            gate_depth.push(d);
            max = max.max(d);
        }
        let levels = max as usize;
        let mut and_levels = vec![Vec::new(); levels];
        let mut linear = vec![Vec::new(); levels + 1];
        for (i, (g, d)) in self.gates.iter().zip(gate_depth).enumerate() {
            if g.is_and() {
                and_levels[d as usize - 1].push(i);
            } else {
                linear[d as usize].push(i);
            }
        }
        LevelizedCircuit {
            circuit: self.clone(),
            and_levels,
            linear,
        }
    }

    /// Combinational circuit equivalent to `cycles` cycles of this one.
    /// Inputs are per party, cycle-major; outputs are every cycle's outputs
    /// in cycle order.
    pub fn unroll(&self, cycles: usize) -> Circuit {
        let mut b = Builder::new();
        let ins: [Vec<Vec<Wire>>; 2] = [0, 1].map(|p| (0..cycles).map(|_| b.input(p, self.inputs[p].len())).collect());
        let mut q: Vec<Wire> = self.registers.iter().map(|r| if r.init { ONE } else { ZERO }).collect();
        let mut outs = Vec::new();
        for c in 0..cycles {
            let mut map = vec![ZERO; self.num_wires as usize];
            map[1] = ONE;
            for p in 0..2 {
                for (w, nw) in self.inputs[p].iter().zip(&ins[p][c]) {
                    map[*w as usize] = *nw;
                }
            }
            for (r, nw) in self.registers.iter().zip(&q) {
                map[r.q as usize] = *nw;
            }
            for g in &self.gates {
                let v = match *g {
                    Gate::Xor { a, b: bb, .. } => b.xor(map[a as usize], map[bb as usize]),
                    Gate::And { a, b: bb, .. } => b.and(map[a as usize], map[bb as usize]),
                    Gate::Not { a, .. } => b.not(map[a as usize]),
                };
                map[g.out() as usize] = v;
            }
            outs.extend(self.outputs.iter().map(|w| map[*w as usize]));
            q = self.registers.iter().map(|r| map[r.d as usize]).collect();
        }
        b.finish(&format!("{}_x{cycles}", self.name), outs)
    }

    /// `n` independent copies side by side; inputs and outputs concatenated per copy.
    pub fn replicate(&self, n: usize) -> Circuit {
        let stride = self.num_wires - 2;
        let map = |k: usize, w: Wire| if w < 2 { w } else { w + k as Wire * stride };
        let mut c = Circuit {
            name: format!("{}x{n}", self.name),
            num_wires: 2 + stride * n as Wire,
            ..Default::default()
        };
        for k in 0..n {
            for p in 0..2 {
                c.inputs[p].extend(self.inputs[p].iter().map(|&w| map(k, w)));
            }
            c.outputs.extend(self.outputs.iter().map(|&w| map(k, w)));
            c.gates.extend(self.gates.iter().map(|g| match *g {
                Gate::Xor { a, b, out } => Gate::Xor { a: map(k, a), b: map(k, b), out: map(k, out) },
                Gate::And { a, b, out } => Gate::And { a: map(k, a), b: map(k, b), out: map(k, out) },
                Gate::Not { a, out } => Gate::Not { a: map(k, a), out: map(k, out) },
            }));
            c.registers.extend(self.registers.iter().map(|r| Register {
                init: r.init,
                d: map(k, r.d),
                q: map(k, r.q),
            }));
        }
        c
    }
}

/// Gates grouped by AND depth. Level `k` of `and_levels` holds the AND
/// gates of depth `k + 1`; `linear[k]` holds the XOR/NOT gates of depth `k`.
/// Evaluation order: `linear[0]`, then for each level its ANDs followed by
/// the linear gates of that depth.
#[derive(Clone, Debug)]
pub struct LevelizedCircuit {
    pub circuit: Circuit,
    pub and_levels: Vec<Vec<usize>>,
    pub linear: Vec<Vec<usize>>,
}

impl LevelizedCircuit {
    pub fn depth(&self) -> usize {
        self.and_levels.len()
    }
}

pub fn levelize(c: &Circuit) -> LevelizedCircuit {
    c.levelize()
}

pub fn simulate(c: &Circuit, inputs: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
    c.simulate(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counter(w: usize) -> Circuit {
        let mut b = Builder::new();
        let regs: Vec<(usize, Wire)> = (0..w).map(|_| b.register(false)).collect();
        let q: Vec<Wire> = regs.iter().map(|r| r.1).collect();
        let mut one = vec![ZERO; w];
        one[0] = ONE;
        let d = library::add_wires(&mut b, &q, &one, library::Variant::Size);
        for (r, dw) in regs.iter().zip(&d) {
            b.connect_register(r.0, *dw);
        }
        b.finish("counter", d)
    }

    #[test]
    fn counter_counts() {
        let c = counter(4);
        c.validate().unwrap();
        let out = c.simulate(&vec![vec![]; 3]).unwrap();
        assert_eq!(crate::bits::bits_word(&out[2]), 3);
    }

    #[test]
    fn unrolled_matches_sequential() {
        let c = counter(4);
        let u = c.unroll(5);
        assert!(!u.is_sequential());
        let seq: Vec<bool> = c.simulate(&vec![vec![]; 5]).unwrap().concat();
        assert_eq!(u.eval(&[]).unwrap(), seq);
    }

    #[test]
    fn levels() {
        let mut b = Builder::new();
        let x = b.input(0, 2);
        let y = b.input(1, 2);
        let o1 = b.and(x[0], y[0]);
        let o2 = b.and(x[1], y[1]);
        let c = b.finish("two", vec![o1, o2]);
        assert_eq!(c.levelize().depth(), 1);
        let mut b = Builder::new();
        let x = b.input(0, 2);
        let o = b.xor(x[0], x[1]);
        let c = b.finish("xor", vec![o]);
        assert_eq!(c.levelize().depth(), 0);
    }

    #[test]
    fn width_mismatch() {
        let c = counter(2);
        assert!(matches!(c.simulate(&[vec![true]]), Err(Error::WidthMismatch { .. })));
    }
}
