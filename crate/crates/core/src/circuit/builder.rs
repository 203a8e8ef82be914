use std::collections::HashMap;

use super::{Circuit, Gate, Register, Wire, ONE, ZERO};

/// Incremental circuit construction with constant folding, structural
/// hashing and dead-gate elimination on `finish`.
pub struct Builder {
    num_wires: u32,
    gates: Vec<Gate>,
    inputs: [Vec<Wire>; 2],
    registers: Vec<Register>,
    cache: HashMap<(u8, Wire, Wire), Wire>,
}

impl Default for Builder {
    fn default() -> Self {
        Self::new()
    }
}

impl Builder {
    pub fn new() -> Self {
        Builder {
            num_wires: 2,
            gates: Vec::new(),
            inputs: [Vec::new(), Vec::new()],
            registers: Vec::new(),
            cache: HashMap::new(),
        }
    }

    fn fresh(&mut self) -> Wire {
        self.num_wires += 1;
        self.num_wires - 1
    }

    pub fn input(&mut self, party: usize, width: usize) -> Vec<Wire> {
        (0..width)
            .map(|_| {
                let w = self.fresh();
                self.inputs[party].push(w);
                w
            })
            .collect()
    }

    fn cached(&mut self, kind: u8, a: Wire, b: Wire, make: impl FnOnce(Wire) -> Gate) -> Wire {
        let key = (kind, a.min(b), a.max(b));
        if let Some(&w) = self.cache.get(&key) {
            return w;
        }
        let out = self.fresh();
        self.gates.push(make(out));
        self.cache.insert(key, out);
        out
    }

    pub fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (ZERO, x) | (x, ZERO) => x,
            (ONE, x) | (x, ONE) => self.not(x),
            _ if a == b => ZERO,
            _ => self.cached(0, a, b, |out| Gate::Xor { a, b, out }),
        }
    }

    pub fn and(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (ZERO, _) | (_, ZERO) => ZERO,
            (ONE, x) | (x, ONE) => x,
            _ if a == b => a,
            _ => self.cached(1, a, b, |out| Gate::And { a, b, out }),
        }
    }

    pub fn not(&mut self, a: Wire) -> Wire {
        match a {
            ZERO => ONE,
            ONE => ZERO,
            _ => {
                if let Some(&w) = self.cache.get(&(3, a, a)) {
                    return w;
                }
                let w = self.cached(2, a, a, |out| Gate::Not { a, out });
                self.cache.insert((3, w, w), a);
                w
            }
        }
    }

    pub fn or(&mut self, a: Wire, b: Wire) -> Wire {
        let na = self.not(a);
        let nb = self.not(b);
        let t = self.and(na, nb);
        self.not(t)
    }

    /// A register with the given initial value; returns `(index, q wire)`.
    pub fn register(&mut self, init: bool) -> (usize, Wire) {
        let q = self.fresh();
        self.registers.push(Register { init, d: ZERO, q });
        (self.registers.len() - 1, q)
    }

    pub fn connect_register(&mut self, idx: usize, d: Wire) {
        self.registers[idx].d = d;
    }

    /// Instantiate a combinational circuit on the given input wires
    /// (`IN0 || IN1` order) and return its output wires.
    pub fn embed(&mut self, c: &Circuit, ins: &[Wire]) -> Vec<Wire> {
        assert!(c.registers.is_empty(), "cannot embed a sequential circuit");
        assert_eq!(ins.len(), c.input_len());
        let mut map = vec![ZERO; c.num_wires as usize];
        map[1] = ONE;
        for (w, nw) in c.inputs.iter().flatten().zip(ins) {
            map[*w as usize] = *nw;
        }
        for g in &c.gates {
            map[g.out() as usize] = match *g {
                Gate::Xor { a, b, .. } => self.xor(map[a as usize], map[b as usize]),
                Gate::And { a, b, .. } => self.and(map[a as usize], map[b as usize]),
                Gate::Not { a, .. } => self.not(map[a as usize]),
            };
        }
        c.outputs.iter().map(|w| map[*w as usize]).collect()
    }

    /// Drop gates and registers that cannot reach an output, renumber wires
    /// densely (constants, inputs, register outputs, gate outputs) and return
    /// the circuit.
    pub fn finish(self, name: &str, outputs: Vec<Wire>) -> Circuit {
        let n = self.num_wires as usize;
        let mut gate_of = vec![usize::MAX; n];
        for (i, g) in self.gates.iter().enumerate() {
            gate_of[g.out() as usize] = i;
        }
        let mut reg_of = vec![usize::MAX; n];
        for (i, r) in self.registers.iter().enumerate() {
            reg_of[r.q as usize] = i;
        }
        let mut live = vec![false; n];
        let mut stack: Vec<Wire> = outputs.clone();
        while let Some(w) = stack.pop() {
            if live[w as usize] {
                continue;
            }
            live[w as usize] = true;
            let gi = gate_of[w as usize];
            if gi != usize::MAX {
                let (a, b) = self.gates[gi].ins();
                stack.push(a);
                stack.extend(b);
            }
            let ri = reg_of[w as usize];
            if ri != usize::MAX {
                stack.push(self.registers[ri].d);
            }
        }
        let mut map = vec![u32::MAX; n];
        map[0] = 0;
        map[1] = 1;
        let mut next = 2u32;
        let mut assign = |w: Wire, map: &mut Vec<u32>| {
            map[w as usize] = next;
            next += 1;
            next - 1
        };
        let inputs = [0, 1].map(|p| {
            self.inputs[p]
                .iter()
                .map(|&w| assign(w, &mut map))
                .collect::<Vec<_>>()
        });
        let live_regs: Vec<Register> = self
            .registers
            .iter()
            .filter(|r| live[r.q as usize])
            .copied()
            .collect();
        for r in &live_regs {
            assign(r.q, &mut map);
        }
        let mut gates = Vec::new();
        for g in &self.gates {
            if !live[g.out() as usize] {
                continue;
            }
            let out = assign(g.out(), &mut map);
            gates.push(match *g {
                Gate::Xor { a, b, .. } => Gate::Xor {
                    a: map[a as usize],
                    b: map[b as usize],
                    out,
                },
                Gate::And { a, b, .. } => Gate::And {
                    a: map[a as usize],
                    b: map[b as usize],
                    out,
                },
                Gate::Not { a, .. } => Gate::Not { a: map[a as usize], out },
            });
        }
        let registers = live_regs
            .iter()
            .map(|r| Register {
                init: r.init,
                d: map[r.d as usize],
                q: map[r.q as usize],
            })
            .collect();
        Circuit {
            name: name.to_string(),
            num_wires: next,
            inputs,
            outputs: outputs.iter().map(|w| map[*w as usize]).collect(),
            gates,
            registers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_and_dce() {
        let mut b = Builder::new();
        let x = b.input(0, 2);
        let dead = b.and(x[0], x[1]);
        let _ = dead;
        assert_eq!(b.and(x[0], ZERO), ZERO);
        assert_eq!(b.xor(x[0], x[0]), ZERO);
        let n = b.not(x[0]);
        assert_eq!(b.not(n), x[0]);
        let o = b.xor(x[0], x[1]);
        assert_eq!(b.xor(x[1], x[0]), o);
        let c = b.finish("t", vec![o]);
        c.validate().unwrap();
        assert_eq!(c.gates.len(), 1);
        assert_eq!(c.num_wires, 5);
    }
}
