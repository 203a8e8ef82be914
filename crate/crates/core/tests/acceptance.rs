//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, even when others fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};

use hybrid2pc::ass::{mul_da, mul_mt, vdp};
use hybrid2pc::atomic::{run_op, AtomicOp, Engine};
use hybrid2pc::circuit::library::{
    build_add, build_argmax, build_cmp, build_eq, build_max, build_mux, build_relu, build_share_adder, build_sub, Variant,
};
use hybrid2pc::circuit::Circuit;
use hybrid2pc::convert::{a2b, a2y, b2a, b2y, y2a, y2b};
use hybrid2pc::correlated::{Bits, OtReceiverMasks, OtSenderMasks};
use hybrid2pc::gc::gc_run;
use hybrid2pc::gmw::gmw_eval;
use hybrid2pc::manifest::ResourceManifest;
use hybrid2pc::ml::{nn_infer, plan_manifest, svm_classify, svm_manifest, NetSpec, Network, NnOutput, NnPlan, Profile, SvmModel};
use hybrid2pc::ot::{ot_recv_bytes, ot_send_bytes, OtReceiverPool, OtSenderPool};
use hybrid2pc::session::{run_local, run_local_with, LocalOptions, Party, Reveal};
use hybrid2pc::transport::{msg, Channel, Counter, Direction, Phase};
use hybrid2pc::RingParams;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T>(r: hybrid2pc::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("protocol error: {e}"))
}

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn wmask(w: usize) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

fn wsigned(x: u64, w: usize) -> i64 {
    ((x << (64 - w)) as i64) >> (64 - w)
}

fn wbits(x: u64, w: usize) -> Vec<bool> {
    (0..w).map(|i| x >> i & 1 == 1).collect()
}

fn big_mod(v: &BigUint, l: usize) -> u64 {
    let m = BigUint::from(1u8) << l;
    (v % m).to_u64_digits().first().copied().unwrap_or(0)
}

fn online(c: &hybrid2pc::transport::ByteLedger, dir: Direction) -> Counter {
    c.snapshot().total(Phase::Online, dir)
}

// ---------------------------------------------------------------- 1

fn offline_cost(m: &ResourceManifest) -> Result<(u64, u64), String> {
    let r = ok(run_local(m, |_| Ok(()), |_| Ok(())))?;
    let mut payload = 0;
    let mut total = 0;
    for l in [&r.ledger0, &r.ledger1] {
        let c = l.snapshot().total(Phase::Offline, Direction::Received);
        payload += c.payload_bytes;
        total += c.total_bytes();
    }
    Ok((payload, total))
}

fn criterion1() -> Outcome {
    const N: u64 = 100_000;
    let mut report = vec![];
    let mut cases: Vec<(String, ResourceManifest, u64)> = vec![];
    let r32 = RingParams::integer(32).unwrap();
    let mut m = ResourceManifest::new(r32);
    m.num_bmt = N;
    cases.push(("B-MT".into(), m, 1));
    for l in [16u8, 32, 64] {
        let mut m = ResourceManifest::new(RingParams::integer(l).unwrap());
        m.num_amt = N;
        cases.push((format!("A-MT/{l}"), m, l as u64));
    }
    let mut m = ResourceManifest::new(r32);
    m.num_ot = N;
    cases.push(("OT".into(), m, 128));
    for (name, m, bits) in cases {
        let (payload, total) = offline_cost(&m)?;
        // One 32-byte seed per party plus the correction lists.
        let exact = 64 + (N * bits).div_ceil(8);
        ensure!(payload == exact, "{name}: payload {payload} B, expected {exact} B");
        let amortized = total as f64 * 8.0 / N as f64;
        ensure!(
            amortized <= bits as f64 * 1.01,
            "{name}: {amortized:.4} bits/item exceeds {bits} bits + 1%"
        );
        report.push(format!("{name} {amortized:.4} b/item"));
    }
    Ok(report.join(", "))
}

// ---------------------------------------------------------------- 2

fn gc_table_bytes(c: &Circuit, seed: u64) -> Result<u64, String> {
    let mut g = rng(seed);
    let own0: Bits = (0..c.inputs[0].len()).map(|_| g.gen::<bool>()).collect();
    let own1: Bits = (0..c.inputs[1].len()).map(|_| g.gen::<bool>()).collect();
    let mut m = ResourceManifest::new(RingParams::integer(32).unwrap());
    m.num_ot = c.inputs[1].len() as u64;
    let opts = LocalOptions {
        tcp: true,
        ..Default::default()
    };
    let (c0, c1, a, b) = (c, c, &own0, &own1);
    let r = ok(run_local_with(
        &m,
        &opts,
        |p| gc_run(p, c0, std::slice::from_ref(a), Reveal::To(1)),
        |p| gc_run(p, c1, std::slice::from_ref(b), Reveal::To(1)),
    ))?;
    let mut x: Vec<bool> = own0.iter().by_vals().collect();
    x.extend(own1.iter().by_vals());
    let want = ok(c.eval(&x))?;
    let got: Vec<bool> = r.out1.unwrap()[0].iter().by_vals().collect();
    ensure!(got == want, "{}: GC output differs from simulation", c.name);
    Ok(r.ledger0.snapshot().type_bytes(Direction::Sent, msg::GC_TABLES))
}

fn criterion2() -> Outcome {
    let ring = RingParams::integer(32).unwrap();
    let opts = LocalOptions {
        tcp: true,
        ..Default::default()
    };
    let add = ok(run_op(AtomicOp::Add, Engine::Arith, 1000, ring, &opts))?;
    ensure!(add.correct, "ADD result wrong");
    ensure!(add.online_sent == [0, 0], "ADD sent {:?}", add.online_sent);
    let mult = ok(run_op(AtomicOp::Mult, Engine::Arith, 1000, ring, &opts))?;
    ensure!(mult.correct, "MULT result wrong");
    ensure!(mult.online_sent == [8000, 8000], "MULT sent {:?}", mult.online_sent);
    ensure!(mult.online_total() == 16000, "MULT total {}", mult.online_total());
    let and = ok(run_op(AtomicOp::And, Engine::Gmw, 1000, ring, &opts))?;
    ensure!(and.correct, "AND result wrong");
    ensure!(and.and_gates == 32000, "AND gates {}", and.and_gates);
    ensure!(and.online_sent == [8000, 8000], "AND sent {:?}", and.online_sent);

    let mut circuits: Vec<Circuit> = vec![];
    for v in [Variant::Size, Variant::Depth] {
        circuits.push(build_add(32, v).unwrap());
        circuits.push(build_sub(32, v).unwrap());
        circuits.push(build_cmp(32, v).unwrap());
        circuits.push(build_max(32, v).unwrap());
        circuits.push(build_argmax(4, 32, v).unwrap());
        circuits.push(build_share_adder(32, 12, v).unwrap());
    }
    circuits.push(build_eq(32).unwrap());
    circuits.push(build_mux(32).unwrap());
    circuits.push(build_relu(32).unwrap());
    for (i, c) in circuits.iter().enumerate() {
        let t = gc_table_bytes(c, i as u64)?;
        ensure!(t == 32 * c.and_count() as u64, "{}: {t} table bytes for {} ANDs", c.name, c.and_count());
    }
    for op in [AtomicOp::And, AtomicOp::Cmp, AtomicOp::Eq, AtomicOp::Mux] {
        let r = ok(run_op(op, Engine::Gc, 1000, ring, &opts))?;
        ensure!(r.correct, "{} under GC wrong", op.name());
        ensure!(
            r.table_bytes == 32 * r.and_gates as u64,
            "{} x1000: {} table bytes for {} ANDs",
            op.name(),
            r.table_bytes,
            r.and_gates
        );
    }
    Ok(format!(
        "ADD 0 B; MULT 8000 B/dir, 16000 B total; AND 8000 B/dir ({} B total); GC tables = 32 B/AND for {} circuits + 4 ops x1000",
        and.online_total(),
        circuits.len()
    ))
}

// ---------------------------------------------------------------- 3

fn triples_check() -> Result<(), String> {
    const N: usize = 100_000;
    for l in [16u8, 32, 64] {
        let ring = RingParams::integer(l).unwrap();
        let mut m = ResourceManifest::new(ring);
        m.num_amt = N as u64;
        m.num_bmt = N as u64;
        let take = |p: &mut Party| -> hybrid2pc::Result<_> {
            let a = p.pools.amt.take(N)?.to_vec();
            let t = p.pools.bmt.take(N)?;
            Ok((a, t.a.to_bitvec(), t.b.to_bitvec(), t.c.to_bitvec()))
        };
        let r = ok(run_local(&m, take, take))?;
        let (t0, t1) = (&r.out0, &r.out1);
        let l = l as usize;
        let mut nonzero = 0;
        for i in 0..N {
            let (x, y) = (&t0.0[i], &t1.0[i]);
            let a = BigUint::from(x.a) + y.a;
            let b = BigUint::from(x.b) + y.b;
            let c = big_mod(&(BigUint::from(x.c) + y.c), l);
            ensure!(big_mod(&(a * b), l) == c, "A-MT {i} at l={l} violates c = ab");
            nonzero += (x.a != 0) as usize;
        }
        ensure!(nonzero > N / 2, "A-MT shares look degenerate");
        for i in 0..N {
            let a = t0.1[i] ^ t1.1[i];
            let b = t0.2[i] ^ t1.2[i];
            ensure!(a & b == t0.3[i] ^ t1.3[i], "B-MT {i} violates c = a AND b");
        }
    }
    Ok(())
}

fn ot_pair(q: Vec<[u128; 2]>, r: Vec<bool>, m: usize, msgs: Vec<[Vec<u8>; 2]>, choices: Bits) -> Result<Vec<Vec<u8>>, String> {
    let qr = q.iter().zip(&r).map(|(q, &b)| q[b as usize]).collect();
    let mut sp = OtSenderPool::new(OtSenderMasks { q });
    let mut rp = OtReceiverPool::new(OtReceiverMasks {
        r: r.into_iter().collect(),
        qr,
    });
    let (mut a, mut b) = Channel::mem_pair_simple();
    std::thread::scope(|s| {
        let h = s.spawn(move || ot_send_bytes(&mut a, &mut sp, m, &msgs));
        let got = ot_recv_bytes(&mut b, &mut rp, m, &choices);
        ok(h.join().unwrap())?;
        ok(got)
    })
}

fn ot_check() -> Result<(), String> {
    let trace = ot_pair(
        vec![[0xAA, 0xBB]],
        vec![true],
        8,
        vec![[vec![0x01], vec![0x02]]],
        [true].into_iter().collect(),
    )?;
    ensure!(trace == vec![vec![0x02]], "OT trace gave {trace:?}");
    let mut g = rng(31);
    for m in [1usize, 7, 8, 64, 128, 200] {
        for r in [false, true] {
            for b in [false, true] {
                let nb = m.div_ceil(8);
                let mk = |g: &mut StdRng| {
                    let mut v = vec![0u8; nb];
                    g.fill_bytes(&mut v);
                    if m % 8 != 0 {
                        v[nb - 1] &= (1u8 << (m % 8)) - 1;
                    }
                    v
                };
                let pair = [mk(&mut g), mk(&mut g)];
                let q = [g.gen::<u128>(), g.gen::<u128>()];
                let got = ot_pair(vec![q], vec![r], m, vec![pair.clone()], [b].into_iter().collect())?;
                ensure!(got[0] == pair[b as usize], "OT m={m} r={r} b={b} wrong");
            }
        }
    }
    // Randomized instances through the dealer.
    const N: usize = 100_000;
    let mut m = ResourceManifest::new(RingParams::integer(64).unwrap());
    m.num_ot = N as u64;
    let msgs: Vec<[Vec<u8>; 2]> = (0..N)
        .map(|_| [g.gen::<u64>().to_le_bytes().to_vec(), g.gen::<u64>().to_le_bytes().to_vec()])
        .collect();
    let choices: Bits = (0..N).map(|_| g.gen::<bool>()).collect();
    let (mr, cr) = (&msgs, &choices);
    let r = ok(run_local(
        &m,
        |p| ot_send_bytes(&mut p.ch, &mut p.pools.ot_send, 64, mr),
        |p| ot_recv_bytes(&mut p.ch, &mut p.pools.ot_recv, 64, cr),
    ))?;
    for i in 0..N {
        ensure!(r.out1[i] == msgs[i][choices[i] as usize], "random OT {i} wrong");
    }
    let sent1 = online(&r.ledger1, Direction::Sent);
    let sent0 = online(&r.ledger0, Direction::Sent);
    ensure!(
        sent1.payload_bytes == (N as u64).div_ceil(8) && sent0.payload_bytes == 2 * 8 * N as u64,
        "OT traffic {} / {} B",
        sent1.payload_bytes,
        sent0.payload_bytes
    );
    ensure!(sent0.messages == 1 && sent1.messages == 1, "OT batch took more than one message each way");
    Ok(())
}

/// Random additive split of `v`.
fn split(v: &[u64], ring: RingParams, g: &mut StdRng) -> (Vec<u64>, Vec<u64>) {
    let s0: Vec<u64> = v.iter().map(|_| ring.reduce(g.gen())).collect();
    let s1 = v.iter().zip(&s0).map(|(&x, &r)| ring.sub(x, r)).collect();
    (s0, s1)
}

fn mult_check(ring: RingParams, xs: &[u64], ys: &[u64], g: &mut StdRng) -> Result<(), String> {
    let l = ring.l() as usize;
    let n = xs.len();
    let mut m = ResourceManifest::new(ring);
    m.num_amt = n as u64;
    m.vdp_lengths = vec![1; n];
    let (x0, x1) = split(xs, ring, g);
    let (y0, y1) = split(ys, ring, g);
    let (x0, x1, y0, y1) = (&x0, &x1, &y0, &y1);
    let r = ok(run_local(
        &m,
        |p| Ok((mul_mt(p, x0, y0)?, mul_da(p, Some(xs), y0)?)),
        |p| Ok((mul_mt(p, x1, y1)?, mul_da(p, None, y1)?)),
    ))?;
    for i in 0..n {
        let want = big_mod(&(BigUint::from(xs[i]) * ys[i]), l);
        ensure!(ring.add(r.out0.0[i], r.out1.0[i]) == want, "MT {}*{} at l={l}", xs[i], ys[i]);
        ensure!(ring.add(r.out0.1[i], r.out1.1[i]) == want, "DA {}*{} at l={l}", xs[i], ys[i]);
    }
    Ok(())
}

fn vdp_check(ring: RingParams, trials: usize, max_len: usize, g: &mut StdRng) -> Result<(), String> {
    let l = ring.l() as usize;
    let xs: Vec<Vec<u64>> = (0..trials)
        .map(|_| {
            let n = g.gen_range(1..=max_len);
            (0..n).map(|_| ring.reduce(g.gen())).collect()
        })
        .collect();
    let ys: Vec<Vec<u64>> = xs.iter().map(|x| x.iter().map(|_| ring.reduce(g.gen())).collect()).collect();
    let mut y0 = vec![];
    let mut y1 = vec![];
    for y in &ys {
        let (a, b) = split(y, ring, g);
        y0.push(a);
        y1.push(b);
    }
    let mut m = ResourceManifest::new(ring);
    m.vdp_lengths = xs.iter().map(|x| x.len() as u32).collect();
    let (xr, y0r, y1r) = (&xs, &y0, &y1);
    let r = ok(run_local(&m, |p| vdp(p, Some(xr), y0r), |p| vdp(p, None, y1r)))?;
    for k in 0..trials {
        let dot: BigUint = xs[k].iter().zip(&ys[k]).map(|(&a, &b)| BigUint::from(a) * b).sum();
        ensure!(ring.add(r.out0[k], r.out1[k]) == big_mod(&dot, l), "VDP {k} at l={l}");
    }
    Ok(())
}

fn criterion3() -> Outcome {
    triples_check()?;
    ot_check()?;
    let mut g = rng(3);
    let r8 = RingParams::integer(8).unwrap();
    let (xs, ys): (Vec<u64>, Vec<u64>) = (0..1u64 << 16).map(|v| (v & 0xff, v >> 8)).unzip();
    mult_check(r8, &xs, &ys, &mut g)?;
    vdp_check(r8, 10_000, 32, &mut g)?;
    for l in [32u8, 64] {
        let ring = RingParams::integer(l).unwrap();
        let xs: Vec<u64> = (0..10_000).map(|_| ring.reduce(g.gen())).collect();
        let ys: Vec<u64> = (0..10_000).map(|_| ring.reduce(g.gen())).collect();
        mult_check(ring, &xs, &ys, &mut g)?;
        vdp_check(ring, 10_000, 100, &mut g)?;
    }
    Ok("1e5 A-MT (l=16/32/64) + B-MT relations, OT 4 (r,b) x 6 widths + 1e5 random, MT/DA exhaustive l=8, MT/DA/VDP 1e4 at l=32/64".into())
}

// ---------------------------------------------------------------- 4

#[derive(Clone, Copy, Debug)]
enum Op {
    Add,
    Sub,
    Cmp,
    Eq,
    Mux,
    Relu,
    Argmax(usize),
}

impl Op {
    fn build(&self, w: usize, v: Variant) -> Circuit {
        match self {
            Op::Add => build_add(w, v),
            Op::Sub => build_sub(w, v),
            Op::Cmp => build_cmp(w, v),
            Op::Eq => build_eq(w),
            Op::Mux => build_mux(w),
            Op::Relu => build_relu(w),
            Op::Argmax(n) => build_argmax(*n, w, v),
        }
        .unwrap()
    }

    fn has_variants(&self) -> bool {
        matches!(self, Op::Add | Op::Sub | Op::Cmp | Op::Argmax(_))
    }

    fn arity(&self) -> usize {
        match self {
            Op::Relu => 1,
            Op::Mux => 3,
            Op::Argmax(n) => *n,
            _ => 2,
        }
    }

    /// IN0 and IN1 bits for operand values.
    fn inputs(&self, w: usize, v: &[u64]) -> (Vec<bool>, Vec<bool>) {
        match self {
            Op::Relu => (wbits(v[0], w), vec![]),
            Op::Mux => {
                let mut a = vec![v[0] & 1 == 1];
                a.extend(wbits(v[1], w));
                (a, wbits(v[2], w))
            }
            Op::Argmax(n) => {
                let h = n.div_ceil(2);
                (
                    v[..h].iter().flat_map(|&x| wbits(x, w)).collect(),
                    v[h..].iter().flat_map(|&x| wbits(x, w)).collect(),
                )
            }
            _ => (wbits(v[0], w), wbits(v[1], w)),
        }
    }

    /// Integer semantics, independent of the circuit library.
    fn oracle(&self, w: usize, v: &[u64]) -> Vec<bool> {
        let s = |x: u64| wsigned(x, w);
        match self {
            Op::Add => wbits(v[0].wrapping_add(v[1]) & wmask(w), w),
            Op::Sub => wbits(v[0].wrapping_sub(v[1]) & wmask(w), w),
            Op::Cmp => vec![s(v[0]) > s(v[1])],
            Op::Eq => vec![v[0] == v[1]],
            Op::Mux => wbits(if v[0] & 1 == 1 { v[1] } else { v[2] }, w),
            Op::Relu => wbits(if s(v[0]) > 0 { v[0] } else { 0 }, w),
            Op::Argmax(n) => {
                let mut best = 0;
                for i in 1..*n {
                    if s(v[i]) > s(v[best]) {
                        best = i;
                    }
                }
                let iw = (usize::BITS - (n - 1).max(1).leading_zeros()) as usize;
                wbits(best as u64, iw)
            }
        }
    }
}

fn gmw_batch(c: &Circuit, insts: &[(Vec<bool>, Vec<bool>)], g: &mut StdRng) -> Result<Vec<Vec<bool>>, String> {
    let rc = c.replicate(insts.len());
    let mut x: Bits = insts.iter().flat_map(|i| i.0.iter().copied()).collect();
    x.extend(insts.iter().flat_map(|i| i.1.iter().copied()));
    let s0: Bits = (0..x.len()).map(|_| g.gen::<bool>()).collect();
    let s1 = s0.clone() ^ &x;
    let lc = rc.levelize();
    let mut m = ResourceManifest::new(RingParams::integer(32).unwrap());
    m.num_bmt = rc.and_count() as u64;
    let (lr, a, b) = (&lc, &s0, &s1);
    let r = ok(run_local(
        &m,
        |p| gmw_eval(p, lr, std::slice::from_ref(a)),
        |p| gmw_eval(p, lr, std::slice::from_ref(b)),
    ))?;
    let out = r.out0[0].clone() ^ &r.out1[0];
    let v: Vec<bool> = out.iter().by_vals().collect();
    Ok(v.chunks(c.outputs.len().max(1)).map(|c| c.to_vec()).collect())
}

fn gc_batch(c: &Circuit, insts: &[(Vec<bool>, Vec<bool>)]) -> Result<Vec<Vec<bool>>, String> {
    let rc = c.replicate(insts.len());
    let own0: Bits = insts.iter().flat_map(|i| i.0.iter().copied()).collect();
    let own1: Bits = insts.iter().flat_map(|i| i.1.iter().copied()).collect();
    let mut m = ResourceManifest::new(RingParams::integer(32).unwrap());
    m.num_ot = rc.inputs[1].len() as u64;
    let (c0, a, b) = (&rc, &own0, &own1);
    let r = ok(run_local(
        &m,
        |p| gc_run(p, c0, std::slice::from_ref(a), Reveal::To(1)),
        |p| gc_run(p, c0, std::slice::from_ref(b), Reveal::To(1)),
    ))?;
    let v: Vec<bool> = r.out1.unwrap()[0].iter().by_vals().collect();
    Ok(v.chunks(c.outputs.len().max(1)).map(|c| c.to_vec()).collect())
}

fn engine_check(op: Op, w: usize, v: Variant, vals: &[Vec<u64>], g: &mut StdRng) -> Result<(), String> {
    let c = op.build(w, v);
    let insts: Vec<_> = vals.iter().map(|x| op.inputs(w, x)).collect();
    let want: Vec<Vec<bool>> = vals.iter().map(|x| op.oracle(w, x)).collect();
    for (i, (x, y)) in insts.iter().zip(&want).take(64).enumerate() {
        let mut all = x.0.clone();
        all.extend(&x.1);
        ensure!(&ok(c.eval(&all))? == y, "{op:?}/{w} simulation disagrees with oracle on {:?} (#{i})", vals[i]);
    }
    let gm = gmw_batch(&c, &insts, g)?;
    let gc = gc_batch(&c, &insts)?;
    for i in 0..vals.len() {
        ensure!(gm[i] == want[i], "GMW {op:?}/{w}/{v:?} wrong on {:?}", vals[i]);
        ensure!(gc[i] == want[i], "GC {op:?}/{w}/{v:?} wrong on {:?}", vals[i]);
    }
    Ok(())
}

fn random_operand(w: usize, g: &mut StdRng) -> u64 {
    let edge = [0, 1, wmask(w), 1u64 << (w - 1), (1u64 << (w - 1)) - 1];
    if g.gen_ratio(1, 8) {
        edge[g.gen_range(0..edge.len())]
    } else {
        g.gen::<u64>() & wmask(w)
    }
}

fn criterion4() -> Outcome {
    let mut g = rng(4);
    let ops = [Op::Add, Op::Sub, Op::Cmp, Op::Eq, Op::Mux, Op::Relu, Op::Argmax(4)];
    let mut runs = 0;
    for op in ops {
        let variants: &[Variant] = if op.has_variants() { &[Variant::Size, Variant::Depth] } else { &[Variant::Size] };
        // Exhaustive at 8 bits over the operand pairs (argmax on two values).
        let (eop, vals): (Op, Vec<Vec<u64>>) = match op {
            Op::Relu => (op, (0..256).map(|x| vec![x]).collect()),
            Op::Mux => (op, (0..1u64 << 17).map(|v| vec![v >> 16, v & 0xff, v >> 8 & 0xff]).collect()),
            Op::Argmax(_) => (Op::Argmax(2), (0..1u64 << 16).map(|v| vec![v & 0xff, v >> 8]).collect()),
            _ => (op, (0..1u64 << 16).map(|v| vec![v & 0xff, v >> 8]).collect()),
        };
        for &v in variants {
            engine_check(eop, 8, v, &vals, &mut g)?;
            runs += 1;
        }
        for w in [8usize, 32, 64] {
            if w == 8 && !matches!(op, Op::Argmax(_)) {
                continue;
            }
            let vals: Vec<Vec<u64>> = (0..10_000)
                .map(|_| (0..op.arity()).map(|_| random_operand(w, &mut g)).collect())
                .collect();
            for &v in variants {
                engine_check(op, w, v, &vals, &mut g)?;
                runs += 1;
            }
        }
        // One input under 100 independent share and label decompositions.
        let x: Vec<u64> = (0..op.arity()).map(|_| random_operand(32, &mut g)).collect();
        engine_check(op, 32, variants[0], &vec![x; 100], &mut g)?;
    }
    Ok(format!("{} builders x GMW+GC: exhaustive 8-bit, 1e4 at 32/64, 100 decompositions ({runs} sweeps)", ops.len()))
}

// ---------------------------------------------------------------- 5

fn criterion5() -> Outcome {
    const N: usize = 10_000;
    let mut g = rng(5);
    for l in [8u8, 16, 32, 64] {
        let ring = RingParams::integer(l).unwrap();
        let lw = l as usize;
        let xs: Vec<u64> = (0..N).map(|_| random_operand(lw, &mut g)).collect();
        let (x0, x1) = split(&xs, ring, &mut g);
        let xbits: Bits = xs.iter().flat_map(|&x| wbits(x, lw)).collect();
        let b0: Bits = (0..N * lw).map(|_| g.gen::<bool>()).collect();
        let b1 = b0.clone() ^ &xbits;
        let mut m = ResourceManifest::new(ring);
        m.num_ot = 5 * (N * lw) as u64;
        let run = |p: &mut Party, a: &[u64], b: &Bits| -> hybrid2pc::Result<_> {
            let ya = a2y(p, a, 0)?;
            let arith = y2a(p, &ya)?;
            let labels = b2y(p, b)?;
            let before = p.ch.ledger().snapshot();
            let back = y2b(&labels);
            let y2b_cost = p.ch.ledger().snapshot().since(&before).total(Phase::Online, Direction::Sent);
            let ba = a2b(p, a, 0)?;
            let via_bool = b2a(p, &ba)?;
            Ok((arith, back, via_bool, y2b_cost))
        };
        let (a0, a1, bb0, bb1) = (&x0, &x1, &b0, &b1);
        let r = ok(run_local(&m, |p| run(p, a0, bb0), |p| run(p, a1, bb1)))?;
        let (o0, o1) = (&r.out0, &r.out1);
        for i in 0..N {
            ensure!(ring.add(o0.0[i], o1.0[i]) == xs[i], "a2y->y2a lost {} at l={l}", xs[i]);
            ensure!(ring.add(o0.2[i], o1.2[i]) == xs[i], "a2b->b2a lost {} at l={l}", xs[i]);
        }
        ensure!((o0.1.clone() ^ &o1.1) == xbits, "b2y->y2b lost bits at l={l}");
        ensure!(
            o0.3.payload_bytes + o1.3.payload_bytes == 0 && o0.3.messages + o1.3.messages == 0,
            "y2b sent traffic"
        );
    }
    Ok("a2y->y2a, b2y->y2b, a2b->b2a on 1e4 values at l=8/16/32/64; y2b 0 B".into())
}

// ---------------------------------------------------------------- 6

fn quantize(v: f64, beta: u8) -> u64 {
    (v * (1u64 << beta) as f64).round() as i64 as u64
}

fn svm_oracle(w: &[u64], b: u64, x: &[u64], beta: u8) -> i8 {
    let dot: i128 = w.iter().zip(x).map(|(&a, &c)| a as i64 as i128 * c as i64 as i128).sum();
    let s = (dot - ((b as i64 as i128) << beta)) as i64;
    if s >> beta > 0 {
        1
    } else {
        -1
    }
}

fn criterion6() -> Outcome {
    const PAIRS: usize = 10_000;
    const CHUNK: usize = 1000;
    let ring = RingParams::default_for(64).unwrap();
    let beta = ring.beta();
    let mut g = rng(6);
    let mut rounds_by_d = vec![];
    let mut positives = 0;
    for d in [10usize, 100, 1000] {
        let mut rounds = std::collections::BTreeSet::new();
        for _ in 0..PAIRS / CHUNK {
            let models: Vec<SvmModel> = (0..CHUNK)
                .map(|_| SvmModel {
                    ring,
                    w: (0..d).map(|_| quantize(g.gen_range(-1.0..1.0), beta)).collect(),
                    b: quantize(g.gen_range(-1.0..1.0), beta),
                })
                .collect();
            let queries: Vec<Vec<u64>> = (0..CHUNK)
                .map(|_| (0..d).map(|_| quantize(g.gen_range(-1.0..1.0), beta)).collect())
                .collect();
            let one = svm_manifest(ring, d);
            let mut m = ResourceManifest::new(ring);
            for _ in 0..CHUNK {
                m.extend(&one);
            }
            let (mr, qr) = (&models, &queries);
            let r = ok(run_local(
                &m,
                |p| {
                    let mut flights = vec![];
                    for model in mr {
                        let before = p.ch.ledger().snapshot();
                        svm_classify(p, Some(model), None, d)?;
                        flights.push(p.ch.ledger().snapshot().since(&before).total(Phase::Online, Direction::Sent).flights);
                    }
                    Ok(flights)
                },
                |p| {
                    let mut out = vec![];
                    for q in qr {
                        let before = p.ch.ledger().snapshot();
                        let label = svm_classify(p, None, Some(q), d)?;
                        let f = p.ch.ledger().snapshot().since(&before).total(Phase::Online, Direction::Sent).flights;
                        out.push((label, f));
                    }
                    Ok(out)
                },
            ))?;
            for i in 0..CHUNK {
                let want = svm_oracle(&models[i].w, models[i].b, &queries[i], beta);
                ensure!(r.out1[i].0 == Some(want), "d={d}: pair {i} labelled {:?}, oracle {want}", r.out1[i].0);
                positives += (want == 1) as usize;
            }
            // The first classification of a session sees no earlier flight to merge with.
            rounds.insert(r.out0[0].max(r.out1[0].1));
        }
        ensure!(rounds.len() == 1, "d={d}: round counts vary {rounds:?}");
        rounds_by_d.push(*rounds.iter().next().unwrap());
    }
    ensure!(rounds_by_d.windows(2).all(|w| w[0] == w[1]), "rounds depend on d: {rounds_by_d:?}");
    // Dot product: one exchange. The garbled sign test: OT choices, then one garbler flight.
    ensure!(rounds_by_d[0] <= 4 + 2, "rounds {} exceed 4 + GC constant", rounds_by_d[0]);
    ensure!(positives > PAIRS / 4 && positives < 3 * PAIRS - PAIRS / 4, "label distribution degenerate");
    Ok(format!("3 x 1e4 pairs at d=10/100/1000 match oracle; rounds {} for every d", rounds_by_d[0]))
}

// ---------------------------------------------------------------- 7

fn fig2() -> NetSpec {
    NetSpec::from_json(
        r#"{"input":[1,28,28],"layers":[
            {"type":"conv","kernel":5,"stride":2,"padding":2,"maps":5},
            {"type":"relu"},
            {"type":"fc","outputs":100},
            {"type":"relu"},
            {"type":"fc","outputs":10},
            {"type":"argmax"}]}"#,
    )
    .unwrap()
}

/// Plaintext fixed-point forward pass mod 2^64: products accumulate at
/// scale 2^(2 beta) and are shifted back once before each non-linearity.
fn cnn_oracle(conv: &[i64], fc1: &[i64], fc2: &[i64], img: &[i64], beta: u32) -> usize {
    let relu = |v: i64| v.max(0);
    let mut a = vec![0i64; 5 * 14 * 14];
    for m in 0..5 {
        for oy in 0..14 {
            for ox in 0..14 {
                let mut s = 0i64;
                for ky in 0..5 {
                    for kx in 0..5 {
                        let iy = (2 * oy + ky) as i64 - 2;
                        let ix = (2 * ox + kx) as i64 - 2;
                        if (0..28).contains(&iy) && (0..28).contains(&ix) {
                            s = s.wrapping_add(conv[m * 25 + ky * 5 + kx].wrapping_mul(img[(iy * 28 + ix) as usize]));
                        }
                    }
                }
                a[(m * 14 + oy) * 14 + ox] = relu(s >> beta);
            }
        }
    }
    let dense = |w: &[i64], x: &[i64], outs: usize| -> Vec<i64> {
        (0..outs)
            .map(|o| {
                w[o * x.len()..(o + 1) * x.len()]
                    .iter()
                    .zip(x)
                    .fold(0i64, |s, (&p, &q)| s.wrapping_add(p.wrapping_mul(q)))
                    >> beta
            })
            .collect()
    };
    let h: Vec<i64> = dense(fc1, &a, 100).into_iter().map(relu).collect();
    let y = dense(fc2, &h, 10);
    let mut best = 0;
    for i in 1..10 {
        if y[i] > y[best] {
            best = i;
        }
    }
    best
}

fn criterion7() -> Outcome {
    let ring = RingParams::default_for(64).unwrap();
    let beta = ring.beta();
    let spec = fig2();
    let mut g = rng(7);
    let tensor = |n: usize, g: &mut StdRng| -> Vec<u64> { (0..n).map(|_| quantize(g.gen_range(-0.5..0.5), beta)).collect() };
    let weights = vec![tensor(5 * 25, &mut g), tensor(100 * 980, &mut g), tensor(10 * 100, &mut g)];
    let net = ok(Network::new(spec.clone(), ring, weights.clone()))?;
    let iw: Vec<Vec<i64>> = weights.iter().map(|t| t.iter().map(|&v| v as i64).collect()).collect();
    let images: Vec<Vec<u64>> = (0..100)
        .map(|_| (0..784).map(|_| quantize(g.gen_range(0.0..1.0), beta)).collect())
        .collect();
    let mut classes = std::collections::BTreeSet::new();
    let mut slowest = [Duration::ZERO; 2];
    for (k, profile) in [Profile::Lan, Profile::Wan].into_iter().enumerate() {
        let plan = ok(NnPlan::new(&spec, ring, profile))?;
        let m = ok(plan_manifest(&plan))?;
        let vdp_len = m.vdp_lengths.len();
        ensure!(vdp_len == 980 + 100 + 10, "{profile:?}: {vdp_len} dot products");
        for (i, img) in images.iter().enumerate() {
            let want = cnn_oracle(&iw[0], &iw[1], &iw[2], &img.iter().map(|&v| v as i64).collect::<Vec<_>>(), beta as u32);
            let (pr, nr) = (&plan, &net);
            let t = Instant::now();
            let r = ok(run_local(&m, |p| nn_infer(p, pr, Some(nr), None), |p| nn_infer(p, pr, None, Some(img))))?;
            slowest[k] = slowest[k].max(t.elapsed());
            ensure!(r.out0.is_none(), "server learned the output");
            ensure!(r.out1 == Some(NnOutput::Class(want)), "{profile:?} image {i}: {:?}, oracle {want}", r.out1);
            classes.insert(want);
        }
    }
    ensure!(classes.len() > 1, "oracle classes degenerate: {classes:?}");
    Ok(format!(
        "100 images x LAN+WAN match oracle ({} distinct classes); slowest image LAN {:.2}s, WAN {:.2}s",
        classes.len(),
        slowest[0].as_secs_f64(),
        slowest[1].as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 8

fn gmw_rounds(c: &Circuit) -> Result<(u64, u64, u64), String> {
    let lc = c.levelize();
    let mut m = ResourceManifest::new(RingParams::integer(32).unwrap());
    m.num_bmt = c.and_count() as u64;
    let zeros: Bits = (0..c.input_len()).map(|_| false).collect();
    let (lr, z) = (&lc, &zeros);
    let r = ok(run_local(
        &m,
        |p| gmw_eval(p, lr, std::slice::from_ref(z)),
        |p| gmw_eval(p, lr, std::slice::from_ref(z)),
    ))?;
    let (a, b) = (online(&r.ledger0, Direction::Sent), online(&r.ledger1, Direction::Sent));
    Ok((a.flights.max(b.flights), a.messages.max(b.messages), lc.and_levels.len() as u64))
}

fn gc_rounds(c: &Circuit) -> Result<(u64, u64), String> {
    let mut m = ResourceManifest::new(RingParams::integer(32).unwrap());
    m.num_ot = c.inputs[1].len() as u64;
    let z0: Bits = (0..c.inputs[0].len()).map(|_| false).collect();
    let z1: Bits = (0..c.inputs[1].len()).map(|_| false).collect();
    let (cr, a, b) = (c, &z0, &z1);
    let r = ok(run_local(
        &m,
        |p| gc_run(p, cr, std::slice::from_ref(a), Reveal::To(1)),
        |p| gc_run(p, cr, std::slice::from_ref(b), Reveal::To(1)),
    ))?;
    let (s0, s1) = (online(&r.ledger0, Direction::Sent), online(&r.ledger1, Direction::Sent));
    Ok((s0.flights, s1.flights))
}

fn criterion8() -> Outcome {
    let mut circuits = vec![];
    for v in [Variant::Size, Variant::Depth] {
        circuits.push(build_add(32, v).unwrap());
        circuits.push(build_cmp(32, v).unwrap());
        circuits.push(build_argmax(4, 32, v).unwrap());
    }
    circuits.push(build_eq(32).unwrap());
    circuits.push(build_mux(32).unwrap());
    circuits.push(build_relu(32).unwrap());
    circuits.push(build_cmp(32, Variant::Depth).unwrap().replicate(1000));
    let mut gc = std::collections::BTreeSet::new();
    for c in &circuits {
        let (flights, messages, depth) = gmw_rounds(c)?;
        ensure!(
            flights == depth && messages == depth,
            "{}: GMW {flights} flights / {messages} messages for {depth} AND levels",
            c.name
        );
        if !c.inputs[1].is_empty() {
            gc.insert(gc_rounds(c)?);
        }
    }
    ensure!(gc.len() == 1, "GC flights vary with the circuit: {gc:?}");
    let ring = RingParams::integer(32).unwrap();
    let opts = LocalOptions::default();
    for op in AtomicOp::ALL {
        let engines: &[Engine] = if op.is_boolean() { &[Engine::Gmw, Engine::Gc] } else { &[Engine::Arith] };
        for &e in engines {
            let one = ok(run_op(op, e, 1, ring, &opts))?;
            let many = ok(run_op(op, e, 1000, ring, &opts))?;
            ensure!(one.correct && many.correct, "{} wrong", op.name());
            ensure!(
                one.rounds == many.rounds && one.messages == many.messages,
                "{} {e:?}: n=1 {} rounds/{} msgs, n=1000 {} rounds/{} msgs",
                op.name(),
                one.rounds,
                one.messages,
                many.rounds,
                many.messages
            );
        }
    }
    let g = gc.iter().next().unwrap();
    Ok(format!(
        "GMW flights = AND levels on {} circuits; GC flights (garbler, evaluator) = {g:?} for all; 1 vs 1000 ops same rounds and messages",
        circuits.len()
    ))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("offline communication per item", Duration::from_secs(30), criterion1),
        ("online communication of 1000 parallel ops", Duration::from_secs(60), criterion2),
        ("protocol oracle suites", Duration::from_secs(300), criterion3),
        ("GMW and GC equal plaintext simulation", Duration::from_secs(600), criterion4),
        ("conversion round trips", Duration::from_secs(120), criterion5),
        ("end-to-end SVM", Duration::from_secs(300), criterion6),
        ("end-to-end CNN", Duration::from_secs(3600), criterion7),
        ("round-count invariants", Duration::from_secs(600), criterion8),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let dt = t.elapsed();
        let r = match r {
            Ok(s) if dt > *limit => Err(format!("{s}; but took {:.1}s, limit {}s", dt.as_secs_f64(), limit.as_secs())),
            r => r,
        };
        match r {
            Ok(s) => println!("criterion {} PASS [{name}] ({:.1}s) {s}", i + 1, dt.as_secs_f64()),
            Err(s) => {
                failed += 1;
                println!("criterion {} FAIL [{name}] ({:.1}s) {s}", i + 1, dt.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
