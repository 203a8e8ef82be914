use hybrid2pc::ass::{mul_mt, reveal, share_input, vdp};
use hybrid2pc::bits::{bits_word, word_bits};
use hybrid2pc::circuit::library::{build_cmp, Variant};
use hybrid2pc::convert::{a2b, a2y, b2a, b2y, y2a, y2b};
use hybrid2pc::correlated::Bits;
use hybrid2pc::gc::gc_run;
use hybrid2pc::gmw::{gmw_eval, gmw_reveal, gmw_share_inputs};
use hybrid2pc::manifest::ResourceManifest;
use hybrid2pc::session::{run_local, Reveal};
use hybrid2pc::RingParams;
use rand::{Rng, SeedableRng};

fn p32() -> RingParams {
    RingParams::integer(32).unwrap()
}

#[test]
fn mt_and_vdp() {
    let p = p32();
    let mut m = ResourceManifest::new(p);
    m.num_amt = 50;
    m.vdp_lengths = vec![7, 3];
    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    let x: Vec<u64> = (0..50).map(|_| rng.gen::<u32>() as u64).collect();
    let y: Vec<u64> = (0..50).map(|_| rng.gen::<u32>() as u64).collect();
    let (xr, yr) = (&x, &y);
    let r = run_local(
        &m,
        |pt| {
            let xs = share_input(pt, 0, Some(xr), 50)?;
            let ys = share_input(pt, 1, None, 50)?;
            let z = mul_mt(pt, &xs, &ys)?;
            let d = vdp(pt, Some(&[xr[..7].to_vec(), xr[7..10].to_vec()]), &[ys[..7].to_vec(), ys[7..10].to_vec()])?;
            let mut all = z;
            all.extend(d);
            reveal(pt, &all, Reveal::Both)
        },
        |pt| {
            let xs = share_input(pt, 0, None, 50)?;
            let ys = share_input(pt, 1, Some(yr), 50)?;
            let z = mul_mt(pt, &xs, &ys)?;
            let d = vdp(pt, None, &[ys[..7].to_vec(), ys[7..10].to_vec()])?;
            let mut all = z;
            all.extend(d);
            reveal(pt, &all, Reveal::Both)
        },
    )
    .unwrap();
    let out = r.out0.unwrap();
    assert_eq!(Some(out.clone()), r.out1);
    for i in 0..50 {
        assert_eq!(out[i], p.mul(x[i], y[i]));
    }
    let dot = |a: &[u64], b: &[u64]| a.iter().zip(b).fold(0, |s, (&u, &v)| p.add(s, p.mul(u, v)));
    assert_eq!(out[50], dot(&x[..7], &y[..7]));
    assert_eq!(out[51], dot(&x[7..10], &y[7..10]));
}

#[test]
fn cmp_gmw_and_gc() {
    let c = build_cmp(32, Variant::Depth).unwrap();
    let lc = c.levelize();
    let mut m = ResourceManifest::new(p32());
    m.num_bmt = c.and_count() as u64;
    m.num_ot = 32;
    let (x, y) = (-5i64 as u64 & 0xffff_ffff, 7u64);
    let (cr, lcr) = (&c, &lc);
    let r = run_local(
        &m,
        |pt| {
            let own: Bits = word_bits(x, 32).collect();
            let [a, b] = gmw_share_inputs(pt, &own, 32)?;
            let mut inp = a;
            inp.extend(b);
            let o = gmw_eval(pt, lcr, &[inp])?;
            let g = gmw_reveal(pt, &o[0], Reveal::Both)?.unwrap();
            let y = gc_run(pt, cr, &[own], Reveal::Both)?.unwrap();
            Ok((g, y))
        },
        |pt| {
            let own: Bits = word_bits(y, 32).collect();
            let [a, b] = gmw_share_inputs(pt, &own, 32)?;
            let mut inp = a;
            inp.extend(b);
            let o = gmw_eval(pt, lcr, &[inp])?;
            let g = gmw_reveal(pt, &o[0], Reveal::Both)?.unwrap();
            let y = gc_run(pt, cr, &[own], Reveal::Both)?.unwrap();
            Ok((g, y))
        },
    )
    .unwrap();
    let expect = c.eval(&word_bits(x, 32).chain(word_bits(y, 32)).collect::<Vec<_>>()).unwrap();
    for (g, y) in [r.out0, r.out1] {
        assert_eq!(g.iter().by_vals().collect::<Vec<_>>(), expect);
        assert_eq!(y[0].iter().by_vals().collect::<Vec<_>>(), expect);
    }
}

#[test]
fn conversion_roundtrips() {
    let p = p32();
    let n = 20usize;
    let mut m = ResourceManifest::new(p);
    m.num_ot = (n * 32 * 6) as u64;
    let mut rng = rand::rngs::StdRng::seed_from_u64(2);
    let s0: Vec<u64> = (0..n).map(|_| rng.gen::<u32>() as u64).collect();
    let s1: Vec<u64> = (0..n).map(|_| rng.gen::<u32>() as u64).collect();
    let f = |sh: Vec<u64>| {
        move |pt: &mut hybrid2pc::session::Party| {
            let y = a2y(pt, &sh, 0)?;
            let a1 = y2a(pt, &y)?;
            let b = a2b(pt, &sh, 3)?;
            let a2 = b2a(pt, &b)?;
            let y2 = b2y(pt, &b)?;
            let b2 = y2b(&y2);
            Ok((a1, a2, b, b2))
        }
    };
    let r = run_local(&m, f(s0.clone()), f(s1.clone())).unwrap();
    let (a, b) = (r.out0, r.out1);
    for i in 0..n {
        let x = p.add(s0[i], s1[i]);
        assert_eq!(p.add(a.0[i], b.0[i]), x);
        assert_eq!(p.add(a.1[i], b.1[i]), p.ashr(x, 3));
    }
    let xb = a.2.clone() ^ &b.2;
    assert_eq!(a.3.clone() ^ &b.3, xb);
    for i in 0..n {
        let v = bits_word(&xb[i * 32..(i + 1) * 32].iter().by_vals().collect::<Vec<_>>());
        assert_eq!(v, p.ashr(p.add(s0[i], s1[i]), 3));
    }
}
