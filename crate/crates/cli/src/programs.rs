//! The online programs a party can run after the offline phase.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use hybrid2pc::atomic::{effective_engine, plan_op, run_party_op, AtomicOp, Engine};
use hybrid2pc::bits::{bits_word, word_bits};
use hybrid2pc::circuit::library::{by_name, Variant};
use hybrid2pc::circuit::{parse_circuit, Circuit};
use hybrid2pc::correlated::Bits;
use hybrid2pc::gc::gc_run;
use hybrid2pc::gmw::{gmw_eval, gmw_reveal, gmw_share_inputs};
use hybrid2pc::manifest::ResourceManifest;
use hybrid2pc::ml::{
    load_weights, nn_infer, plan_manifest, svm_classify, svm_manifest, NetSpec, Network, NnOutput, NnPlan, Profile, SvmModel,
};
use hybrid2pc::session::Reveal;
use hybrid2pc::transport::{Direction, Phase};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{online_fail, CliError, Link};

pub const DEMO_MODEL: &str = include_str!("../data/svm_model.json");
pub const DEMO_QUERY: &str = include_str!("../data/svm_query.json");
pub const DEMO_NET: &str = include_str!("../data/mnist_net.json");

/// What a program hands back: a machine-readable result, a line for humans
/// and the online wall-clock.
pub struct Outcome {
    pub result: Value,
    pub text: String,
    pub online_ms: f64,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn json_file<T: for<'de> Deserialize<'de>>(path: Option<&PathBuf>, bundled: &str) -> Result<T, CliError> {
    let text = match path {
        Some(p) => read(p)?,
        None => bundled.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad json: {e}")))
}

fn encode_all(ring: hybrid2pc::RingParams, v: &[f64]) -> Result<Vec<u64>, CliError> {
    v.iter()
        .map(|&x| ring.encode(x).map(|f| f.raw.0))
        .collect::<Result<_, _>>()
        .map_err(CliError::usage)
}

#[derive(Args, Debug, Clone, Default)]
pub struct SvmArgs {
    /// Server: JSON `{"w": [..], "b": ..}`. Defaults to a bundled 4-feature model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Client: JSON array of features. Defaults to a bundled query.
    #[arg(long)]
    pub query: Option<PathBuf>,
}

#[derive(Deserialize)]
struct ModelFile {
    w: Vec<f64>,
    b: f64,
}

pub fn svm(link: &mut Link, a: &SvmArgs) -> Result<Outcome, CliError> {
    let ring = link.settings.ring;
    let (model, query) = if link.settings.role == 0 {
        let f: ModelFile = json_file(a.model.as_ref(), DEMO_MODEL)?;
        (Some(SvmModel::from_f64(ring, &f.w, f.b).map_err(CliError::usage)?), None)
    } else {
        let q: Vec<f64> = json_file(a.query.as_ref(), DEMO_QUERY)?;
        (None, Some(encode_all(ring, &q)?))
    };
    let d = model.as_ref().map(|m| m.dim()).or(query.as_ref().map(|q| q.len())).unwrap();
    let mut m = svm_manifest(ring, d);
    let mut party = link.start(&mut m)?;
    let t = Instant::now();
    let label = svm_classify(&mut party, model.as_ref(), query.as_deref(), d).map_err(online_fail)?;
    let online_ms = t.elapsed().as_secs_f64() * 1e3;
    link.finish(party);
    let text = match label {
        Some(l) => format!("label: {l:+}"),
        None => "classification done".into(),
    };
    Ok(Outcome {
        result: json!({ "dimension": d, "label": label }),
        text,
        online_ms,
    })
}

#[derive(Args, Debug, Clone, Default)]
pub struct NnArgs {
    /// Network spec (JSON). Defaults to the bundled 28x28 convolutional net.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// Server: weight file.
    #[arg(long, conflicts_with = "random_weights")]
    pub weights: Option<PathBuf>,
    /// Server: draw weights from this seed instead of a file.
    #[arg(long)]
    pub random_weights: Option<u64>,
    /// Client: JSON array of input values, channel-major.
    #[arg(long, conflicts_with = "random_image")]
    pub image: Option<PathBuf>,
    /// Client: draw pixels in [0, 1) from this seed.
    #[arg(long)]
    pub random_image: Option<u64>,
}

pub fn random_network(spec: &NetSpec, ring: hybrid2pc::RingParams, seed: u64) -> hybrid2pc::Result<Network> {
    let mut g = StdRng::seed_from_u64(seed);
    let tensors: Vec<Vec<f64>> = spec
        .weight_shapes()?
        .iter()
        .map(|s| {
            let fan_in: usize = s[1..].iter().product();
            let b = 1.0 / (fan_in as f64).sqrt();
            (0..s.iter().product::<usize>()).map(|_| g.gen_range(-b..b)).collect()
        })
        .collect();
    Network::from_f64(spec.clone(), ring, &tensors)
}

pub fn nn(link: &mut Link, a: &NnArgs) -> Result<Outcome, CliError> {
    let ring = link.settings.ring;
    let spec_text = match &a.net {
        Some(p) => read(p)?,
        None => DEMO_NET.to_string(),
    };
    let spec = NetSpec::from_json(&spec_text).map_err(CliError::usage)?;
    let plan = NnPlan::new(&spec, ring, link.settings.profile).map_err(CliError::usage)?;
    let (net, image) = if link.settings.role == 0 {
        let net = match &a.weights {
            Some(p) => load_weights(p, &spec).map_err(CliError::usage)?,
            None => random_network(&spec, ring, a.random_weights.unwrap_or(1)).map_err(CliError::usage)?,
        };
        if net.ring != ring {
            return Err(CliError::usage(format!(
                "weight file uses alpha={} beta={}, session ring has alpha={} beta={}",
                net.ring.alpha(),
                net.ring.beta(),
                ring.alpha(),
                ring.beta()
            )));
        }
        (Some(net), None)
    } else {
        let n: usize = spec.input.iter().product();
        let px: Vec<f64> = match &a.image {
            Some(p) => json_file(Some(p), "")?,
            None => {
                let mut g = StdRng::seed_from_u64(a.random_image.unwrap_or(1));
                (0..n).map(|_| g.gen::<f64>()).collect()
            }
        };
        if px.len() != n {
            return Err(CliError::usage(format!("image has {} values, network takes {n}", px.len())));
        }
        (None, Some(encode_all(ring, &px)?))
    };
    let mut m = plan_manifest(&plan).map_err(CliError::usage)?;
    let mut party = link.start(&mut m)?;
    let t = Instant::now();
    let out = nn_infer(&mut party, &plan, net.as_ref(), image.as_deref()).map_err(online_fail)?;
    let online_ms = t.elapsed().as_secs_f64() * 1e3;
    link.finish(party);
    let scale = (1u64 << ring.beta()) as f64;
    let (result, text) = match out {
        Some(NnOutput::Class(c)) => (json!({ "class": c }), format!("class: {c}")),
        Some(NnOutput::Values(v)) => {
            let f: Vec<f64> = v.iter().map(|&x| x as f64 / scale).collect();
            (json!({ "raw": v, "values": f }), format!("values: {f:?}"))
        }
        None => (Value::Null, "inference done".into()),
    };
    Ok(Outcome { result, text, online_ms })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoolEngine {
    Gmw,
    Gc,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Comma-separated ops; all of them by default.
    #[arg(long, value_delimiter = ',')]
    pub ops: Vec<AtomicOp>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Word width; sets the ring size.
    #[arg(long, default_value_t = 32)]
    pub width: u8,
    /// Engine for Boolean ops; follows the profile when absent.
    #[arg(long, value_enum)]
    pub engine: Option<BoolEngine>,
}

pub fn bench_header() -> String {
    format!(
        "{:<8} {:<8} {:>6} {:>12} {:>12} {:>12} {:>12} {:>7} {:>10}  {}",
        "op", "engine", "n", "offline_B", "sent_B", "recv_B", "expect_B", "rounds", "ms", "check"
    )
}

pub fn bench(link: &mut Link, a: &BenchArgs) -> Result<Outcome, CliError> {
    let ring = link.settings.ring;
    let engine = match a.engine {
        Some(BoolEngine::Gmw) => Engine::Gmw,
        Some(BoolEngine::Gc) => Engine::Gc,
        None if link.settings.profile == Profile::Wan => Engine::Gc,
        None => Engine::Gmw,
    };
    let ops: Vec<AtomicOp> = if a.ops.is_empty() { AtomicOp::ALL.to_vec() } else { a.ops.clone() };
    let mut rows = vec![];
    let mut lines = vec![bench_header()];
    let mut total_ms = 0.0;
    for op in ops {
        let before = link.ledger.snapshot();
        let (c, mut m) = plan_op(op, engine, a.n, ring).map_err(CliError::usage)?;
        let mut party = link.start(&mut m)?;
        let r = run_party_op(&mut party, op, engine, a.n, c.as_ref()).map_err(online_fail)?;
        link.finish(party);
        let d = link.ledger.snapshot().since(&before);
        let offline = d.total(Phase::Offline, Direction::Sent).payload_bytes + d.total(Phase::Offline, Direction::Received).payload_bytes;
        let rounds = r.sent.flights.max(r.received.flights);
        let ok = r.sent.payload_bytes == r.expected_sent;
        total_ms += r.online_ms;
        let line = format!(
            "{:<8} {:<8} {:>6} {:>12} {:>12} {:>12} {:>12} {:>7} {:>10.2}  {}",
            op.name(),
            format!("{:?}", effective_engine(op, engine).map_err(CliError::usage)?).to_lowercase(),
            a.n,
            offline,
            r.sent.payload_bytes,
            r.received.payload_bytes,
            r.expected_sent,
            rounds,
            r.online_ms,
            if ok { "exact" } else { "MISMATCH" }
        );
        lines.push(line);
        rows.push(json!({
            "op": op.name(),
            "engine": r.engine,
            "n": a.n,
            "width": ring.l(),
            "offline_bytes": offline,
            "online_sent": r.sent,
            "online_received": r.received,
            "expected_sent": r.expected_sent,
            "matches_closed_form": ok,
            "rounds": rounds,
            "online_ms": r.online_ms,
        }));
    }
    Ok(Outcome {
        result: Value::Array(rows),
        text: lines.join("\n"),
        online_ms: total_ms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Size,
    Depth,
}

#[derive(Args, Debug, Clone)]
pub struct CircuitArgs {
    /// Library circuit: add, sub, cmp, eq, mux, relu, max, argmax.
    #[arg(long, required_unless_present = "file", conflicts_with = "file")]
    pub name: Option<String>,
    /// Circuit text file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    /// Adder layout for library circuits; depth under GMW, size under GC by default.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// This party's input as comma-separated `width`-bit words (decimal,
    /// or hex with 0x), packed LSB first into its input group.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub input: String,
}

fn parse_word(s: &str) -> Result<u64, CliError> {
    let s = s.trim();
    let r = if let Some(h) = s.strip_prefix("0x") {
        u64::from_str_radix(h, 16).map_err(|e| e.to_string())
    } else if let Some(neg) = s.strip_prefix('-') {
        neg.parse::<u64>().map(|v| v.wrapping_neg()).map_err(|e| e.to_string())
    } else {
        s.parse::<u64>().map_err(|e| e.to_string())
    };
    r.map_err(|e| CliError::usage(format!("input word {s:?}: {e}")))
}

/// Pack words into exactly `len` bits, zero-filling the rest.
pub fn input_bits(spec: &str, width: usize, len: usize) -> Result<Bits, CliError> {
    let mut bits = Bits::new();
    for w in spec.split(',').filter(|s| !s.trim().is_empty()) {
        bits.extend(word_bits(parse_word(w)?, width.min(64)));
    }
    if bits.len() > len {
        return Err(CliError::usage(format!("{} input bits, the circuit takes {len} from this party", bits.len())));
    }
    bits.resize(len, false);
    Ok(bits)
}

pub fn circuit_outputs(bits: &Bits, width: usize) -> Vec<u64> {
    let v: Vec<bool> = bits.iter().by_vals().collect();
    v.chunks(width.clamp(1, 64)).map(bits_word).collect()
}

pub fn load_circuit(a: &CircuitArgs, profile: Profile) -> Result<Circuit, CliError> {
    let c = match (&a.name, &a.file) {
        (Some(n), _) => {
            let v = match (a.variant, profile) {
                (Some(VariantArg::Size), _) | (None, Profile::Wan) => Variant::Size,
                _ => Variant::Depth,
            };
            by_name(n, a.width, v)
        }
        (None, Some(p)) => parse_circuit(&read(p)?),
        (None, None) => return Err(CliError::usage("pass --name or --file")),
    };
    c.map_err(CliError::usage)
}

pub fn circuit(link: &mut Link, a: &CircuitArgs) -> Result<Outcome, CliError> {
    let profile = link.settings.profile;
    let role = link.settings.role as usize;
    let c = load_circuit(a, profile)?;
    let own = input_bits(&a.input, a.width, c.inputs[role].len())?;
    let mut m = ResourceManifest::new(link.settings.ring);
    if profile == Profile::Lan {
        m.num_bmt = c.and_count() as u64;
    } else {
        m.num_ot = c.inputs[1].len() as u64;
    }
    let mut party = link.start(&mut m)?;
    let t = Instant::now();
    let run = |party: &mut hybrid2pc::session::Party| -> hybrid2pc::Result<Bits> {
        if profile == Profile::Lan {
            let lc = c.levelize();
            let [mut x, s1] = gmw_share_inputs(party, &own, c.inputs[1 - role].len())?;
            x.extend_from_bitslice(&s1);
            let out = gmw_eval(party, &lc, &[x])?.pop().unwrap();
            Ok(gmw_reveal(party, &out, Reveal::Both)?.unwrap())
        } else {
            Ok(gc_run(party, &c, &[own.clone()], Reveal::Both)?.unwrap().pop().unwrap())
        }
    };
    let out = run(&mut party).map_err(online_fail)?;
    let online_ms = t.elapsed().as_secs_f64() * 1e3;
    link.finish(party);
    let words = circuit_outputs(&out, a.width);
    let bitstr: String = out.iter().by_vals().map(|b| if b { '1' } else { '0' }).collect();
    Ok(Outcome {
        result: json!({
            "circuit": c.name,
            "engine": if profile == Profile::Lan { "gmw" } else { "gc" },
            "and_gates": c.and_count(),
            "outputs": words,
            "bits": bitstr,
        }),
        text: format!("outputs: {words:?}"),
        online_ms,
    })
}
