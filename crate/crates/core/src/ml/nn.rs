use serde::{Deserialize, Serialize};

use super::Profile;
use crate::ass::{reveal, vdp};
use crate::bits::bits_word;
use crate::circuit::library::{build_argmax, build_relu, max_wires, Variant};
use crate::circuit::{Builder, Circuit};
use crate::convert::{a2b, a2y, b2a, b2y, y2a};
use crate::correlated::{Bits, Block};
use crate::error::{Error, Result};
use crate::gc::{yao_eval, yao_reveal};
use crate::gmw::gmw_eval;
use crate::manifest::ResourceManifest;
use crate::ring::RingParams;
use crate::session::{Party, Reveal};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv {
        kernel: usize,
        stride: usize,
        #[serde(default)]
        padding: usize,
        maps: usize,
    },
    Fc {
        outputs: usize,
    },
    Relu,
    /// Non-overlapping `window x window` average; `window^2` must be a power of two.
    MeanPool {
        window: usize,
    },
    MaxPool {
        window: usize,
    },
    ArgMax,
}

/// Network architecture. Activations are flattened channel-major (`C, H, W`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    /// `[channels, height, width]`
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

type Shape = [usize; 3];

fn numel(s: Shape) -> usize {
    s[0] * s[1] * s[2]
}

impl NetSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Model(format!("bad network spec: {e}")))
    }

    /// Shape after each layer, checking compatibility.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut s = self.input;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let bad = |m: String| Err(Error::Model(format!("layer {i}: {m}")));
            s = match *l {
                LayerSpec::Conv {
                    kernel,
                    stride,
                    padding,
                    maps,
                } => {
                    if kernel == 0 || stride == 0 || maps == 0 || s[1] + 2 * padding < kernel || s[2] + 2 * padding < kernel {
                        return bad(format!("convolution {kernel}x{kernel}/{stride} does not fit {s:?}"));
                    }
                    [
                        maps,
                        (s[1] + 2 * padding - kernel) / stride + 1,
                        (s[2] + 2 * padding - kernel) / stride + 1,
                    ]
                }
                LayerSpec::Fc { outputs } => {
                    if outputs == 0 {
                        return bad("fully connected layer with no outputs".into());
                    }
                    [outputs, 1, 1]
                }
                LayerSpec::Relu => s,
                LayerSpec::MeanPool { window } | LayerSpec::MaxPool { window } => {
                    if window == 0 || s[1] % window != 0 || s[2] % window != 0 {
                        return bad(format!("pool window {window} does not divide {s:?}"));
                    }
                    if matches!(l, LayerSpec::MeanPool { .. }) && !(window * window).is_power_of_two() {
                        return bad(format!("mean pool window {window} is not a power of two"));
                    }
                    [s[0], s[1] / window, s[2] / window]
                }
                LayerSpec::ArgMax => {
                    if i + 1 != self.layers.len() {
                        return bad("argmax must be the last layer".into());
                    }
                    [1, 1, 1]
                }
            };
            out.push(s);
        }
        Ok(out)
    }

    /// Weight tensor shape of each linear layer, in layer order.
    pub fn weight_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let shapes = self.shapes()?;
        let mut prev = self.input;
        let mut out = Vec::new();
        for (l, s) in self.layers.iter().zip(shapes) {
            match *l {
                LayerSpec::Conv { kernel, maps, .. } => out.push(vec![maps, prev[0], kernel, kernel]),
                LayerSpec::Fc { outputs } => out.push(vec![outputs, numel(prev)]),
                _ => {}
            }
            prev = s;
        }
        Ok(out)
    }
}

/// Architecture plus the server's quantized weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub spec: NetSpec,
    pub ring: RingParams,
    /// Raw ring encodings per linear layer, row-major in the shape given by
    /// [`NetSpec::weight_shapes`].
    pub weights: Vec<Vec<u64>>,
}

impl Network {
    pub fn new(spec: NetSpec, ring: RingParams, weights: Vec<Vec<u64>>) -> Result<Self> {
        let shapes = spec.weight_shapes()?;
        if shapes.len() != weights.len() {
            return Err(Error::Model(format!(
                "{} weight tensors for {} linear layers",
                weights.len(),
                shapes.len()
            )));
        }
        for (s, w) in shapes.iter().zip(&weights) {
            if s.iter().product::<usize>() != w.len() {
                return Err(Error::Model(format!("weight tensor {s:?} has {} values", w.len())));
            }
        }
        Ok(Network { spec, ring, weights })
    }

    pub fn from_f64(spec: NetSpec, ring: RingParams, weights: &[Vec<f64>]) -> Result<Self> {
        let w = weights
            .iter()
            .map(|t| t.iter().map(|&v| ring.encode(v).map(|f| f.raw.0)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Network::new(spec, ring, w)
    }

    /// Cleartext inference with the same truncation schedule as the secure run.
    pub fn infer_plain(&self, plan: &NnPlan, image: &[u64]) -> Result<NnOutput> {
        let p = self.ring;
        let mut x = image.to_vec();
        let mut debt = 0usize;
        for st in &plan.steps {
            match st.op {
                Op::Linear { layer, weights } => {
                    let (rows, cols) = linear_operands(&self.spec, layer, st.shape_in, &x, Some(&self.weights[weights]))?;
                    x = rows
                        .iter()
                        .zip(&cols)
                        .map(|(w, v)| w.iter().zip(v).fold(0, |s, (&a, &b)| p.add(s, p.mul(a, b))))
                        .collect();
                    debt += p.beta() as usize;
                }
                Op::MeanPool { window } => {
                    x = pool_sums(&x, st.shape_in, window, p);
                    debt += (window * window).trailing_zeros() as usize;
                }
                Op::ToBool | Op::ToYao => {
                    x = x.iter().map(|&v| p.ashr(v, debt as u32)).collect();
                    debt = 0;
                }
                Op::ToArith => {}
                Op::Relu => x = x.iter().map(|&v| if p.signed(v) > 0 { v } else { 0 }).collect(),
                Op::MaxPool { window } => {
                    x = pool_windows(&x, st.shape_in, window)
                        .iter()
                        .map(|w| w.iter().copied().max_by_key(|&v| p.signed(v)).unwrap())
                        .collect()
                }
                Op::ArgMax => {
                    let mut best = 0;
                    for i in 1..x.len() {
                        if p.signed(x[i]) > p.signed(x[best]) {
                            best = i;
                        }
                    }
                    return Ok(NnOutput::Class(best));
                }
                Op::Reveal => {
                    return Ok(NnOutput::Values(x.iter().map(|&v| p.signed(p.ashr(v, debt as u32))).collect()));
                }
            }
        }
        unreachable!("plans end with argmax or reveal")
    }
}

/// What the client learns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NnOutput {
    Class(usize),
    /// Signed raw outputs at scale `2^beta`.
    Values(Vec<i64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Domain {
    Arith,
    Bool,
    Yao,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Linear { layer: usize, weights: usize },
    MeanPool { window: usize },
    /// Into the Boolean or Yao domain, discharging the pending scale.
    ToBool,
    ToYao,
    ToArith,
    Relu,
    MaxPool { window: usize },
    ArgMax,
    Reveal,
}

#[derive(Clone, Debug)]
struct Step {
    op: Op,
    /// Domain of the values entering the step.
    from: Domain,
    shape_in: Shape,
    /// Pending right shift of the values entering the step.
    debt: usize,
}

/// Static schedule of a network: which protocol runs each layer and where
/// values change representation.
#[derive(Clone, Debug)]
pub struct NnPlan {
    pub spec: NetSpec,
    pub ring: RingParams,
    pub profile: Profile,
    steps: Vec<Step>,
}

impl NnPlan {
    pub fn new(spec: &NetSpec, ring: RingParams, profile: Profile) -> Result<Self> {
        let shapes = spec.shapes()?;
        let nonlinear = if profile == Profile::Lan { Domain::Bool } else { Domain::Yao };
        let mut steps = Vec::new();
        let mut dom = Domain::Arith;
        let mut debt = 0usize;
        let mut shape = spec.input;
        let mut wi = 0;
        let mut push = |op: Op, dom: &mut Domain, debt: &mut usize, shape: Shape, to: Domain| {
            steps.push(Step {
                op,
                from: *dom,
                shape_in: shape,
                debt: *debt,
            });
            if to != *dom {
                *debt = 0;
            }
            *dom = to;
        };
        for (i, l) in spec.layers.iter().enumerate() {
            match *l {
                LayerSpec::Conv { .. } | LayerSpec::Fc { .. } | LayerSpec::MeanPool { .. } => {
                    if dom != Domain::Arith {
                        push(Op::ToArith, &mut dom, &mut debt, shape, Domain::Arith);
                    }
                    let (op, d) = match *l {
                        LayerSpec::MeanPool { window } => (Op::MeanPool { window }, (window * window).trailing_zeros() as usize),
                        _ => {
                            wi += 1;
                            (Op::Linear { layer: i, weights: wi - 1 }, ring.beta() as usize)
                        }
                    };
                    push(op, &mut dom, &mut debt, shape, Domain::Arith);
                    debt += d;
                }
                LayerSpec::Relu | LayerSpec::MaxPool { .. } => {
                    if dom == Domain::Arith {
                        let op = if nonlinear == Domain::Bool { Op::ToBool } else { Op::ToYao };
                        push(op, &mut dom, &mut debt, shape, nonlinear);
                    }
                    let op = match *l {
                        LayerSpec::Relu => Op::Relu,
                        LayerSpec::MaxPool { window } => Op::MaxPool { window },
                        _ => unreachable!(),
                    };
                    push(op, &mut dom, &mut debt, shape, nonlinear);
                }
                LayerSpec::ArgMax => {
                    if dom != Domain::Yao {
                        push(Op::ToYao, &mut dom, &mut debt, shape, Domain::Yao);
                    }
                    push(Op::ArgMax, &mut dom, &mut debt, shape, Domain::Yao);
                }
            }
            shape = shapes[i];
        }
        if spec.layers.last() != Some(&LayerSpec::ArgMax) {
            if dom != Domain::Arith {
                push(Op::ToArith, &mut dom, &mut debt, shape, Domain::Arith);
            }
            push(Op::Reveal, &mut dom, &mut debt, shape, Domain::Arith);
        }
        Ok(NnPlan {
            spec: spec.clone(),
            ring,
            profile,
            steps,
        })
    }
}

fn variant(d: Domain) -> Variant {
    if d == Domain::Bool {
        Variant::Depth
    } else {
        Variant::Size
    }
}

fn relu_circuit(l: usize, n: usize) -> Result<Circuit> {
    Ok(build_relu(l)?.replicate(n))
}

fn window_indices(s: Shape, window: usize) -> Vec<Vec<usize>> {
    let (oh, ow) = (s[1] / window, s[2] / window);
    let mut out = Vec::with_capacity(s[0] * oh * ow);
    for c in 0..s[0] {
        for y in 0..oh {
            for x in 0..ow {
                let mut w = Vec::with_capacity(window * window);
                for dy in 0..window {
                    for dx in 0..window {
                        w.push((c * s[1] + y * window + dy) * s[2] + x * window + dx);
                    }
                }
                out.push(w);
            }
        }
    }
    out
}

fn pool_windows(x: &[u64], s: Shape, window: usize) -> Vec<Vec<u64>> {
    window_indices(s, window)
        .iter()
        .map(|w| w.iter().map(|&i| x[i]).collect())
        .collect()
}

fn pool_sums(x: &[u64], s: Shape, window: usize, p: RingParams) -> Vec<u64> {
    pool_windows(x, s, window)
        .iter()
        .map(|w| w.iter().fold(0, |a, &b| p.add(a, b)))
        .collect()
}

fn maxpool_circuit(l: usize, s: Shape, window: usize, v: Variant) -> Circuit {
    let mut b = Builder::new();
    let x = b.input(0, l * numel(s));
    let mut outs = Vec::new();
    for w in window_indices(s, window) {
        let mut m = x[w[0] * l..(w[0] + 1) * l].to_vec();
        for &i in &w[1..] {
            m = max_wires(&mut b, &m, &x[i * l..(i + 1) * l], v);
        }
        outs.extend(m);
    }
    b.finish("maxpool", outs)
}

/// Per output element: the weight row (if known) and the input vector it is
/// dotted with. Convolutions are lowered with im2col; padding reads zero.
fn linear_operands(
    spec: &NetSpec,
    layer: usize,
    s: Shape,
    x: &[u64],
    w: Option<&[u64]>,
) -> Result<(Vec<Vec<u64>>, Vec<Vec<u64>>)> {
    if x.len() != numel(s) {
        return Err(Error::WidthMismatch {
            expected: numel(s),
            got: x.len(),
        });
    }
    match spec.layers[layer] {
        LayerSpec::Fc { outputs } => {
            let n = x.len();
            let rows = w.map(|w| w.chunks(n).map(|r| r.to_vec()).collect()).unwrap_or_default();
            Ok((rows, vec![x.to_vec(); outputs]))
        }
        LayerSpec::Conv {
            kernel: k,
            stride,
            padding,
            maps,
        } => {
            let oh = (s[1] + 2 * padding - k) / stride + 1;
            let ow = (s[2] + 2 * padding - k) / stride + 1;
            let len = s[0] * k * k;
            let mut patches = Vec::with_capacity(oh * ow);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut v = Vec::with_capacity(len);
                    for c in 0..s[0] {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                let inside = iy >= 0 && ix >= 0 && (iy as usize) < s[1] && (ix as usize) < s[2];
                                v.push(if inside { x[(c * s[1] + iy as usize) * s[2] + ix as usize] } else { 0 });
                            }
                        }
                    }
                    patches.push(v);
                }
            }
            let mut rows = Vec::new();
            let mut cols = Vec::with_capacity(maps * oh * ow);
            for m in 0..maps {
                for pt in &patches {
                    if let Some(w) = w {
                        rows.push(w[m * len..(m + 1) * len].to_vec());
                    }
                    cols.push(pt.clone());
                }
            }
            Ok((rows, cols))
        }
        _ => unreachable!("not a linear layer"),
    }
}

fn vdp_lengths(spec: &NetSpec, layer: usize, s: Shape) -> Vec<u32> {
    match spec.layers[layer] {
        LayerSpec::Fc { outputs } => vec![numel(s) as u32; outputs],
        LayerSpec::Conv {
            kernel, stride, padding, maps,
        } => {
            let oh = (s[1] + 2 * padding - kernel) / stride + 1;
            let ow = (s[2] + 2 * padding - kernel) / stride + 1;
            vec![(s[0] * kernel * kernel) as u32; maps * oh * ow]
        }
        _ => vec![],
    }
}

/// Exactly the correlated randomness one inference consumes.
pub fn plan_manifest(plan: &NnPlan) -> Result<ResourceManifest> {
    let p = plan.ring;
    let l = p.l() as usize;
    let mut m = ResourceManifest::new(p);
    for st in &plan.steps {
        let n = numel(st.shape_in);
        match st.op {
            Op::Linear { layer, .. } => m.vdp_lengths.extend(vdp_lengths(&plan.spec, layer, st.shape_in)),
            // a2b / a2y feed the evaluator's share bits through OT; b2y and
            // b2a spend one OT per bit as well.
            Op::ToBool | Op::ToYao | Op::ToArith => m.num_ot += (n * l) as u64,
            Op::Relu if st.from == Domain::Bool => m.num_bmt += relu_circuit(l, n)?.and_count() as u64,
            Op::MaxPool { window } if st.from == Domain::Bool => {
                m.num_bmt += maxpool_circuit(l, st.shape_in, window, variant(st.from)).and_count() as u64
            }
            _ => {}
        }
    }
    Ok(m)
}

enum Val {
    Arith(Vec<u64>),
    Bool(Bits),
    Yao(Vec<Block>),
}

fn eval_nonlinear(party: &mut Party, c: &Circuit, v: Val) -> Result<Val> {
    Ok(match v {
        Val::Bool(b) => Val::Bool(gmw_eval(party, &c.levelize(), &[b])?.pop().unwrap()),
        Val::Yao(y) => Val::Yao(yao_eval(party, c, &[y])?.pop().unwrap()),
        Val::Arith(_) => unreachable!("non-linear layer on arithmetic shares"),
    })
}

/// Secure inference. The server (role 0) passes the network, the client
/// (role 1) its image as raw ring values; only the client learns the result.
pub fn nn_infer(party: &mut Party, plan: &NnPlan, net: Option<&Network>, image: Option<&[u64]>) -> Result<Option<NnOutput>> {
    let p = plan.ring;
    let l = p.l() as usize;
    if p != party.ring {
        return Err(Error::Model("plan and session use different rings".into()));
    }
    let n_in = numel(plan.spec.input);
    let mut v = if party.role == 0 {
        let net = net.ok_or_else(|| Error::Model("server must hold the network".into()))?;
        if net.spec != plan.spec || net.ring != p {
            return Err(Error::Model("network does not match the plan".into()));
        }
        Val::Arith(vec![0; n_in])
    } else {
        let x = image.ok_or_else(|| Error::Model("client must hold the input".into()))?;
        if x.len() != n_in {
            return Err(Error::WidthMismatch { expected: n_in, got: x.len() });
        }
        // Trivial sharing (0, x): the first layer's masks hide x.
        Val::Arith(x.iter().map(|&a| p.reduce(a)).collect())
    };
    for st in &plan.steps {
        v = match (st.op, v) {
            (Op::Linear { layer, weights }, Val::Arith(x)) => {
                let w = net.map(|n| n.weights[weights].as_slice());
                let (rows, cols) = linear_operands(&plan.spec, layer, st.shape_in, &x, w)?;
                let rows = (party.role == 0).then_some(rows);
                Val::Arith(vdp(party, rows.as_deref(), &cols)?)
            }
            (Op::MeanPool { window }, Val::Arith(x)) => Val::Arith(pool_sums(&x, st.shape_in, window, p)),
            (Op::ToBool, Val::Arith(x)) => Val::Bool(a2b(party, &x, st.debt)?),
            (Op::ToYao, Val::Arith(x)) => Val::Yao(a2y(party, &x, st.debt)?),
            (Op::ToYao, Val::Bool(b)) => Val::Yao(b2y(party, &b)?),
            (Op::ToArith, Val::Bool(b)) => Val::Arith(b2a(party, &b)?),
            (Op::ToArith, Val::Yao(y)) => Val::Arith(y2a(party, &y)?),
            (Op::Relu, v) => eval_nonlinear(party, &relu_circuit(l, numel(st.shape_in))?, v)?,
            (Op::MaxPool { window }, v) => {
                eval_nonlinear(party, &maxpool_circuit(l, st.shape_in, window, variant(st.from)), v)?
            }
            (Op::ArgMax, Val::Yao(y)) => {
                let c = build_argmax(numel(st.shape_in), l, Variant::Size)?;
                let idx = yao_eval(party, &c, &[y])?.pop().unwrap();
                let out = yao_reveal(party, &idx, Reveal::To(1))?;
                return Ok(out.map(|b| NnOutput::Class(bits_word(&b.iter().by_vals().collect::<Vec<_>>()) as usize)));
            }
            (Op::Reveal, Val::Arith(x)) => {
                let out = reveal(party, &x, Reveal::To(1))?;
                return Ok(out.map(|x| {
                    NnOutput::Values(x.iter().map(|&a| p.signed(p.ashr(a, st.debt as u32))).collect())
                }));
            }
            (op, _) => unreachable!("step {op:?} in the wrong domain"),
        };
    }
    unreachable!("plans end with argmax or reveal")
}
