use crate::ass::vdp;
use crate::circuit::library::is_positive_wires;
use crate::circuit::{Builder, Circuit};
use crate::convert::a2y;
use crate::error::{Error, Result};
use crate::gc::{yao_eval, yao_reveal};
use crate::manifest::ResourceManifest;
use crate::ring::RingParams;
use crate::session::{Party, Reveal};

/// Linear SVM `sign(w.x - b)` in fixed point. Held by the server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvmModel {
    pub ring: RingParams,
    /// Raw ring encodings at scale `2^beta`.
    pub w: Vec<u64>,
    pub b: u64,
}

impl SvmModel {
    pub fn from_f64(ring: RingParams, w: &[f64], b: f64) -> Result<Self> {
        Ok(SvmModel {
            ring,
            w: w.iter().map(|&v| ring.encode(v).map(|f| f.raw.0)).collect::<Result<_>>()?,
            b: ring.encode(b)?.raw.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Correlated randomness for one classification of dimension `d`.
pub fn svm_manifest(ring: RingParams, d: usize) -> ResourceManifest {
    let mut m = ResourceManifest::new(ring);
    m.vdp_lengths = vec![d as u32];
    m.num_ot = ring.l() as u64;
    m
}

/// Cleartext reference: `+1` iff `(w.x - b*2^beta) >> beta > 0`.
pub fn svm_plain(model: &SvmModel, x: &[u64]) -> i8 {
    let p = model.ring;
    let dot = model.w.iter().zip(x).fold(0, |s, (&w, &x)| p.add(s, p.mul(w, x)));
    let v = p.truncate(p.sub(dot, p.mul(model.b, p.reduce(1 << p.beta()))));
    if p.signed(v) > 0 {
        1
    } else {
        -1
    }
}

fn sign_circuit(l: usize) -> Circuit {
    let mut b = Builder::new();
    let x = b.input(0, l);
    let s = is_positive_wires(&mut b, &x);
    b.finish("positive", vec![s])
}

/// Secure classification. The server (role 0) passes the model, the client
/// (role 1) its query; only the client learns the label.
pub fn svm_classify(party: &mut Party, model: Option<&SvmModel>, x: Option<&[u64]>, d: usize) -> Result<Option<i8>> {
    let p = party.ring;
    let z = if party.role == 0 {
        let m = model.ok_or_else(|| Error::Model("server must hold the model".into()))?;
        if m.dim() != d {
            return Err(Error::WidthMismatch { expected: d, got: m.dim() });
        }
        // The client's query is shared trivially as (0, x).
        let z = vdp(party, Some(&[m.w.clone()]), &[vec![0; d]])?[0];
        p.sub(z, p.mul(m.b, p.reduce(1 << p.beta())))
    } else {
        let x = x.ok_or_else(|| Error::Model("client must hold the query".into()))?;
        if x.len() != d {
            return Err(Error::WidthMismatch { expected: d, got: x.len() });
        }
        vdp(party, None, &[x.to_vec()])?[0]
    };
    let y = a2y(party, &[z], p.beta() as usize)?;
    let s = yao_eval(party, &sign_circuit(p.l() as usize), &[y])?.pop().unwrap();
    Ok(yao_reveal(party, &s, Reveal::To(1))?.map(|b| if b[0] { 1 } else { -1 }))
}
