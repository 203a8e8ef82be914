//! Weight files: `b"H2PW"`, `alpha: u8`, `beta: u8`, `count: u32`, then per
//! tensor `ndim: u32`, `dims: [u32; ndim]` and the values as `f64`, all
//! little-endian. Values are quantized on load.

use std::fs;
use std::path::Path;

use super::nn::{NetSpec, Network};
use crate::error::{Error, Result};
use crate::ring::RingParams;

const MAGIC: &[u8; 4] = b"H2PW";

pub fn save_weights(path: &Path, ring: RingParams, shapes: &[Vec<usize>], tensors: &[Vec<f64>]) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(ring.alpha());
    out.push(ring.beta());
    out.extend((tensors.len() as u32).to_le_bytes());
    for (s, t) in shapes.iter().zip(tensors) {
        out.extend((s.len() as u32).to_le_bytes());
        for &d in s {
            out.extend((d as u32).to_le_bytes());
        }
        for v in t {
            out.extend(v.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(Error::Malformed("truncated weight file".into()));
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

/// Read a weight file for `spec`. The ring layout comes from the header.
pub fn load_weights(path: &Path, spec: &NetSpec) -> Result<Network> {
    let bytes = fs::read(path)?;
    let mut r = Reader(&bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::Malformed("not a weight file".into()));
    }
    let ab = r.take(2)?;
    let (alpha, beta) = (ab[0], ab[1]);
    let ring = RingParams::new(alpha.saturating_add(beta.saturating_mul(2)).saturating_add(1), alpha, beta)?;
    let expect = spec.weight_shapes()?;
    let count = r.u32()?;
    if count != expect.len() {
        return Err(Error::Model(format!("{count} tensors, network needs {}", expect.len())));
    }
    let mut tensors = Vec::with_capacity(count);
    for want in &expect {
        let nd = r.u32()?;
        let dims = (0..nd).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        if &dims != want {
            return Err(Error::Model(format!("tensor shape {dims:?}, expected {want:?}")));
        }
        let n: usize = dims.iter().product();
        let raw = r.take(n * 8)?;
        tensors.push(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect::<Vec<_>>());
    }
    if !r.0.is_empty() {
        return Err(Error::Malformed("trailing bytes in weight file".into()));
    }
    Network::from_f64(spec.clone(), ring, &tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::LayerSpec;

    fn spec() -> NetSpec {
        NetSpec {
            input: [1, 4, 4],
            layers: vec![
                LayerSpec::Conv { kernel: 3, stride: 1, padding: 0, maps: 2 },
                LayerSpec::Relu,
                LayerSpec::Fc { outputs: 3 },
            ],
        }
    }

    #[test]
    fn roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let ring = RingParams::default_for(32).unwrap();
        let shapes = spec().weight_shapes().unwrap();
        assert_eq!(shapes, vec![vec![2, 1, 3, 3], vec![3, 8]]);
        let t: Vec<Vec<f64>> = shapes
            .iter()
            .map(|s| (0..s.iter().product::<usize>()).map(|i| i as f64 / 8.0 - 1.0).collect())
            .collect();
        save_weights(&path, ring, &shapes, &t).unwrap();
        let net = load_weights(&path, &spec()).unwrap();
        assert_eq!(net, Network::from_f64(spec(), ring, &t).unwrap());

        let zeros: Vec<Vec<f64>> = shapes.iter().map(|s| vec![0.0; s.iter().product()]).collect();
        save_weights(&path, ring, &shapes, &zeros).unwrap();
        assert!(load_weights(&path, &spec()).unwrap().weights.iter().flatten().all(|&w| w == 0));

        let mut big = zeros.clone();
        big[1][0] = 1e6;
        save_weights(&path, ring, &shapes, &big).unwrap();
        assert!(matches!(load_weights(&path, &spec()), Err(Error::FixedPointOverflow { .. })));

        fs::write(&path, b"H2PW\x07").unwrap();
        assert!(load_weights(&path, &spec()).is_err());
    }
}
