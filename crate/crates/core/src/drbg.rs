//! CTR_DRBG (NIST SP 800-90A) over AES-128 without a derivation function.
//!
//! Seed material is 256 bits (key length + block length). The generator is
//! exposed as a byte stream: output is produced by fixed-size Generate
//! requests of [`REQUEST_BYTES`] and buffered, so consecutive reads of `a` and
//! `b` bytes return the same bytes as one read of `a + b`. Parties and the
//! dealer rely on that property to expand identical material from a seed no
//! matter how they slice their reads.

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};
use aes::Aes128;
use rand::{CryptoRng, RngCore};

use crate::error::{Error, Result};

pub const SEED_LEN: usize = 32;

/// Bytes produced per Generate call (2^15 bits, below the 2^19 per-request cap).
pub const REQUEST_BYTES: usize = 4096;

/// Total output budget before a reseed is required.
pub const MAX_OUTPUT_BITS: u64 = 1 << 63;

const RESEED_INTERVAL: u64 = 1 << 48;
const BLOCKS_PER_REQUEST: usize = REQUEST_BYTES / 16;

/// 256-bit seed.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub [u8; SEED_LEN]);

impl Seed {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut s = [0u8; SEED_LEN];
        rng.fill_bytes(&mut s);
        Seed(s)
    }

    pub fn from_slice(b: &[u8]) -> Result<Self> {
        let arr: [u8; SEED_LEN] = b
            .try_into()
            .map_err(|_| Error::Malformed(format!("seed must be 32 bytes, got {}", b.len())))?;
        Ok(Seed(arr))
    }

    pub fn as_bytes(&self) -> &[u8; SEED_LEN] {
        &self.0
    }
}

impl std::fmt::Debug for Seed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Seed(..)")
    }
}

pub struct Drbg {
    cipher: Aes128,
    v: u128,
    reseed_counter: u64,
    bits_out: u64,
    buf: Box<[u8; REQUEST_BYTES]>,
    pos: usize,
}

impl Drbg {
    /// Instantiate from 256 bits of seed material and an optional
    /// personalization string (at most 32 bytes, zero padded).
    pub fn new(seed: &Seed, personalization: &[u8]) -> Self {
        assert!(personalization.len() <= SEED_LEN, "personalization too long");
        let mut material = seed.0;
        for (m, p) in material.iter_mut().zip(personalization) {
            *m ^= p;
        }
        let mut d = Drbg {
            cipher: Aes128::new(&GenericArray::from([0u8; 16])),
            v: 0,
            reseed_counter: 1,
            bits_out: 0,
            buf: Box::new([0u8; REQUEST_BYTES]),
            pos: REQUEST_BYTES,
        };
        d.update(&material);
        d
    }

    /// Reseed with fresh seed material. Buffered output is discarded.
    pub fn reseed(&mut self, seed: &Seed) {
        self.update(&seed.0);
        self.reseed_counter = 1;
        self.bits_out = 0;
        self.pos = REQUEST_BYTES;
    }

    fn encrypt(&self, v: u128) -> [u8; 16] {
        let mut b = GenericArray::from(v.to_be_bytes());
        self.cipher.encrypt_block(&mut b);
        b.into()
    }

    fn update(&mut self, provided: &[u8; SEED_LEN]) {
        let mut temp = [0u8; SEED_LEN];
        self.v = self.v.wrapping_add(1);
        temp[..16].copy_from_slice(&self.encrypt(self.v));
        self.v = self.v.wrapping_add(1);
        temp[16..].copy_from_slice(&self.encrypt(self.v));
        for (t, p) in temp.iter_mut().zip(provided) {
            *t ^= p;
        }
        let key: [u8; 16] = temp[..16].try_into().unwrap();
        self.cipher = Aes128::new(&GenericArray::from(key));
        self.v = u128::from_be_bytes(temp[16..].try_into().unwrap());
    }

    /// One Generate request of exactly `REQUEST_BYTES`.
    fn generate_request(&mut self) -> Result<()> {
        if self.reseed_counter > RESEED_INTERVAL {
            return Err(Error::ReseedRequired);
        }
        let mut blocks = [GenericArray::<u8, aes::cipher::consts::U16>::default(); BLOCKS_PER_REQUEST];
        for b in blocks.iter_mut() {
            self.v = self.v.wrapping_add(1);
            *b = GenericArray::from(self.v.to_be_bytes());
        }
        self.cipher.encrypt_blocks(&mut blocks);
        for (chunk, b) in self.buf.chunks_exact_mut(16).zip(blocks.iter()) {
            chunk.copy_from_slice(b);
        }
        self.update(&[0u8; SEED_LEN]);
        self.reseed_counter += 1;
        self.pos = 0;
        Ok(())
    }

    fn charge(&mut self, nbits: u64) -> Result<()> {
        match self.bits_out.checked_add(nbits) {
            Some(total) if total <= MAX_OUTPUT_BITS => {
                self.bits_out = total;
                Ok(())
            }
            _ => Err(Error::ReseedRequired),
        }
    }

    /// Fill `out` from the stream.
    pub fn try_fill(&mut self, out: &mut [u8]) -> Result<()> {
        self.charge(out.len() as u64 * 8)?;
        let mut done = 0;
        while done < out.len() {
            if self.pos == REQUEST_BYTES {
                self.generate_request()?;
            }
            let take = (REQUEST_BYTES - self.pos).min(out.len() - done);
            out[done..done + take].copy_from_slice(&self.buf[self.pos..self.pos + take]);
            self.pos += take;
            done += take;
        }
        Ok(())
    }

    /// `nbits` of output, packed LSB-first. Consumes `ceil(nbits / 8)` bytes of
    /// the stream; unused high bits of the last byte are cleared.
    pub fn fill_bits(&mut self, nbits: usize) -> Result<Vec<u8>> {
        let mut out = vec![0u8; nbits.div_ceil(8)];
        self.try_fill(&mut out)?;
        if nbits % 8 != 0 {
            if let Some(last) = out.last_mut() {
                *last &= (1u8 << (nbits % 8)) - 1;
            }
        }
        Ok(out)
    }

    pub fn bits_generated(&self) -> u64 {
        self.bits_out
    }

    #[cfg(test)]
    pub(crate) fn set_bits_generated(&mut self, b: u64) {
        self.bits_out = b;
    }

    pub fn next_u128(&mut self) -> u128 {
        let mut b = [0u8; 16];
        self.fill_bytes(&mut b);
        u128::from_le_bytes(b)
    }

    /// Little-endian read of `nbytes` (<= 8) bytes.
    pub fn next_word(&mut self, nbytes: usize) -> u64 {
        let mut b = [0u8; 8];
        self.fill_bytes(&mut b[..nbytes]);
        u64::from_le_bytes(b)
    }
}

impl RngCore for Drbg {
    fn next_u32(&mut self) -> u32 {
        let mut b = [0u8; 4];
        self.fill_bytes(&mut b);
        u32::from_le_bytes(b)
    }

    fn next_u64(&mut self) -> u64 {
        let mut b = [0u8; 8];
        self.fill_bytes(&mut b);
        u64::from_le_bytes(b)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.try_fill(dest)
            .expect("drbg output budget exhausted; reseed before 2^63 bits");
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.try_fill(dest).map_err(rand::Error::new)
    }
}

impl CryptoRng for Drbg {}
