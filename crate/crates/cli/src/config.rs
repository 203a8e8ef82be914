//! Party configuration: a TOML file merged under command-line flags.

use std::path::Path;
use std::time::Duration;

use hybrid2pc::drbg::Seed;
use hybrid2pc::ml::Profile;
use hybrid2pc::transport::{CipherMode, SessionId};
use hybrid2pc::RingParams;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub role: Option<u8>,
    pub profile: Option<Profile>,
    pub null_cipher: Option<bool>,
    /// Hex pre-shared key for the encrypted transport.
    pub psk: Option<String>,
    /// Read timeout in seconds.
    pub timeout: Option<u64>,
    #[serde(default)]
    pub ring: RingConfig,
    #[serde(default)]
    pub endpoints: Endpoints,
    #[serde(default)]
    pub seeds: Seeds,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub l: Option<u8>,
    pub alpha: Option<u8>,
    pub beta: Option<u8>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub stp: Option<String>,
    pub peer: Option<String>,
    pub listen: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// 32 bytes of hex.
    pub rng: Option<String>,
    /// 16 bytes of hex; only honoured by role 0, which picks the session.
    pub session: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// How this party reaches its peer.
#[derive(Clone, Debug)]
pub enum PeerEndpoint {
    Connect(String),
    Listen(String),
}

/// Fully resolved settings for one party run.
#[derive(Clone, Debug)]
pub struct Settings {
    pub role: u8,
    pub ring: RingParams,
    pub profile: Profile,
    pub mode: CipherMode,
    pub stp: String,
    pub peer: PeerEndpoint,
    pub timeout: Duration,
    pub rng_seed: Option<Seed>,
    pub session: Option<SessionId>,
}

pub fn parse_hex(s: &str, len: usize, what: &str) -> Result<Vec<u8>, CliError> {
    let b = hex::decode(s.trim()).map_err(|e| CliError::usage(format!("{what}: {e}")))?;
    if len > 0 && b.len() != len {
        return Err(CliError::usage(format!("{what}: expected {len} bytes, got {}", b.len())));
    }
    Ok(b)
}

pub fn ring_from(l: Option<u8>, alpha: Option<u8>, beta: Option<u8>, default_l: u8) -> Result<RingParams, CliError> {
    let l = l.unwrap_or(default_l);
    let r = match (alpha, beta) {
        (None, None) => RingParams::default_for(l).or_else(|_| RingParams::integer(l)),
        (Some(a), Some(b)) => RingParams::new(l, a, b),
        _ => return Err(CliError::usage("ring alpha and beta must be given together")),
    };
    r.map_err(|e| CliError::usage(e.to_string()))
}

pub fn cipher_mode(null_cipher: bool, psk: Option<&str>) -> Result<CipherMode, CliError> {
    match (null_cipher, psk) {
        (true, None) => Ok(CipherMode::Null),
        (false, Some(k)) => Ok(CipherMode::Aead {
            psk: parse_hex(k, 0, "psk")?,
        }),
        (true, Some(_)) => Err(CliError::usage("--null-cipher and --psk are exclusive")),
        (false, None) => Err(CliError::usage("pass --psk <hex> or --null-cipher")),
    }
}
