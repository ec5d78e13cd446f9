//! Text wire format for protected posts.
//!
//! An envelope is a single compact JSON object with a fixed field order:
//!
//! ```text
//! {"version":1,
//!  "suite":{"cipher":"aes-256-cbc-pkcs7","hash":"sha-256","sharing":"shamir-gf256-11b"},
//!  "n":4,"t":3,
//!  "descriptions":["First name", ...],
//!  "shares":[{"index":1,"iv":"<b64>","body":"<b64>"}, ...],
//!  "post":{"iv":"<b64>","body":"<b64>"}}
//! ```
//!
//! (shown wrapped; the encoded form has no whitespace). Binary fields use
//! standard padded base64. Share `index` is the 1-based position and must
//! match the array order. Share bodies decrypt to `x ‖ y` with
//! `y[j] = p_j(x)` in master-key byte order.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{CipherText, BLOCK_LEN};
use crate::scheme::{ProtectedPost, Suite, FORMAT_VERSION};
use crate::shamir::SharingParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("envelope does not parse: {0}")]
    Parse(String),
    #[error("unsupported envelope version {0}")]
    VersionUnsupported(u64),
    #[error("unsupported algorithm suite")]
    UnsupportedSuite,
    #[error("invalid sharing parameters n = {n}, t = {t}")]
    InvalidParams { n: u64, t: u64 },
    #[error("n = {n} but envelope has {descriptions} descriptions and {shares} shares")]
    CountMismatch {
        n: usize,
        descriptions: usize,
        shares: usize,
    },
    #[error("share at position {position} carries index {index}")]
    IndexMismatch { position: usize, index: u64 },
    #[error("field `{0}` is not valid base64")]
    BadBase64(&'static str),
    #[error("malformed envelope: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSuite {
    cipher: String,
    hash: String,
    sharing: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireShare {
    index: u64,
    iv: String,
    body: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireCipherText {
    iv: String,
    body: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireEnvelope {
    version: u64,
    suite: WireSuite,
    n: u64,
    t: u64,
    descriptions: Vec<String>,
    shares: Vec<WireShare>,
    post: WireCipherText,
}

pub fn encode(pp: &ProtectedPost) -> String {
    let wire = WireEnvelope {
        version: pp.version as u64,
        suite: WireSuite {
            cipher: pp.suite.cipher.clone(),
            hash: pp.suite.hash.clone(),
            sharing: pp.suite.sharing.clone(),
        },
        n: pp.params.n() as u64,
        t: pp.params.t() as u64,
        descriptions: pp.descriptions.clone(),
        shares: pp
            .share_cts
            .iter()
            .enumerate()
            .map(|(i, c)| WireShare {
                index: i as u64 + 1,
                iv: STANDARD.encode(c.iv),
                body: STANDARD.encode(&c.body),
            })
            .collect(),
        post: WireCipherText {
            iv: STANDARD.encode(pp.post_ct.iv),
            body: STANDARD.encode(&pp.post_ct.body),
        },
    };
    serde_json::to_string(&wire).expect("envelope serialization is infallible")
}

fn cipher_text(iv: &str, body: &str, what: &'static str) -> Result<CipherText, EnvelopeError> {
    let iv = STANDARD.decode(iv).map_err(|_| EnvelopeError::BadBase64("iv"))?;
    let body = STANDARD.decode(body).map_err(|_| EnvelopeError::BadBase64("body"))?;
    let iv: [u8; BLOCK_LEN] = iv
        .try_into()
        .map_err(|_| EnvelopeError::Malformed(format!("{what}: iv must be 16 bytes")))?;
    let ct = CipherText { iv, body };
    ct.validate()
        .map_err(|e| EnvelopeError::Malformed(format!("{what}: {e}")))?;
    Ok(ct)
}

pub fn decode(doc: &str) -> Result<ProtectedPost, EnvelopeError> {
    let value: serde_json::Value =
        serde_json::from_str(doc).map_err(|e| EnvelopeError::Parse(e.to_string()))?;
    // Version first, so a future layout is rejected rather than misread.
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| EnvelopeError::Parse("missing or non-integer `version`".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(EnvelopeError::VersionUnsupported(version));
    }
    let wire: WireEnvelope =
        serde_json::from_value(value).map_err(|e| EnvelopeError::Parse(e.to_string()))?;

    let suite = Suite {
        cipher: wire.suite.cipher,
        hash: wire.suite.hash,
        sharing: wire.suite.sharing,
    };
    if !suite.is_supported() {
        return Err(EnvelopeError::UnsupportedSuite);
    }
    let params = SharingParams::new(wire.n as usize, wire.t as usize)
        .ok()
        .filter(|_| wire.n <= 255)
        .ok_or(EnvelopeError::InvalidParams { n: wire.n, t: wire.t })?;
    if wire.descriptions.len() != params.n() || wire.shares.len() != params.n() {
        return Err(EnvelopeError::CountMismatch {
            n: params.n(),
            descriptions: wire.descriptions.len(),
            shares: wire.shares.len(),
        });
    }
    let mut share_cts = Vec::with_capacity(params.n());
    for (pos, share) in wire.shares.iter().enumerate() {
        if share.index != pos as u64 + 1 {
            return Err(EnvelopeError::IndexMismatch {
                position: pos + 1,
                index: share.index,
            });
        }
        share_cts.push(cipher_text(&share.iv, &share.body, "share")?);
    }
    let post_ct = cipher_text(&wire.post.iv, &wire.post.body, "post")?;
    let pp = ProtectedPost {
        version: FORMAT_VERSION,
        suite,
        params,
        descriptions: wire.descriptions,
        post_ct,
        share_cts,
    };
    pp.validate()
        .map_err(|e| EnvelopeError::Malformed(e.to_string()))?;
    Ok(pp)
}
