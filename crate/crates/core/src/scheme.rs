//! PROTECT and ACCESS.
//!
//! A post is encrypted under a fresh master key. The key is split into `n`
//! Shamir shares and share `i` is encrypted under `SHA-256(v_i)`, the hash
//! of the `i`-th attribute value. Anyone who knows `t` of the values can
//! decrypt `t` shares, rebuild the key and read the post. Wrong values do
//! not produce an error: ACCESS simply returns unrelated bytes.

use std::collections::HashSet;
use std::fmt;

use rand::RngCore;
use thiserror::Error;

use crate::normalize::normalize;
use crate::primitives::{
    self, decrypt_raw, hash_value, sample_master_key, CipherText, PrimitiveError, SymmetricKey,
    KEY_LEN,
};
use crate::shamir::{self, ShamirError, Share, SharingParams};

pub const FORMAT_VERSION: u32 = 1;

/// Plaintext size of one encrypted share: `x ‖ y`.
pub const SHARE_PLAINTEXT_LEN: usize = 1 + KEY_LEN;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    InvalidParams(#[from] ShamirError),
    #[error("expected {expected} attributes, got {got}")]
    AttributeCount { expected: usize, got: usize },
    #[error("post must not be empty")]
    EmptyPost,
    #[error("attribute value is empty after normalization")]
    EmptyValue,
    #[error("attribute description must not be empty")]
    EmptyDescription,
    #[error("attribute index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("attribute index {0} given more than once")]
    DuplicateIndex(usize),
    #[error("expected exactly {expected} values, got {got}")]
    WrongGuessCount { expected: usize, got: usize },
    #[error("malformed envelope: {0}")]
    MalformedEnvelope(String),
    #[error(transparent)]
    Entropy(PrimitiveError),
}

/// Algorithm identifiers carried in every envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suite {
    pub cipher: String,
    pub hash: String,
    pub sharing: String,
}

impl Suite {
    pub const CIPHER: &'static str = "aes-256-cbc-pkcs7";
    pub const HASH: &'static str = "sha-256";
    pub const SHARING: &'static str = "shamir-gf256-11b";

    pub fn current() -> Self {
        Suite {
            cipher: Self::CIPHER.into(),
            hash: Self::HASH.into(),
            sharing: Self::SHARING.into(),
        }
    }

    pub fn is_supported(&self) -> bool {
        *self == Self::current()
    }
}

/// A (description, value) pair. The value is stored normalized and kept
/// out of `Debug` output.
#[derive(Clone, PartialEq, Eq)]
pub struct Attribute {
    description: String,
    value: String,
}

impl Attribute {
    pub fn new(description: &str, value: &str) -> Result<Self, SchemeError> {
        let description = description.trim();
        if description.is_empty() {
            return Err(SchemeError::EmptyDescription);
        }
        let value = normalize(value).map_err(|_| SchemeError::EmptyValue)?;
        Ok(Attribute {
            description: description.to_owned(),
            value,
        })
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

impl fmt::Debug for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Attribute")
            .field("description", &self.description)
            .field("value", &"<redacted>")
            .finish()
    }
}

/// One guessed value for the attribute at 1-based position `index`.
#[derive(Clone, PartialEq, Eq)]
pub struct Guess {
    pub index: usize,
    pub value: String,
}

impl Guess {
    pub fn new(index: usize, value: impl Into<String>) -> Self {
        Guess {
            index,
            value: value.into(),
        }
    }
}

impl fmt::Debug for Guess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Guess({}, <redacted>)", self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtectedPost {
    pub version: u32,
    pub suite: Suite,
    pub params: SharingParams,
    pub descriptions: Vec<String>,
    pub post_ct: CipherText,
    pub share_cts: Vec<CipherText>,
}

impl ProtectedPost {
    /// Structural checks that do not need any key.
    pub fn validate(&self) -> Result<(), SchemeError> {
        let n = self.params.n();
        if self.descriptions.len() != n || self.share_cts.len() != n {
            return Err(SchemeError::MalformedEnvelope(format!(
                "n = {n} but {} descriptions and {} shares",
                self.descriptions.len(),
                self.share_cts.len()
            )));
        }
        self.post_ct
            .validate()
            .map_err(|e| SchemeError::MalformedEnvelope(e.to_string()))?;
        let share_len = primitives::padded_len(SHARE_PLAINTEXT_LEN);
        if let Some(pos) = self.share_cts.iter().position(|c| c.body.len() != share_len) {
            return Err(SchemeError::MalformedEnvelope(format!(
                "share {} has a {}-byte body, expected {share_len}",
                pos + 1,
                self.share_cts[pos].body.len()
            )));
        }
        Ok(())
    }
}

/// Samples a master key and encrypts its shares under the attribute values.
/// This is everything PROTECT does except encrypting the post itself.
pub fn protect_key<R: RngCore + ?Sized>(
    attributes: &[Attribute],
    params: SharingParams,
    rng: &mut R,
) -> Result<(SymmetricKey, Vec<CipherText>), SchemeError> {
    if attributes.len() != params.n() {
        return Err(SchemeError::AttributeCount {
            expected: params.n(),
            got: attributes.len(),
        });
    }
    let key = sample_master_key(rng).map_err(SchemeError::Entropy)?;
    let shares = shamir::split(key.as_bytes(), params, rng)?;
    let share_cts = shares
        .iter()
        .zip(attributes)
        .map(|(share, attr)| primitives::encrypt(&hash_value(attr.value()), &share.to_bytes(), rng))
        .collect();
    Ok((key, share_cts))
}

pub fn protect<R: RngCore + ?Sized>(
    attributes: &[Attribute],
    post: &[u8],
    params: SharingParams,
    rng: &mut R,
) -> Result<ProtectedPost, SchemeError> {
    if post.is_empty() {
        return Err(SchemeError::EmptyPost);
    }
    if attributes.len() != params.n() {
        return Err(SchemeError::AttributeCount {
            expected: params.n(),
            got: attributes.len(),
        });
    }
    let key = sample_master_key(rng).map_err(SchemeError::Entropy)?;
    let post_ct = primitives::encrypt(&key, post, rng);
    let shares = shamir::split(key.as_bytes(), params, rng)?;
    let share_cts = shares
        .iter()
        .zip(attributes)
        .map(|(share, attr)| primitives::encrypt(&hash_value(attr.value()), &share.to_bytes(), rng))
        .collect();
    Ok(ProtectedPost {
        version: FORMAT_VERSION,
        suite: Suite::current(),
        params,
        descriptions: attributes.iter().map(|a| a.description.clone()).collect(),
        post_ct,
        share_cts,
    })
}

fn check_guesses(guesses: &[Guess], pp: &ProtectedPost) -> Result<(), SchemeError> {
    let (n, t) = (pp.params.n(), pp.params.t());
    if guesses.len() != t {
        return Err(SchemeError::WrongGuessCount {
            expected: t,
            got: guesses.len(),
        });
    }
    let mut seen = HashSet::with_capacity(t);
    for g in guesses {
        if g.index == 0 || g.index > n {
            return Err(SchemeError::IndexOutOfRange { index: g.index, n });
        }
        if !seen.insert(g.index) {
            return Err(SchemeError::DuplicateIndex(g.index));
        }
    }
    Ok(())
}

/// Decrypts the guessed shares and interpolates a candidate master key.
///
/// The x-coordinate comes from the share's public position. The x byte
/// inside the ciphertext is not compared against it: a mismatch would tell
/// the caller that a value was wrong.
pub fn recover_key(guesses: &[Guess], pp: &ProtectedPost) -> Result<SymmetricKey, SchemeError> {
    check_guesses(guesses, pp)?;
    pp.validate()?;
    let mut shares = Vec::with_capacity(guesses.len());
    for g in guesses {
        let value = normalize(&g.value).map_err(|_| SchemeError::EmptyValue)?;
        let raw = decrypt_raw(&hash_value(&value), &pp.share_cts[g.index - 1])
            .map_err(|e| SchemeError::MalformedEnvelope(e.to_string()))?;
        shares.push(Share {
            x: g.index as u8,
            y: raw[1..SHARE_PLAINTEXT_LEN].to_vec(),
        });
    }
    let key = shamir::reconstruct(&shares, pp.params.t())
        .map_err(|e| SchemeError::MalformedEnvelope(e.to_string()))?;
    Ok(SymmetricKey::from_slice(&key).expect("reconstructed key has key length"))
}

/// Returns the original post when every guess is right and unrelated bytes
/// otherwise. There is no "wrong value" signal.
pub fn access(guesses: &[Guess], pp: &ProtectedPost) -> Result<Vec<u8>, SchemeError> {
    let key = recover_key(guesses, pp)?;
    match primitives::decrypt(&key, &pp.post_ct) {
        Ok(bytes) | Err(PrimitiveError::GarbledPadding(bytes)) => Ok(bytes),
        Err(e) => Err(SchemeError::MalformedEnvelope(e.to_string())),
    }
}

/// Heuristic: valid UTF-8 with at least 90% printable characters.
/// Tabs and line breaks count as printable. Empty input is not text.
pub fn looks_like_text(bytes: &[u8]) -> bool {
    let Ok(s) = std::str::from_utf8(bytes) else {
        return false;
    };
    let (mut total, mut printable) = (0usize, 0usize);
    for c in s.chars() {
        total += 1;
        if !c.is_control() || matches!(c, '\n' | '\r' | '\t') {
            printable += 1;
        }
    }
    total > 0 && printable * 10 >= total * 9
}
