//! Block cipher, hash and randomness used by the scheme.
//!
//! AES-256 in CBC mode with PKCS#7 padding and a fresh random IV per
//! message, SHA-256 for deriving share keys from attribute values, and a
//! ChaCha20-based [`RandomSource`].

use std::fmt;

use aes::cipher::block_padding::{NoPadding, Pkcs7};
use aes::cipher::{BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const KEY_LEN: usize = 32;
pub const BLOCK_LEN: usize = 16;

type CbcEncryptor = cbc::Encryptor<aes::Aes256>;
type CbcDecryptor = cbc::Decryptor<aes::Aes256>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrimitiveError {
    #[error("operating system entropy source unavailable")]
    EntropyUnavailable,
    #[error("malformed ciphertext: {0}")]
    MalformedCipherText(&'static str),
    /// Decryption produced bytes whose padding does not parse, which is
    /// what a wrong key usually looks like. The raw bytes are kept so the
    /// caller can still hand them out as "some random post".
    #[error("decrypted data has invalid padding")]
    GarbledPadding(Vec<u8>),
}

/// A 256-bit symmetric key. `Debug` never prints the bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey([u8; KEY_LEN]);

impl SymmetricKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        SymmetricKey(bytes)
    }

    /// Accepts exactly 32 bytes.
    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; KEY_LEN]>::try_from(bytes).ok().map(SymmetricKey)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

impl Drop for SymmetricKey {
    fn drop(&mut self) {
        // best effort; not guaranteed to survive optimisation
        self.0.fill(0);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherText {
    pub iv: [u8; BLOCK_LEN],
    pub body: Vec<u8>,
}

impl CipherText {
    pub fn validate(&self) -> Result<(), PrimitiveError> {
        if self.body.is_empty() {
            return Err(PrimitiveError::MalformedCipherText("empty body"));
        }
        if !self.body.len().is_multiple_of(BLOCK_LEN) {
            return Err(PrimitiveError::MalformedCipherText(
                "body length is not a multiple of 16",
            ));
        }
        Ok(())
    }
}

/// Seedable CSPRNG. Seeded instances give identical streams; unseeded ones
/// are keyed from the operating system.
#[derive(Clone, Debug)]
pub struct RandomSource(ChaCha20Rng);

impl RandomSource {
    pub fn from_os() -> Result<Self, PrimitiveError> {
        ChaCha20Rng::from_rng(rand::rngs::OsRng)
            .map(RandomSource)
            .map_err(|_| PrimitiveError::EntropyUnavailable)
    }

    pub fn seeded(seed: u64) -> Self {
        RandomSource(ChaCha20Rng::seed_from_u64(seed))
    }

    /// Independent stream `index` of the generator seeded with `seed`.
    /// Used to give parallel workers reproducible sources.
    pub fn derived(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RandomSource(rng)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

impl CryptoRng for RandomSource {}

pub fn sample_master_key<R: RngCore + ?Sized>(rng: &mut R) -> Result<SymmetricKey, PrimitiveError> {
    let mut key = [0u8; KEY_LEN];
    rng.try_fill_bytes(&mut key)
        .map_err(|_| PrimitiveError::EntropyUnavailable)?;
    Ok(SymmetricKey(key))
}

/// SHA-256 of the UTF-8 bytes of an already-normalized attribute value.
///
/// No salt and no description are mixed in, so equal values give equal
/// keys across every post.
pub fn hash_value(value: &str) -> SymmetricKey {
    SymmetricKey(Sha256::digest(value.as_bytes()).into())
}

pub fn encrypt<R: RngCore + ?Sized>(key: &SymmetricKey, plaintext: &[u8], rng: &mut R) -> CipherText {
    let mut iv = [0u8; BLOCK_LEN];
    rng.fill_bytes(&mut iv);
    encrypt_with_iv(key, &iv, plaintext)
}

pub fn encrypt_with_iv(key: &SymmetricKey, iv: &[u8; BLOCK_LEN], plaintext: &[u8]) -> CipherText {
    let body = CbcEncryptor::new(key.as_bytes().into(), iv.into())
        .encrypt_padded_vec_mut::<Pkcs7>(plaintext);
    CipherText { iv: *iv, body }
}

/// CBC-decrypts without touching the padding.
pub(crate) fn decrypt_raw(key: &SymmetricKey, ct: &CipherText) -> Result<Vec<u8>, PrimitiveError> {
    ct.validate()?;
    CbcDecryptor::new(key.as_bytes().into(), (&ct.iv).into())
        .decrypt_padded_vec_mut::<NoPadding>(&ct.body)
        .map_err(|_| PrimitiveError::MalformedCipherText("block decryption failed"))
}

/// Decrypts and strips PKCS#7 padding. Under a wrong key this either
/// returns garbage (when the padding happens to parse) or
/// [`PrimitiveError::GarbledPadding`] carrying the raw bytes.
pub fn decrypt(key: &SymmetricKey, ct: &CipherText) -> Result<Vec<u8>, PrimitiveError> {
    let mut raw = decrypt_raw(key, ct)?;
    match pkcs7_len(&raw) {
        Some(len) => {
            raw.truncate(len);
            Ok(raw)
        }
        None => Err(PrimitiveError::GarbledPadding(raw)),
    }
}

fn pkcs7_len(raw: &[u8]) -> Option<usize> {
    let pad = *raw.last()? as usize;
    if pad == 0 || pad > BLOCK_LEN || pad > raw.len() {
        return None;
    }
    raw[raw.len() - pad..]
        .iter()
        .all(|&b| b as usize == pad)
        .then(|| raw.len() - pad)
}

/// Body length produced by [`encrypt`] for a plaintext of `len` bytes.
pub fn padded_len(len: usize) -> usize {
    (len / BLOCK_LEN + 1) * BLOCK_LEN
}
