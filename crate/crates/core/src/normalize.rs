//! Canonical form for attribute values and descriptions.

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("value is empty after normalization")]
pub struct EmptyAfterNormalize;

/// NFC, lowercase, trimmed, with internal whitespace runs collapsed to a
/// single space.
pub fn normalize(raw: &str) -> Result<String, EmptyAfterNormalize> {
    // Lowercasing can emit decomposed sequences, hence the second NFC pass.
    let lowered: String = raw.nfc().collect::<String>().to_lowercase();
    let composed: String = lowered.nfc().collect();
    let out = composed.split_whitespace().collect::<Vec<_>>().join(" ");
    if out.is_empty() {
        Err(EmptyAfterNormalize)
    } else {
        Ok(out)
    }
}
