//! Stable content digests used for layout hashes and run fingerprints.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of raw bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex SHA-256 of the compact JSON encoding of `value`.
///
/// Struct fields serialize in declaration order and all maps used in
/// fingerprinted types are `BTreeMap`s, so the encoding is canonical.
pub fn digest_json<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("in-memory JSON serialization cannot fail");
    digest_bytes(&bytes)
}

/// Combine several digests into one, order-sensitive.
pub fn combine<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(hasher.finalize())
}

/// Short, display-friendly prefix of a digest.
pub fn short(digest: &str) -> &str {
    &digest[..digest.len().min(16)]
}
