//! Seed derivation. All randomness in a run flows from one master seed via
//! these derivations, so output is independent of worker scheduling.

use sha2::{Digest, Sha256};

/// Derives a per-record, per-stage seed: `sha256(master || stage || id)`
/// truncated to the first eight bytes (big-endian).
pub fn derive_seed(master: u64, stage: &str, record_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_be_bytes());
    hasher.update([stage.len() as u8]);
    hasher.update(stage.as_bytes());
    hasher.update(record_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// SHA-256 of a byte slice as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// SHA-256 of a file's contents as lowercase hex.
pub fn sha256_file(path: &std::path::Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}
