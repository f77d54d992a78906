//! Canonical JSON: sorted keys, two-space indent, trailing newline.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("in-memory values always serialize");
    let mut out = serde_json::to_string_pretty(&tree).expect("json values always serialize");
    out.push('\n');
    out
}

/// Single-line canonical form, used for wire messages and log records.
pub fn to_line<T: Serialize + ?Sized>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("in-memory values always serialize");
    serde_json::to_string(&tree).expect("json values always serialize")
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}
