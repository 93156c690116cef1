//! Canonical JSON: keys sorted, strings in NFC, no insignificant whitespace.

use codemix_core::text::nfc;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Rewrites every string (keys included) into NFC. Objects come out
/// key-sorted because `serde_json::Map` is a `BTreeMap` here.
pub fn normalize(value: Value) -> Value {
    match value {
        Value::String(s) => Value::String(nfc(&s)),
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (nfc(&k), normalize(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(value: &T) -> serde_json::Result<Value> {
    serde_json::to_value(value).map(normalize)
}

pub fn to_string(value: &Value) -> String {
    normalize(value.clone()).to_string()
}

/// Hex SHA-256 of the provider id and the canonical request.
pub fn request_hash(provider_id: &str, request: &Value) -> String {
    let mut h = Sha256::new();
    h.update(provider_id.as_bytes());
    h.update([0u8]);
    h.update(to_string(request).as_bytes());
    hex::encode(h.finalize())
}
