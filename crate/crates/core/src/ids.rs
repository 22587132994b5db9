use serde::Serialize;
use sha2::{Digest, Sha256};

/// Short hex digest of the JSON encoding of `value`.
pub(crate) fn content_id<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes to JSON");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
