//! Hash commitments: SHA-256(len(tag) | tag | len(payload) | payload | r).

use sha2::{Digest as _, Sha256};

use crate::field::{Fe, PrimeField};

pub type Digest = [u8; 32];

pub const MODEL_TAG: &[u8] = b"ezdps/model";
pub const AUX_TAG: &[u8] = b"ezdps/aux";
const BLIND_TAG: &[u8] = b"ezdps/aux-blinding";

pub fn digest(tag: &[u8], payload: &[u8], r: &[u8; 32]) -> Digest {
    let mut h = Sha256::new();
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag);
    h.update((payload.len() as u64).to_le_bytes());
    h.update(payload);
    h.update(r);
    h.finalize().into()
}

/// A committed payload together with its blinding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub payload: Vec<u8>,
    pub r: [u8; 32],
}

impl Opening {
    pub fn digest(&self, tag: &[u8]) -> Digest {
        digest(tag, &self.payload, &self.r)
    }
}

/// Blinding for auxiliary commitments, derived from the model secret and the
/// statement so that proving is deterministic.
pub fn derive_blinding(secret: &[u8; 32], context: &[u8]) -> [u8; 32] {
    digest(BLIND_TAG, context, secret)
}

pub fn encode_fes(v: &[Fe]) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 * v.len());
    for e in v {
        out.extend(e.to_u256_le());
    }
    out
}

/// Canonical decoding; `None` on a ragged length or a non-reduced element.
pub fn decode_fes(field: &'static PrimeField, bytes: &[u8]) -> Option<Vec<Fe>> {
    if bytes.len() % 32 != 0 {
        return None;
    }
    bytes.chunks_exact(32).map(|c| field.from_bytes_le(c.try_into().unwrap())).collect()
}
