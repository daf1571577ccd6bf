//! Proof backends. A backend turns a satisfied constraint system into an
//! opaque payload and later checks that payload against a system rebuilt by
//! the verifier.

use super::commit::{decode_fes, encode_fes, Digest, Opening, AUX_TAG, MODEL_TAG};
use crate::field::Fe;
use crate::r1cs::{Assignment, ConstraintSystem, Segment};
use crate::{Error, Result};

/// The committed data a proof refers to.
#[derive(Clone, Copy, Debug)]
pub struct Commitments<'a> {
    pub model: &'a Digest,
    /// Public prefix of the committed model encoding (shape and modulus).
    pub model_header: &'a [u8],
    pub aux: &'a Digest,
}

#[derive(Clone, Copy, Debug)]
pub struct Openings<'a> {
    pub model: &'a Opening,
    pub aux: &'a Opening,
}

pub trait Backend: Sync {
    fn name(&self) -> &'static str;

    fn prove(&self, cs: &ConstraintSystem, openings: Openings<'_>) -> Result<Vec<u8>>;

    /// `cs` was rebuilt in shape mode; `public` is the verifier's statement.
    fn verify(&self, cs: &ConstraintSystem, public: &[Fe], cm: Commitments<'_>, payload: &[u8]) -> bool;
}

/// Sends the whole assignment and both openings; verification re-derives
/// everything and checks the system directly.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReferenceBackend;

/// Model segment values as i64 little-endian, the tail of the model encoding.
fn model_tail(values: &[Fe]) -> Option<Vec<u8>> {
    let mut out = Vec::with_capacity(8 * values.len());
    for v in values {
        let raw = i64::try_from(v.to_i128()?).ok()?;
        out.extend(raw.to_le_bytes());
    }
    Some(out)
}

fn segment_values(cs: &ConstraintSystem, witness: &[Fe], seg: Segment) -> Vec<Fe> {
    cs.segments().iter().zip(witness).filter(|(s, _)| **s == seg).map(|(_, v)| *v).collect()
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if n > self.bytes.len() {
            return None;
        }
        let (a, b) = self.bytes.split_at(n);
        self.bytes = b;
        Some(a)
    }

    fn block(&mut self) -> Option<&'a [u8]> {
        let n = u64::from_le_bytes(self.take(8)?.try_into().ok()?);
        self.take(usize::try_from(n).ok()?)
    }

    fn opening(&mut self) -> Option<Opening> {
        let payload = self.block()?.to_vec();
        let r = self.take(32)?.try_into().ok()?;
        Some(Opening { payload, r })
    }
}

fn put_block(out: &mut Vec<u8>, b: &[u8]) {
    out.extend((b.len() as u64).to_le_bytes());
    out.extend(b);
}

impl ReferenceBackend {
    fn decode(&self, cs: &ConstraintSystem, payload: &[u8]) -> Option<(Assignment, Opening, Opening)> {
        let mut c = Cursor { bytes: payload };
        let field = cs.field();
        let public = decode_fes(field, c.block()?)?;
        let witness = decode_fes(field, c.block()?)?;
        let model = c.opening()?;
        let aux = c.opening()?;
        c.bytes.is_empty().then_some((Assignment { public, witness }, model, aux))
    }
}

impl Backend for ReferenceBackend {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn prove(&self, cs: &ConstraintSystem, openings: Openings<'_>) -> Result<Vec<u8>> {
        let z = cs.assignment().ok_or_else(|| Error::System("proving needs a witness".into()))?;
        let mut out = Vec::new();
        put_block(&mut out, &encode_fes(&z.public));
        put_block(&mut out, &encode_fes(&z.witness));
        for o in [openings.model, openings.aux] {
            put_block(&mut out, &o.payload);
            out.extend(o.r);
        }
        Ok(out)
    }

    fn verify(&self, cs: &ConstraintSystem, public: &[Fe], cm: Commitments<'_>, payload: &[u8]) -> bool {
        let Some((z, model, aux)) = self.decode(cs, payload) else {
            return false;
        };
        if z.public != public || z.witness.len() != cs.num_witness() {
            return false;
        }
        if model.digest(MODEL_TAG) != *cm.model || aux.digest(AUX_TAG) != *cm.aux {
            return false;
        }
        let Some(tail) = model_tail(&segment_values(cs, &z.witness, Segment::Model)) else {
            return false;
        };
        let expected_model = [cm.model_header, &tail].concat();
        if model.payload != expected_model {
            return false;
        }
        if aux.payload != encode_fes(&segment_values(cs, &z.witness, Segment::Aux)) {
            return false;
        }
        matches!(cs.is_satisfied(&z), Ok(s) if s.is_satisfied())
    }
}

pub(crate) fn aux_payload(cs: &ConstraintSystem) -> Result<Vec<u8>> {
    let z = cs.assignment().ok_or_else(|| Error::System("proving needs a witness".into()))?;
    Ok(encode_fes(&segment_values(cs, &z.witness, Segment::Aux)))
}
