//! Proof file encoding.
//!
//! ```text
//! "EZDP" | version u16 | kind u8 | claim u32
//! model digest [32] | aux digest [32]
//! shape len u32 | shape
//! challenge count u16 | challenges [32 each]
//! backend name len u16 | name
//! payload len u64 | payload
//! ```
//!
//! All integers little-endian. The claim is the label for an inference proof
//! and the number of correct predictions for an accuracy proof.

use super::commit::Digest;
use crate::field::{Fe, PrimeField};
use crate::model::ModelShape;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EZDP";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Claim {
    /// 1-based predicted label.
    Inference { y: u32 },
    /// At least `k` samples are classified correctly.
    Accuracy { k: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofBundle {
    pub claim: Claim,
    pub shape: ModelShape,
    pub model_cm: Digest,
    pub aux_cm: Digest,
    pub challenges: Vec<Fe>,
    pub backend: String,
    pub payload: Vec<u8>,
}

fn malformed(what: &str) -> Error {
    Error::Format(format!("proof file: {what}"))
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if n > self.0.len() {
            return Err(malformed(&format!("truncated {what}")));
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }

    fn arr<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().unwrap())
    }
}

impl ProofBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.len() + 512);
        out.extend(MAGIC);
        out.extend(VERSION.to_le_bytes());
        let (kind, claim) = match self.claim {
            Claim::Inference { y } => (0u8, y),
            Claim::Accuracy { k } => (1u8, k),
        };
        out.push(kind);
        out.extend(claim.to_le_bytes());
        out.extend(self.model_cm);
        out.extend(self.aux_cm);
        let shape = self.shape.to_bytes();
        out.extend((shape.len() as u32).to_le_bytes());
        out.extend(shape);
        out.extend((self.challenges.len() as u16).to_le_bytes());
        for c in &self.challenges {
            out.extend(c.to_u256_le());
        }
        out.extend((self.backend.len() as u16).to_le_bytes());
        out.extend(self.backend.as_bytes());
        out.extend((self.payload.len() as u64).to_le_bytes());
        out.extend(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8], field: &'static PrimeField) -> Result<ProofBundle> {
        let mut c = Cursor(bytes);
        if c.take(4, "magic")? != MAGIC {
            return Err(malformed("bad magic"));
        }
        let version = u16::from_le_bytes(c.arr("version")?);
        if version != VERSION {
            return Err(malformed(&format!("unsupported version {version}")));
        }
        let kind = c.arr::<1>("kind")?[0];
        let value = u32::from_le_bytes(c.arr("claim")?);
        let claim = match kind {
            0 => Claim::Inference { y: value },
            1 => Claim::Accuracy { k: value },
            _ => return Err(malformed(&format!("unknown proof kind {kind}"))),
        };
        let model_cm = c.arr("model digest")?;
        let aux_cm = c.arr("aux digest")?;
        let n = u32::from_le_bytes(c.arr("shape length")?) as usize;
        let shape = ModelShape::from_bytes(c.take(n, "shape")?)?;
        let n = u16::from_le_bytes(c.arr("challenge count")?) as usize;
        let challenges = (0..n)
            .map(|_| field.from_bytes_le(&c.arr("challenge")?).ok_or_else(|| malformed("unreduced challenge")))
            .collect::<Result<Vec<_>>>()?;
        let n = u16::from_le_bytes(c.arr("backend length")?) as usize;
        let backend = String::from_utf8(c.take(n, "backend")?.to_vec()).map_err(|_| malformed("backend name"))?;
        let n = u64::from_le_bytes(c.arr("payload length")?);
        let n = usize::try_from(n).map_err(|_| malformed("payload length"))?;
        let payload = c.take(n, "payload")?.to_vec();
        if !c.0.is_empty() {
            return Err(malformed("trailing bytes"));
        }
        Ok(ProofBundle { claim, shape, model_cm, aux_cm, challenges, backend, payload })
    }
}
