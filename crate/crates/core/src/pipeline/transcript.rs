//! Fiat–Shamir transcript over merlin.

use num_bigint::BigUint;

use crate::field::{Fe, PrimeField};

pub struct Transcript {
    inner: merlin::Transcript,
    field: &'static PrimeField,
}

impl Transcript {
    pub fn new(domain: &'static [u8], field: &'static PrimeField) -> Transcript {
        Transcript { inner: merlin::Transcript::new(domain), field }
    }

    pub fn absorb(&mut self, label: &'static [u8], bytes: &[u8]) {
        self.inner.append_message(label, bytes);
    }

    /// 512 bits of transcript output reduced mod p, so the bias is negligible.
    pub fn challenge(&mut self, label: &'static [u8]) -> Fe {
        let mut buf = [0u8; 64];
        self.inner.challenge_bytes(label, &mut buf);
        self.field.from_biguint(&BigUint::from_bytes_le(&buf))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_deterministic() {
        let f = PrimeField::ristretto();
        let run = |msg: &[u8]| {
            let mut t = Transcript::new(b"test", f);
            t.absorb(b"m", msg);
            (t.challenge(b"a"), t.challenge(b"b"))
        };
        assert_eq!(run(b"hello"), run(b"hello"));
        assert_ne!(run(b"hello"), run(b"hellp"));
        let (a, b) = run(b"hello");
        assert_ne!(a, b);
    }
}
