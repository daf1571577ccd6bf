//! Q31.32 fixed point and the 20-fractional-bit exponent format.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::field::{Fe, PrimeField};
use crate::Error;

pub const FRAC_BITS: u32 = 32;
pub const EXP_FRAC_BITS: u32 = 20;
pub const ONE_RAW: i64 = 1 << FRAC_BITS;

/// Signed value `raw / 2^32`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fxp(pub i64);

impl Fxp {
    pub const ZERO: Fxp = Fxp(0);
    pub const ONE: Fxp = Fxp(ONE_RAW);

    pub fn from_raw(raw: i64) -> Fxp {
        Fxp(raw)
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    /// Rounds to the nearest multiple of 2^-32.
    pub fn encode(v: f64) -> Result<Fxp, Error> {
        if !v.is_finite() || v.abs() >= 2f64.powi(31) {
            return Err(Error::Range(format!("{v} is outside the Q31.32 range")));
        }
        let raw = (v * ONE_RAW as f64).round();
        // |v| < 2^31 still rounds to 2^63 at the very edge
        if raw >= 2f64.powi(63) || raw < -(2f64.powi(63)) {
            return Err(Error::Range(format!("{v} is outside the Q31.32 range")));
        }
        Ok(Fxp(raw as i64))
    }

    pub fn decode(self) -> f64 {
        self.0 as f64 / ONE_RAW as f64
    }

    pub fn from_int(v: i32) -> Fxp {
        Fxp((v as i64) << FRAC_BITS)
    }

    /// floor(a*b / 2^32).
    pub fn mul_rescale(self, rhs: Fxp) -> Result<Fxp, Error> {
        let wide = (self.0 as i128) * (rhs.0 as i128);
        rescale(wide, FRAC_BITS)
    }

    pub fn checked_add(self, rhs: Fxp) -> Option<Fxp> {
        self.0.checked_add(rhs.0).map(Fxp)
    }

    pub fn checked_sub(self, rhs: Fxp) -> Option<Fxp> {
        self.0.checked_sub(rhs.0).map(Fxp)
    }

    pub fn to_field(self, field: &'static PrimeField) -> Fe {
        field.from_i64(self.0)
    }

    /// Accepts only elements in [0, 2^63) or (p - 2^63, p).
    pub fn from_field(e: &Fe) -> Result<Fxp, Error> {
        e.to_i128()
            .and_then(|v| i64::try_from(v).ok())
            .filter(|v| *v != i64::MIN)
            .map(Fxp)
            .ok_or_else(|| Error::Range(format!("field element {e:?} is not an embedded Q31.32 value")))
    }
}

/// floor(v / 2^f), checked to fit in 64 bits.
pub fn rescale(v: i128, f: u32) -> Result<Fxp, Error> {
    let t = v >> f;
    i64::try_from(t)
        .ok()
        .filter(|t| *t != i64::MIN)
        .map(Fxp)
        .ok_or_else(|| Error::Overflow(format!("{v} >> {f} does not fit Q31.32")))
}

impl fmt::Display for Fxp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.decode())
    }
}

impl FromStr for Fxp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Fxp, Error> {
        s.trim()
            .parse::<i64>()
            .ok()
            .filter(|v| *v != i64::MIN)
            .map(Fxp)
            .ok_or_else(|| Error::Format(format!("not a raw Q31.32 integer: {s:?}")))
    }
}

// Files carry the raw value as a decimal string.
impl Serialize for Fxp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Fxp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Fxp, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Unsigned exponent with exactly 20 fractional bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExpFxp(pub u64);

impl ExpFxp {
    /// Drops excess fractional bits of a nonnegative value carrying `frac` of them.
    pub fn truncate_from(v: u128, frac: u32) -> Result<ExpFxp, Error> {
        let t = if frac >= EXP_FRAC_BITS {
            v >> (frac - EXP_FRAC_BITS)
        } else {
            v << (EXP_FRAC_BITS - frac)
        };
        u64::try_from(t)
            .map(ExpFxp)
            .map_err(|_| Error::Overflow(format!("exponent {v} >> {frac} exceeds 64 bits")))
    }

    pub fn encode(v: f64) -> Result<ExpFxp, Error> {
        if !v.is_finite() || v < 0.0 || v >= 2f64.powi(44) {
            return Err(Error::Range(format!("{v} is outside the exponent range")));
        }
        Ok(ExpFxp((v * (1u64 << EXP_FRAC_BITS) as f64).trunc() as u64))
    }

    pub fn decode(self) -> f64 {
        self.0 as f64 / (1u64 << EXP_FRAC_BITS) as f64
    }
}

const Q: u32 = 60;

fn q_mul(a: i128, b: i128) -> i128 {
    (a * b) >> Q
}

/// e^{-f} for f in [0, 1] given in Q60, by its alternating Taylor series.
fn exp_neg_unit(f: i128) -> i128 {
    let mut sum: i128 = 1 << Q;
    let mut term: i128 = 1 << Q;
    for i in 1..40 {
        term = -q_mul(term, f) / i;
        if term == 0 {
            break;
        }
        sum += term;
    }
    sum
}

/// round(2^32 * e^{-y}) with y = num / 2^frac, evaluated in integer arithmetic
/// so that exponent tables are identical on every platform.
pub fn exp_neg_q32(num: u128, frac: u32) -> i64 {
    let int = if frac >= 128 { 0 } else { num >> frac };
    if int >= 40 {
        return 0;
    }
    let rem = if frac >= 128 { num } else { num & ((1u128 << frac) - 1) };
    let f = if frac >= Q { (rem >> (frac - Q)) as i128 } else { (rem << (Q - frac)) as i128 };
    let mut r = exp_neg_unit(f);
    let e1 = exp_neg_unit(1 << Q);
    for _ in 0..int {
        r = q_mul(r, e1);
    }
    ((r + (1 << (Q - FRAC_BITS - 1))) >> (Q - FRAC_BITS)) as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(Fxp::encode(1.5).unwrap().raw(), 6442450944);
        assert_eq!(Fxp::encode(-0.25).unwrap().raw(), -1073741824);
        assert_eq!(Fxp::encode(0.0).unwrap().raw(), 0);
        assert!(Fxp::encode(2f64.powi(31)).is_err());
        assert!(Fxp::encode(f64::NAN).is_err());
    }

    #[test]
    fn mul_rescale_examples() {
        let e = |v| Fxp::encode(v).unwrap();
        assert_eq!(e(1.5).mul_rescale(e(2.0)).unwrap(), e(3.0));
        assert_eq!(e(0.5).mul_rescale(e(0.5)).unwrap(), e(0.25));
        let x = Fxp(-987654321);
        assert_eq!(x.mul_rescale(Fxp::ONE).unwrap(), x);
        // floor, not truncation toward zero
        assert_eq!(Fxp(-1).mul_rescale(Fxp(1)).unwrap(), Fxp(-1));
        assert!(Fxp(i64::MAX).mul_rescale(Fxp(i64::MAX)).is_err());
    }

    #[test]
    fn field_embedding() {
        let f = PrimeField::ristretto();
        let m1 = Fxp::encode(-1.0).unwrap().to_field(f);
        assert_eq!(m1.to_biguint(), f.modulus() - (1u64 << 32));
        assert!(Fxp::ZERO.to_field(f).is_zero());
        assert!(Fxp::from_field(&f.pow2(64)).is_err());
        assert!(Fxp::from_field(&-f.pow2(63)).is_err());
    }

    #[test]
    fn exponent_truncates() {
        // 1 + 2^-21 loses its last bit
        let v = ExpFxp::truncate_from((1u128 << 21) + 1, 21).unwrap();
        assert_eq!(v, ExpFxp(1 << 20));
        assert_eq!(ExpFxp::encode(1000.0).unwrap().0, 1000 << 20);
    }

    #[test]
    fn exp_neg_matches_libm() {
        for y in [0.0, 1e-9, 0.001, 0.5, 1.0, 2.75, 10.0, 22.0] {
            let num = (y * 2f64.powi(40)) as u128;
            let got = exp_neg_q32(num, 40) as f64 / 2f64.powi(32);
            assert!((got - (-y).exp()).abs() < 2f64.powi(-31), "y={y}");
        }
        assert_eq!(exp_neg_q32(0, 0), 1 << 32);
        assert_eq!(exp_neg_q32(45, 0), 0);
    }
}
