//! Prime-field scalars with a modulus chosen at construction time.
//!
//! Arithmetic is Montgomery-form over four 64-bit limbs. A [`PrimeField`] is
//! interned for the life of the process so elements can stay `Copy` and carry
//! a plain reference to their field.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use crypto_bigint::modular::runtime_mod::{DynResidue, DynResidueParams};
use crypto_bigint::{Encoding, U256};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::Error;

/// Order of the prime-order ristretto255 group: 2^252 + 27742317777372353535851937790883648493.
pub const RISTRETTO_ORDER: &str =
    "7237005577332262213973186563042994240857116359379907606001950938285454250989";

const MIN_BITS: u64 = 192;
const MAX_BITS: u64 = 255;

pub struct PrimeField {
    modulus: BigUint,
    params: DynResidueParams<4>,
    bits: u32,
}

static REGISTRY: Mutex<Vec<&'static PrimeField>> = Mutex::new(Vec::new());

impl PrimeField {
    /// Interns the field for `modulus`. The modulus must be an odd prime of
    /// 192..=255 bits so that every fixed-point intermediate embeds without
    /// wrap-around.
    pub fn new(modulus: &BigUint) -> Result<&'static PrimeField, Error> {
        let bits = modulus.bits();
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::Modulus(format!(
                "modulus has {bits} bits, need {MIN_BITS}..={MAX_BITS}"
            )));
        }
        if !is_probable_prime(modulus) {
            return Err(Error::Modulus("modulus is not prime".into()));
        }
        let mut reg = REGISTRY.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(f) = reg.iter().find(|f| &f.modulus == modulus) {
            return Ok(f);
        }
        let p = to_u256(modulus);
        let field: &'static PrimeField = Box::leak(Box::new(PrimeField {
            modulus: modulus.clone(),
            params: DynResidueParams::new(&p),
            bits: bits as u32,
        }));
        reg.push(field);
        Ok(field)
    }

    pub fn from_decimal(s: &str) -> Result<&'static PrimeField, Error> {
        let m = BigUint::parse_bytes(s.trim().as_bytes(), 10)
            .ok_or_else(|| Error::Modulus(format!("not a decimal integer: {s:?}")))?;
        Self::new(&m)
    }

    /// The default field.
    pub fn ristretto() -> &'static PrimeField {
        static F: OnceLock<&'static PrimeField> = OnceLock::new();
        F.get_or_init(|| PrimeField::from_decimal(RISTRETTO_ORDER).expect("ristretto order is prime"))
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn zero(&'static self) -> Fe {
        Fe { mont: U256::ZERO, field: self }
    }

    pub fn one(&'static self) -> Fe {
        Fe::from_residue(DynResidue::one(self.params), self)
    }

    pub fn from_u64(&'static self, v: u64) -> Fe {
        self.from_u256(&U256::from_u64(v))
    }

    pub fn from_u128(&'static self, v: u128) -> Fe {
        self.from_u256(&U256::from_u128(v))
    }

    pub fn from_i64(&'static self, v: i64) -> Fe {
        self.from_i128(v as i128)
    }

    /// Signed embedding: negative `v` maps to `p - |v|`.
    pub fn from_i128(&'static self, v: i128) -> Fe {
        let mag = self.from_u128(v.unsigned_abs());
        if v < 0 {
            -mag
        } else {
            mag
        }
    }

    /// Reduces an arbitrary integer mod p.
    pub fn from_biguint(&'static self, v: &BigUint) -> Fe {
        let r = v % &self.modulus;
        self.from_u256(&to_u256(&r))
    }

    /// 2^k as a field element.
    pub fn pow2(&'static self, k: u32) -> Fe {
        if k < 128 {
            return self.from_u128(1u128 << k);
        }
        self.from_biguint(&(BigUint::one() << k))
    }

    /// Canonical 32-byte little-endian decoding; values >= p are rejected.
    pub fn from_bytes_le(&'static self, bytes: &[u8; 32]) -> Option<Fe> {
        let v = BigUint::from_bytes_le(bytes);
        if v >= self.modulus {
            return None;
        }
        Some(self.from_u256(&U256::from_le_slice(bytes)))
    }

    fn from_u256(&'static self, v: &U256) -> Fe {
        Fe::from_residue(DynResidue::new(v, self.params), self)
    }
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimeField({})", self.modulus)
    }
}

impl PartialEq for PrimeField {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
    }
}

impl Eq for PrimeField {}

fn to_u256(v: &BigUint) -> U256 {
    let mut bytes = v.to_bytes_le();
    bytes.resize(32, 0);
    U256::from_le_slice(&bytes)
}

/// Miller-Rabin with the first 32 primes as bases.
fn is_probable_prime(n: &BigUint) -> bool {
    const BASES: [u32; 32] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83,
        89, 97, 101, 103, 107, 109, 113, 127, 131,
    ];
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for b in BASES {
        let b = BigUint::from(b);
        if n == &b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'outer: for b in BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// An element of a [`PrimeField`], always held in canonical form.
#[derive(Clone, Copy)]
pub struct Fe {
    mont: U256,
    field: &'static PrimeField,
}

impl Fe {
    fn from_residue(r: DynResidue<4>, field: &'static PrimeField) -> Fe {
        Fe { mont: *r.as_montgomery(), field }
    }

    fn residue(&self) -> DynResidue<4> {
        DynResidue::from_montgomery(self.mont, self.field.params)
    }

    pub fn field(&self) -> &'static PrimeField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.mont == U256::ZERO
    }

    pub fn inv(&self) -> Result<Fe, Error> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (r, _) = self.residue().invert();
        Ok(Fe::from_residue(r, self.field))
    }

    pub fn pow(&self, e: u64) -> Fe {
        let r = self.residue().pow(&U256::from_u64(e));
        Fe::from_residue(r, self.field)
    }

    pub fn square(&self) -> Fe {
        Fe::from_residue(self.residue().square(), self.field)
    }

    pub fn to_u256_le(&self) -> [u8; 32] {
        self.residue().retrieve().to_le_bytes()
    }

    pub fn to_biguint(&self) -> BigUint {
        BigUint::from_bytes_le(&self.to_u256_le())
    }

    /// The value as an unsigned integer when it is below 2^128.
    pub fn to_u128(&self) -> Option<u128> {
        let w = self.residue().retrieve().to_words();
        if w[2] != 0 || w[3] != 0 {
            return None;
        }
        Some(w[0] as u128 | (w[1] as u128) << 64)
    }

    /// Inverse of the signed embedding, for values in (-2^127, 2^127).
    pub fn to_i128(&self) -> Option<i128> {
        if let Some(v) = self.to_u128() {
            return i128::try_from(v).ok();
        }
        let neg = (-*self).to_u128()?;
        if neg <= i128::MAX as u128 {
            Some(-(neg as i128))
        } else {
            None
        }
    }

    /// Signed rendering: values above p/2 print as negatives.
    pub fn to_signed_string(&self) -> String {
        let v = self.to_biguint();
        let half = self.field.modulus() >> 1u32;
        if v > half {
            format!("-{}", self.field.modulus() - v)
        } else {
            v.to_string()
        }
    }

    pub fn to_f64_lossy(&self) -> f64 {
        match self.to_i128() {
            Some(v) => v as f64,
            None => self.to_biguint().to_f64().unwrap_or(f64::NAN),
        }
    }

    fn check(&self, other: &Fe) {
        assert!(std::ptr::eq(self.field, other.field), "mixing elements of different fields");
    }
}

impl PartialEq for Fe {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.field, other.field) && self.mont == other.mont
    }
}

impl Eq for Fe {}

impl std::hash::Hash for Fe {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.mont.as_words().hash(state);
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fe({})", self.to_signed_string())
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

impl Add for Fe {
    type Output = Fe;
    fn add(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        Fe::from_residue(self.residue().add(&rhs.residue()), self.field)
    }
}

impl Sub for Fe {
    type Output = Fe;
    fn sub(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        Fe::from_residue(self.residue().sub(&rhs.residue()), self.field)
    }
}

impl Mul for Fe {
    type Output = Fe;
    fn mul(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        Fe::from_residue(self.residue().mul(&rhs.residue()), self.field)
    }
}

impl Neg for Fe {
    type Output = Fe;
    fn neg(self) -> Fe {
        Fe::from_residue(self.residue().neg(), self.field)
    }
}

impl AddAssign for Fe {
    fn add_assign(&mut self, rhs: Fe) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fe {
    fn sub_assign(&mut self, rhs: Fe) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fe {
    fn mul_assign(&mut self, rhs: Fe) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Fe {
    fn sum<I: Iterator<Item = Fe>>(mut iter: I) -> Fe {
        let first = iter.next().expect("sum of an empty iterator has no field");
        iter.fold(first, |a, b| a + b)
    }
}
