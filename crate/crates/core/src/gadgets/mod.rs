//! Constraint gadgets. Operands are linear combinations; each gadget reports
//! the witness variables and constraints it added.
//!
//! Closed-form constraint counts (fixed-point rescaling excluded, it is
//! labelled under `fxp.`):
//!
//! | gadget | constraints |
//! |---|---|
//! | `bin(n)` | n + 1 |
//! | `gt(n)`, `ge(n)` | 3n + 6 |
//! | `abs(n)` | 2n + 4 |
//! | `trunc(w)` | w + 2 |
//! | `perm(len)` | 2 len |
//! | `exp(n)` | 2n |
//! | `max(n, len)`, `min` | (3n + 6)(len - 1) + 2 len |
//! | `div(nq, nr)` | nq + 2 nr + 4 |

pub mod activation;
pub mod conv;
pub mod kernel;

use crate::field::Fe;
use crate::fixed::{exp_neg_q32, Fxp, EXP_FRAC_BITS, FRAC_BITS, ONE_RAW};
use crate::r1cs::{ConstraintSystem, LinComb, Var};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GadgetResult<T> {
    pub output: T,
    /// Witness variables introduced by the gadget, in allocation order.
    pub aux: Vec<Var>,
    pub constraints: usize,
}

pub(crate) fn record<T>(
    cs: &mut ConstraintSystem,
    f: impl FnOnce(&mut ConstraintSystem) -> Result<T>,
) -> Result<GadgetResult<T>> {
    let w0 = cs.num_witness();
    let c0 = cs.num_constraints();
    let output = f(cs)?;
    Ok(GadgetResult {
        output,
        aux: (w0..cs.num_witness()).map(|i| Var::Witness(i as u32)).collect(),
        constraints: cs.num_constraints() - c0,
    })
}

fn check_width(n: u32) -> Result<()> {
    if n == 0 || n > 127 {
        return Err(Error::Unsupported(format!("bit width {n} outside 1..=127")));
    }
    Ok(())
}

fn unsigned_value(cs: &ConstraintSystem, a: &LinComb, n: u32, label: &str) -> Result<Option<u128>> {
    match cs.eval(a) {
        None => Ok(None),
        Some(v) => v
            .to_u128()
            .filter(|u| n >= 128 || u >> n == 0)
            .map(Some)
            .ok_or_else(|| {
                Error::Range(format!("{label}: {} does not fit in {n} bits", v.to_signed_string()))
            }),
    }
}

/// Product of two combinations as a fresh variable (one constraint).
pub fn mul(cs: &mut ConstraintSystem, x: &LinComb, y: &LinComb, label: &str) -> Result<Var> {
    let v = cs.eval(x).zip(cs.eval(y)).map(|(a, b)| a * b);
    let p = cs.alloc_witness(v)?;
    cs.enforce(x.clone(), y.clone(), cs.lc(p), label)?;
    Ok(p)
}

/// Materializes a combination as a variable (one constraint).
pub fn materialize(cs: &mut ConstraintSystem, x: &LinComb, label: &str) -> Result<Var> {
    let v = cs.eval(x);
    let out = cs.alloc_witness(v)?;
    cs.enforce_eq(cs.lc(out), x.clone(), label)?;
    Ok(out)
}

/// Bits of `a` (least significant first), proving `0 <= a < 2^n`.
pub fn bin(cs: &mut ConstraintSystem, a: &LinComb, n: u32, label: &str) -> Result<GadgetResult<Vec<Var>>> {
    check_width(n)?;
    let f = cs.field();
    let val = unsigned_value(cs, a, n, label)?;
    record(cs, |cs| {
        let mut bits = Vec::with_capacity(n as usize);
        let mut sum = LinComb::zero();
        for i in 0..n {
            let b = cs.alloc_witness(val.map(|u| f.from_u64(((u >> i) & 1) as u64)))?;
            cs.enforce(cs.lc(b), cs.lc(b), cs.lc(b), label)?;
            sum.push(b, f.pow2(i));
            bits.push(b);
        }
        cs.enforce(sum, cs.lc(Var::One), a.clone(), label)?;
        Ok(bits)
    })
}

/// t = floor(u / 2^f). Unsigned operands must lie in [0, 2^w), signed ones
/// in [-2^(w-1), 2^(w-1)). Constraints are labelled `fxp.<label>`.
pub fn trunc(
    cs: &mut ConstraintSystem,
    u: &LinComb,
    w: u32,
    f: u32,
    signed: bool,
    label: &str,
) -> Result<GadgetResult<Var>> {
    if f >= w {
        return Err(Error::Unsupported(format!("cannot drop {f} of {w} bits")));
    }
    let label = format!("fxp.{label}");
    let field = cs.field();
    let offset: i128 = if signed { 1 << (w - 1) } else { 0 };
    let shifted = u.clone() + cs.constant(offset);
    let t_val = cs.eval_int(u)?.map(|v| v >> f);
    record(cs, |cs| {
        let bits = bin(cs, &shifted, w, &label)?.output;
        let t = cs.alloc_int(t_val)?;
        let mut hi = LinComb::zero();
        for (i, b) in bits.iter().enumerate().skip(f as usize) {
            hi.push(*b, field.pow2(i as u32 - f));
        }
        let hi = hi - cs.constant(offset >> f);
        cs.enforce_eq(cs.lc(t), hi, &label)?;
        Ok(t)
    })
}

fn compare(
    cs: &mut ConstraintSystem,
    a: &LinComb,
    b: &LinComb,
    n: u32,
    strict: bool,
    materialize_c: bool,
    label: &str,
) -> Result<GadgetResult<()>> {
    check_width(n + 1)?;
    record(cs, |cs| {
        bin(cs, a, n, label)?;
        bin(cs, b, n, label)?;
        let c_lc = a.clone() - b.clone() + cs.constant((1i128 << n) - strict as i128);
        let c = if materialize_c {
            let v = materialize(cs, &c_lc, label)?;
            cs.lc(v)
        } else {
            c_lc
        };
        let bits = bin(cs, &c, n + 1, label)?.output;
        cs.enforce(cs.lc(bits[n as usize]), cs.lc(Var::One), cs.lc(Var::One), label)?;
        Ok(())
    })
}

/// a > b for a, b in [0, 2^n): c = 2^n + a - b - 1 must have its top bit set.
/// Signed operands are shifted by 2^(n-1) by the caller.
pub fn gt(cs: &mut ConstraintSystem, a: &LinComb, b: &LinComb, n: u32, label: &str) -> Result<GadgetResult<()>> {
    compare(cs, a, b, n, true, true, label)
}

/// a >= b for a, b in [0, 2^n): c = 2^n + a - b.
pub fn ge(cs: &mut ConstraintSystem, a: &LinComb, b: &LinComb, n: u32, label: &str) -> Result<GadgetResult<()>> {
    compare(cs, a, b, n, false, true, label)
}

/// `ge` with c left as a linear combination (3n + 5 constraints).
pub fn ge_inline(cs: &mut ConstraintSystem, a: &LinComb, b: &LinComb, n: u32, label: &str) -> Result<GadgetResult<()>> {
    compare(cs, a, b, n, false, false, label)
}

/// |a| for |a| < 2^n. Output is (|a|, s) with s = 1 iff a >= 0.
///
/// The magnitude is bit-decomposed rather than `a` itself, and s is the top
/// bit of c = a + 2^n. The closing constraint `2s * a' = a + a'` is the
/// two-case sign condition written as one product.
pub fn abs(cs: &mut ConstraintSystem, a: &LinComb, n: u32, label: &str) -> Result<GadgetResult<(Var, Var)>> {
    check_width(n + 1)?;
    let mag = cs.eval_int(a)?.map(|v| v.abs());
    record(cs, |cs| {
        let ap = cs.alloc_int(mag)?;
        bin(cs, &cs.lc(ap), n, label)?;
        let c = a.clone() + cs.constant(1 << n);
        let s = bin(cs, &c, n + 1, label)?.output[n as usize];
        let two_s = LinComb::term(s, cs.fe(2));
        cs.enforce(two_s, cs.lc(ap), a.clone() + cs.lc(ap), label)?;
        Ok((ap, s))
    })
}

/// Multiset equality of `v` and `w` through the characteristic polynomial
/// at `alpha`: two product chains (2 len - 1 products) and one equality.
pub fn perm(
    cs: &mut ConstraintSystem,
    v: &[LinComb],
    w: &[LinComb],
    alpha: Fe,
    label: &str,
) -> Result<GadgetResult<()>> {
    if v.len() != w.len() {
        return Err(Error::Dimension(format!("perm over {} and {} values", v.len(), w.len())));
    }
    record(cs, |cs| {
        if v.is_empty() {
            return Ok(());
        }
        let a = LinComb::constant(alpha);
        let l0 = materialize(cs, &(v[0].clone() - a.clone()), label)?;
        let mut l = cs.lc(l0);
        for vi in &v[1..] {
            let p = mul(cs, &l, &(vi.clone() - a.clone()), label)?;
            l = cs.lc(p);
        }
        let mut r = w[0].clone() - a.clone();
        for wi in &w[1..] {
            let p = mul(cs, &r, &(wi.clone() - a.clone()), label)?;
            r = cs.lc(p);
        }
        cs.enforce_eq(l, r, label)?;
        Ok(())
    })
}

fn extremum(
    cs: &mut ConstraintSystem,
    arr: &[LinComb],
    n: u32,
    alpha: Fe,
    order: Option<&[usize]>,
    is_max: bool,
    label: &str,
) -> Result<GadgetResult<Var>> {
    if arr.is_empty() {
        return Err(Error::Dimension("max/min of an empty array".into()));
    }
    let vals: Option<Vec<Fe>> = arr.iter().map(|x| cs.eval(x)).collect();
    let order: Vec<usize> = match (order, &vals) {
        (Some(o), _) => {
            let mut seen = vec![false; arr.len()];
            if o.len() != arr.len() || o.iter().any(|&i| i >= arr.len() || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::Dimension("ordering is not a permutation".into()));
            }
            o.to_vec()
        }
        (None, Some(vs)) => {
            let ints: Vec<u128> = vs.iter().map(|v| v.to_u128().unwrap_or(u128::MAX)).collect();
            let mut best = 0;
            for (i, x) in ints.iter().enumerate() {
                if (is_max && *x > ints[best]) || (!is_max && *x < ints[best]) {
                    best = i;
                }
            }
            std::iter::once(best).chain((0..arr.len()).filter(|&i| i != best)).collect()
        }
        (None, None) => (0..arr.len()).collect(),
    };
    record(cs, |cs| {
        let mut permuted = Vec::with_capacity(arr.len());
        for &i in &order {
            permuted.push(cs.alloc_witness(vals.as_ref().map(|vs| vs[i]))?);
        }
        let head = cs.lc(permuted[0]);
        for p in &permuted[1..] {
            if is_max {
                ge(cs, &head, &cs.lc(*p), n, label)?;
            } else {
                ge(cs, &cs.lc(*p), &head, n, label)?;
            }
        }
        let plc: Vec<LinComb> = permuted.iter().map(|p| cs.lc(*p)).collect();
        perm(cs, arr, &plc, alpha, label)?;
        Ok(permuted[0])
    })
}

/// Maximum of nonnegative n-bit values. The prover places the maximum first
/// in a permuted copy (`order`, honest when `None`); ties are allowed.
pub fn max(
    cs: &mut ConstraintSystem,
    arr: &[LinComb],
    n: u32,
    alpha: Fe,
    order: Option<&[usize]>,
    label: &str,
) -> Result<GadgetResult<Var>> {
    extremum(cs, arr, n, alpha, order, true, label)
}

pub fn min(
    cs: &mut ConstraintSystem,
    arr: &[LinComb],
    n: u32,
    alpha: Fe,
    order: Option<&[usize]>,
    label: &str,
) -> Result<GadgetResult<Var>> {
    extremum(cs, arr, n, alpha, order, false, label)
}

/// q = floor(num / den) for num in [0, 2^nq * den) and den in [1, 2^nr].
pub fn div(
    cs: &mut ConstraintSystem,
    num: &LinComb,
    den: &LinComb,
    nq: u32,
    nr: u32,
    label: &str,
) -> Result<GadgetResult<Var>> {
    let vals = match (cs.eval_int(num)?, cs.eval_int(den)?) {
        (Some(a), Some(d)) => {
            if d <= 0 || a < 0 {
                return Err(Error::Range(format!("{label}: division {a} / {d}")));
            }
            (Some(a / d), Some(a % d))
        }
        _ => (None, None),
    };
    record(cs, |cs| {
        let q = cs.alloc_int(vals.0)?;
        let r = cs.alloc_int(vals.1)?;
        cs.enforce(cs.lc(q), den.clone(), num.clone() - cs.lc(r), label)?;
        bin(cs, &cs.lc(r), nr, label)?;
        bin(cs, &(den.clone() - cs.lc(r) - cs.constant(1)), nr, label)?;
        bin(cs, &cs.lc(q), nq, label)?;
        Ok(q)
    })
}

/// Public factors a^(2^(j - frac)) in Q31.32 for each exponent bit j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpTable {
    frac: u32,
    factors: Vec<i64>,
}

impl ExpTable {
    /// Base e^(-lambda) over exponents with 20 fractional bits.
    pub fn neg_exp(lambda: Fxp, n: u32) -> Result<ExpTable> {
        if lambda.raw() < 0 {
            return Err(Error::Range(format!("negative exponent scale {lambda}")));
        }
        if n == 0 || n > 64 {
            return Err(Error::Unsupported(format!("exponent width {n}")));
        }
        let factors = (0..n)
            .map(|j| exp_neg_q32((lambda.raw() as u128) << j, FRAC_BITS + EXP_FRAC_BITS))
            .collect();
        Ok(ExpTable { frac: EXP_FRAC_BITS, factors })
    }

    /// Integer base over integer exponents.
    pub fn from_base(a: i64, n: u32) -> Result<ExpTable> {
        if n == 0 || n > 64 {
            return Err(Error::Unsupported(format!("exponent width {n}")));
        }
        let mut factors = Vec::with_capacity(n as usize);
        let mut p = a as i128;
        for j in 0..n {
            let raw = p
                .checked_mul(ONE_RAW as i128)
                .and_then(|v| i64::try_from(v).ok())
                .ok_or_else(|| Error::Overflow(format!("{a}^(2^{j}) exceeds Q31.32")))?;
            factors.push(raw);
            if j + 1 < n {
                p = p.checked_mul(p).unwrap_or(i128::MAX);
            }
        }
        Ok(ExpTable { frac: 0, factors })
    }

    pub fn bits(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac
    }

    pub fn factors(&self) -> &[i64] {
        &self.factors
    }

    fn exact(&self, j: usize) -> bool {
        self.factors[j] % ONE_RAW == 0
    }

    /// The product chain on an exponent, step for step as the gadget does it.
    pub fn eval(&self, e: u128) -> Result<i64> {
        if e >> self.bits() != 0 {
            return Err(Error::Range(format!("exponent {e} exceeds {} bits", self.bits())));
        }
        let pick = |j: usize| if (e >> j) & 1 == 1 { self.factors[j] as i128 } else { ONE_RAW as i128 };
        let mut acc = pick(0);
        for j in 1..self.factors.len() {
            acc = if self.exact(j) {
                acc.checked_mul(pick(j) / ONE_RAW as i128)
            } else {
                acc.checked_mul(pick(j)).map(|p| p >> FRAC_BITS)
            }
            .filter(|v| i64::try_from(*v).is_ok())
            .ok_or_else(|| Error::Overflow("exponent product chain".into()))?;
        }
        Ok(acc as i64)
    }
}

/// b = a^x with x decomposed into `table.bits()` bits.
pub fn exp(cs: &mut ConstraintSystem, table: &ExpTable, x: &LinComb, label: &str) -> Result<GadgetResult<LinComb>> {
    let one = ONE_RAW as i128;
    if let Some(e) = cs.eval_int(x)? {
        if e < 0 {
            return Err(Error::Range(format!("{label}: negative exponent")));
        }
        table.eval(e as u128)?;
    }
    record(cs, |cs| {
        let bits = bin(cs, x, table.bits(), label)?.output;
        // one + (A_j - one) * v_j
        let factor = |cs: &ConstraintSystem, j: usize, scale: i128| {
            cs.constant(one / scale).with(bits[j], cs.fe((table.factors[j] as i128 - one) / scale))
        };
        let mut acc = factor(cs, 0, 1);
        for j in 1..bits.len() {
            if table.exact(j) {
                let fj = factor(cs, j, one);
                let p = mul(cs, &acc, &fj, label)?;
                acc = cs.lc(p);
            } else {
                let fj = factor(cs, j, 1);
                let p = mul(cs, &acc, &fj, label)?;
                let pl = cs.lc(p);
                let t = trunc(cs, &pl, 65, FRAC_BITS, false, label)?.output;
                acc = cs.lc(t);
            }
        }
        Ok(acc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use proptest::prelude::*;

    fn f() -> &'static PrimeField {
        PrimeField::ristretto()
    }

    fn cs() -> ConstraintSystem {
        ConstraintSystem::new_proving(f())
    }

    fn input(cs: &mut ConstraintSystem, v: i128) -> LinComb {
        let x = cs.alloc_int(Some(v)).unwrap();
        cs.lc(x)
    }

    fn ok(cs: &ConstraintSystem) -> bool {
        cs.check().unwrap().is_satisfied()
    }

    #[test]
    fn bin_examples() {
        let mut c = cs();
        let a = input(&mut c, 5);
        let r = bin(&mut c, &a, 3, "b").unwrap();
        let bits: Vec<_> = r.output.iter().map(|v| c.value(*v).unwrap().to_u128().unwrap()).collect();
        assert_eq!(bits, [1, 0, 1]);
        assert_eq!(r.constraints, 4);
        assert!(ok(&c));
        let mut c = cs();
        let a = input(&mut c, 0);
        assert_eq!(bin(&mut c, &a, 4, "b").unwrap().output.len(), 4);
        let mut c = cs();
        let a = input(&mut c, 9);
        assert!(matches!(bin(&mut c, &a, 3, "b"), Err(Error::Range(_))));
    }

    #[test]
    fn gt_examples() {
        let mut c = cs();
        let (a, b) = (input(&mut c, 7), input(&mut c, 3));
        assert_eq!(gt(&mut c, &a, &b, 3, "gt").unwrap().constraints, 3 * 3 + 6);
        assert!(ok(&c));
        let mut c = cs();
        let (a, b) = (input(&mut c, 3), input(&mut c, 7));
        gt(&mut c, &a, &b, 3, "gt").unwrap();
        assert!(!ok(&c));
        let mut c = cs();
        let (a, b) = (input(&mut c, 4), input(&mut c, 4));
        gt(&mut c, &a, &b, 3, "gt").unwrap();
        assert!(!ok(&c));
        let mut c = cs();
        let (a, b) = (input(&mut c, 4), input(&mut c, 4));
        ge(&mut c, &a, &b, 3, "ge").unwrap();
        assert!(ok(&c));
    }

    #[test]
    fn abs_examples() {
        for (a, ap, good) in [(-4, 4, true), (4, 4, true), (-4, 3, false), (0, 0, true)] {
            let mut c = cs();
            let x = input(&mut c, a);
            let r = abs(&mut c, &x, 8, "abs").unwrap();
            assert_eq!(r.constraints, 2 * 8 + 4);
            let (out, _) = r.output;
            let mut z = c.assignment().unwrap();
            let Var::Witness(i) = out else { unreachable!() };
            z.witness[i as usize] = f().from_i64(ap);
            assert_eq!(c.is_satisfied(&z).unwrap().is_satisfied(), good, "a={a} a'={ap}");
        }
    }

    #[test]
    fn trunc_examples() {
        let mut c = cs();
        let u = input(&mut c, (3i128 << 32) + 5);
        let t = trunc(&mut c, &u, 40, 32, false, "t").unwrap();
        assert_eq!(t.constraints, 42);
        assert_eq!(c.value(t.output).unwrap().to_i128(), Some(3));
        assert!(ok(&c));
        assert_eq!(c.counts().prefix("fxp.t"), 42);
        let mut c = cs();
        let u = input(&mut c, -((3i128 << 32) + 5));
        let t = trunc(&mut c, &u, 40, 32, true, "t").unwrap();
        assert_eq!(c.value(t.output).unwrap().to_i128(), Some(-4));
        assert!(ok(&c));
    }

    #[test]
    fn perm_examples() {
        let alpha = f().from_u64(0xdead_beef);
        let run = |v: &[i128], w: &[i128]| {
            let mut c = cs();
            let a: Vec<_> = v.iter().map(|x| input(&mut c, *x)).collect();
            let b: Vec<_> = w.iter().map(|x| input(&mut c, *x)).collect();
            let r = perm(&mut c, &a, &b, alpha, "p").unwrap();
            assert_eq!(r.constraints, 2 * v.len());
            ok(&c)
        };
        assert!(run(&[5, 7], &[5, 7]));
        assert!(run(&[1, 2, 3], &[3, 1, 2]));
        assert!(!run(&[1, 2, 3], &[1, 2, 4]));
        let mut c = cs();
        let a = vec![input(&mut c, 1)];
        assert!(perm(&mut c, &a, &[], alpha, "p").is_err());
    }

    #[test]
    fn max_examples() {
        let alpha = f().from_u64(77);
        let mut c = cs();
        let arr: Vec<_> = [3, 9, 2].iter().map(|x| input(&mut c, *x)).collect();
        let r = max(&mut c, &arr, 8, alpha, None, "max").unwrap();
        assert_eq!(c.value(r.output).unwrap().to_i128(), Some(9));
        assert_eq!(r.constraints, (3 * 8 + 6) * 2 + 2 * 3);
        assert!(ok(&c));
        let mut c = cs();
        let arr: Vec<_> = [3, 9, 2].iter().map(|x| input(&mut c, *x)).collect();
        max(&mut c, &arr, 8, alpha, Some(&[0, 1, 2]), "max").unwrap();
        assert!(!ok(&c));
        let mut c = cs();
        let arr: Vec<_> = [3, 9, 2].iter().map(|x| input(&mut c, *x)).collect();
        let r = min(&mut c, &arr, 8, alpha, None, "min").unwrap();
        assert_eq!(c.value(r.output).unwrap().to_i128(), Some(2));
        assert!(ok(&c));
        let mut c = cs();
        assert!(max(&mut c, &[], 8, alpha, None, "max").is_err());
    }

    #[test]
    fn div_floor() {
        let mut c = cs();
        let (a, d) = (input(&mut c, 47), input(&mut c, 5));
        let r = div(&mut c, &a, &d, 8, 8, "d").unwrap();
        assert_eq!(c.value(r.output).unwrap().to_i128(), Some(9));
        assert_eq!(r.constraints, 8 + 2 * 8 + 4);
        assert!(ok(&c));
    }

    #[test]
    fn exp_examples() {
        let table = ExpTable::from_base(2, 3).unwrap();
        let mut c = cs();
        let x = input(&mut c, 5);
        let r = exp(&mut c, &table, &x, "exp").unwrap();
        assert_eq!(r.constraints, 6);
        assert_eq!(c.eval(&r.output).unwrap().to_i128(), Some(32 << 32));
        assert!(ok(&c));

        let table = ExpTable::neg_exp(Fxp::encode(0.001).unwrap(), 40).unwrap();
        let mut c = cs();
        let x = input(&mut c, 0);
        let r = exp(&mut c, &table, &x, "exp").unwrap();
        assert_eq!(c.eval(&r.output).unwrap().to_i128(), Some(ONE_RAW as i128));
        assert!(ok(&c));
        assert_eq!(c.counts().prefix("exp"), 80);

        let mut c = cs();
        let x = input(&mut c, 1000 << 20);
        let r = exp(&mut c, &table, &x, "exp").unwrap();
        let got = c.eval(&r.output).unwrap().to_i128().unwrap() as f64 / ONE_RAW as f64;
        assert!((got - (-1f64).exp()).abs() < 2f64.powi(-16));
        assert!(ok(&c));
        assert_eq!(table.eval(1000 << 20).unwrap() as i128, c.eval(&r.output).unwrap().to_i128().unwrap());
    }

    #[test]
    fn exp_rejects_overflow() {
        let table = ExpTable::from_base(2, 3).unwrap();
        assert!(table.eval(8).is_err());
        assert!(ExpTable::from_base(3, 8).is_err());
    }

    #[test]
    fn shape_mode_matches_counts() {
        let mut p = cs();
        let mut s = ConstraintSystem::new_shape(f());
        let a = input(&mut p, 100);
        let sa = s.alloc_int(None).unwrap();
        let ta = ExpTable::neg_exp(Fxp::ONE, 16).unwrap();
        exp(&mut p, &ta, &a, "e").unwrap();
        let sl = s.lc(sa);
        exp(&mut s, &ta, &sl, "e").unwrap();
        assert_eq!(p.counts(), s.counts());
        assert_eq!(p.num_witness(), s.num_witness());
    }

    proptest! {
        #[test]
        fn trunc_matches_division(u in -(1i128 << 90)..(1i128 << 90), f_bits in 0u32..64) {
            let mut c = cs();
            let x = input(&mut c, u);
            let t = trunc(&mut c, &x, 96, f_bits, true, "t").unwrap();
            prop_assert_eq!(c.value(t.output).unwrap().to_i128(), Some(u.div_euclid(1i128 << f_bits)));
            prop_assert!(ok(&c));
        }

        #[test]
        fn bin_rejects_single_bit_flip(a in 0u64..(1 << 20), i in 0usize..21) {
            let mut c = cs();
            let x = input(&mut c, a as i128);
            let bits = bin(&mut c, &x, 21, "b").unwrap().output;
            let mut z = c.assignment().unwrap();
            let Var::Witness(w) = bits[i] else { unreachable!() };
            z.witness[w as usize] += f().one();
            prop_assert!(!c.is_satisfied(&z).unwrap().is_satisfied());
        }
    }
}
