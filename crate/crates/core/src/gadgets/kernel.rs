//! Alternative SVM kernels: Laplace, sigmoid and polynomial.

use super::activation::tanh;
use super::{bin, exp, ge, gt, mul, record, trunc, ExpTable, GadgetResult};
use crate::fixed::{Fxp, FRAC_BITS};
use crate::r1cs::{ConstraintSystem, LinComb, Var};
use crate::{Error, Result};

/// Width of squared distances in Q64 (distance squared below 2^44).
pub const DIST_BITS: u32 = 108;
/// Exponent width for the Laplace kernel (distance below 2^22, 20 fractional bits).
pub const LAPLACE_EXP_BITS: u32 = 44;

/// Sum of k products in Q64, one constraint each.
pub fn dot(cs: &mut ConstraintSystem, a: &[LinComb], b: &[LinComb], label: &str) -> Result<LinComb> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("dot of {} and {} values", a.len(), b.len())));
    }
    let mut acc = LinComb::zero();
    for (x, y) in a.iter().zip(b) {
        let p = mul(cs, x, y, label)?;
        acc = acc + cs.lc(p);
    }
    Ok(acc)
}

/// Squared distance in Q64, one constraint per coordinate.
pub fn sq_dist(cs: &mut ConstraintSystem, a: &[LinComb], b: &[LinComb], label: &str) -> Result<LinComb> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("distance of {} and {} values", a.len(), b.len())));
    }
    let mut acc = LinComb::zero();
    for (x, y) in a.iter().zip(b) {
        let d = x.clone() - y.clone();
        let p = mul(cs, &d, &d, label)?;
        acc = acc + cs.lc(p);
    }
    Ok(acc)
}

/// Q31.32 product of a fixed-point constant and a Q31.32 value.
fn scale_q32(cs: &mut ConstraintSystem, x: &LinComb, c: Fxp, label: &str) -> Result<Var> {
    Ok(trunc(cs, &x.scale(cs.fe(c.raw() as i128)), 96, FRAC_BITS, true, label)?.output)
}

/// exp(-gamma ||a - b||). The norm is a prover-supplied r = floor(sqrt(D))
/// checked by r^2 <= D < (r + 1)^2.
pub fn laplace(
    cs: &mut ConstraintSystem,
    a: &[LinComb],
    b: &[LinComb],
    gamma: Fxp,
    label: &str,
) -> Result<GadgetResult<LinComb>> {
    let table = ExpTable::neg_exp(gamma, LAPLACE_EXP_BITS)?;
    record(cs, |cs| {
        let d = sq_dist(cs, a, b, label)?;
        let root = cs
            .eval_int(&d)?
            .map(|v| u128::try_from(v).map(|u| u.isqrt() as i128))
            .transpose()
            .map_err(|_| Error::Range(format!("{label}: negative squared distance")))?;
        let r = cs.alloc_int(root)?;
        let half = DIST_BITS / 2;
        bin(cs, &cs.lc(r), half, label)?;
        let rl = cs.lc(r);
        let r2 = mul(cs, &rl, &rl, label)?;
        let r2 = cs.lc(r2);
        ge(cs, &d, &r2, DIST_BITS, label)?;
        let next = r2 + LinComb::term(r, cs.fe(2)) + cs.constant(1);
        gt(cs, &next, &d, DIST_BITS, label)?;
        let e = trunc(cs, &cs.lc(r), half, FRAC_BITS - 20, false, label)?.output;
        Ok(exp(cs, &table, &cs.lc(e), label)?.output)
    })
}

/// tanh(slope * <a, b> - offset).
pub fn sigmoid(
    cs: &mut ConstraintSystem,
    a: &[LinComb],
    b: &[LinComb],
    slope: Fxp,
    offset: Fxp,
    label: &str,
) -> Result<GadgetResult<Var>> {
    record(cs, |cs| {
        let d = dot(cs, a, b, label)?;
        let d = trunc(cs, &d, 96, FRAC_BITS, true, label)?.output;
        let z = scale_q32(cs, &cs.lc(d), slope, label)?;
        let arg = cs.lc(z) - cs.constant(offset.raw() as i128);
        Ok(tanh(cs, &arg, label)?.output)
    })
}

/// (gamma <a, b> + coef0)^degree by repeated multiplication.
pub fn polynomial(
    cs: &mut ConstraintSystem,
    a: &[LinComb],
    b: &[LinComb],
    gamma: Fxp,
    coef0: Fxp,
    degree: u32,
    label: &str,
) -> Result<GadgetResult<LinComb>> {
    if degree == 0 {
        return Err(Error::Unsupported("polynomial kernel of degree 0".into()));
    }
    record(cs, |cs| {
        let d = dot(cs, a, b, label)?;
        let d = trunc(cs, &d, 96, FRAC_BITS, true, label)?.output;
        let dl = cs.lc(d);
        let g = scale_q32(cs, &dl, gamma, label)?;
        let base = cs.lc(g) + cs.constant(coef0.raw() as i128);
        let mut acc = base.clone();
        for _ in 1..degree {
            let p = mul(cs, &acc, &base, label)?;
            let pl = cs.lc(p);
            let t = trunc(cs, &pl, 96, FRAC_BITS, true, label)?.output;
            acc = cs.lc(t);
        }
        Ok(acc)
    })
}
