//! Activation functions over Q31.32 operands.

use super::{abs, div, exp, max, mul, record, trunc, ExpTable, GadgetResult};
use crate::field::Fe;
use crate::fixed::{Fxp, FRAC_BITS, ONE_RAW};
use crate::r1cs::{ConstraintSystem, LinComb};
use crate::Result;

/// Exponent width for e^(-c |x|) with |x| < 2^31: |x| carries 20 fractional
/// bits after truncation.
pub const ACT_EXP_BITS: u32 = 51;

const SHIFT: i128 = 1 << 63;

/// round(0.01 * 2^32)
pub const LEAKY_SLOPE_RAW: i64 = 42949673;

/// (|x|, sign, e^(-scale |x|)) in Q31.32.
fn decay(
    cs: &mut ConstraintSystem,
    x: &LinComb,
    scale: Fxp,
    label: &str,
) -> Result<(crate::r1cs::Var, LinComb)> {
    let (mag, s) = abs(cs, x, 63, label)?.output;
    let e = trunc(cs, &cs.lc(mag), 63, FRAC_BITS - 20, false, label)?.output;
    let table = ExpTable::neg_exp(scale, ACT_EXP_BITS)?;
    let big_e = exp(cs, &table, &cs.lc(e), label)?.output;
    Ok((s, big_e))
}

/// tanh(x) = sign(x) (1 - E) / (1 + E) with E = e^(-2|x|).
pub fn tanh(cs: &mut ConstraintSystem, x: &LinComb, label: &str) -> Result<GadgetResult<crate::r1cs::Var>> {
    record(cs, |cs| {
        let (s, e) = decay(cs, x, Fxp::from_int(2), label)?;
        let one = cs.constant(ONE_RAW as i128);
        let num = (one.clone() - e.clone()).scale(cs.fe(ONE_RAW as i128));
        let q = div(cs, &num, &(one + e), 33, 34, label)?.output;
        let sign = LinComb::term(s, cs.fe(2)) - cs.constant(1);
        mul(cs, &sign, &cs.lc(q), label)
    })
}

/// 1 / (1 + e^(-x)), using 1 - 1/(1 + e^(-|x|)) for negative x.
pub fn sigmoid(cs: &mut ConstraintSystem, x: &LinComb, label: &str) -> Result<GadgetResult<crate::r1cs::Var>> {
    record(cs, |cs| {
        let (s, e) = decay(cs, x, Fxp::ONE, label)?;
        let num = cs.constant(1i128 << 64);
        let q = div(cs, &num, &(cs.constant(ONE_RAW as i128) + e), 33, 34, label)?.output;
        let one = ONE_RAW as i128;
        let val = cs.eval_int(&cs.lc(s))?.zip(cs.eval_int(&cs.lc(q))?).map(|(s, q)| if s == 1 { q } else { one - q });
        let out = cs.alloc_int(val)?;
        // s (2q - 1) = out - 1 + q
        cs.enforce(
            cs.lc(s),
            LinComb::term(q, cs.fe(2)) - cs.constant(one),
            cs.lc(out) - cs.constant(one) + cs.lc(q),
            label,
        )?;
        Ok(out)
    })
}

fn shifted_max(cs: &mut ConstraintSystem, xs: &[LinComb], alpha: Fe, label: &str) -> Result<LinComb> {
    let sh: Vec<LinComb> = xs.iter().map(|x| x.clone() + cs.constant(SHIFT)).collect();
    let m = max(cs, &sh, 64, alpha, None, label)?.output;
    Ok(cs.lc(m) - cs.constant(SHIFT))
}

pub fn relu(cs: &mut ConstraintSystem, x: &LinComb, alpha: Fe, label: &str) -> Result<GadgetResult<LinComb>> {
    record(cs, |cs| shifted_max(cs, &[x.clone(), LinComb::zero()], alpha, label))
}

/// max(0.01 x, x) with the slope quantized to Q31.32.
pub fn leaky_relu(cs: &mut ConstraintSystem, x: &LinComb, alpha: Fe, label: &str) -> Result<GadgetResult<LinComb>> {
    record(cs, |cs| {
        let b = trunc(cs, &x.scale(cs.fe(LEAKY_SLOPE_RAW as i128)), 96, FRAC_BITS, true, label)?.output;
        shifted_max(cs, &[cs.lc(b), x.clone()], alpha, label)
    })
}

pub fn maxpool(cs: &mut ConstraintSystem, xs: &[LinComb], alpha: Fe, label: &str) -> Result<GadgetResult<LinComb>> {
    record(cs, |cs| shifted_max(cs, xs, alpha, label))
}
