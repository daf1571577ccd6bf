//! One-vs-rest RBF-SVM.
//!
//! Per support vector: D = |x~ - x_i|^2 in Q64 (k products), e = D >> 44
//! (20 fractional bits), l = Exp(e) over the base e^(-gamma) (2n), and
//! Q = d l (one product). Per class the decision value U = sum Q + b is
//! materialized and rescaled to f, and p = f + beta c is materialized.
//!
//! The label is bound through a permuted copy f_bar with f_bar[0] > f_bar[j]
//! (strict GT, values shifted by 2^63) and Perm(p, p_bar) under alpha_max,
//! where p_bar[0] = f_bar[0] + beta y.

use serde::{Deserialize, Serialize};

use crate::field::Fe;
use crate::fixed::{rescale, Fxp, EXP_FRAC_BITS, FRAC_BITS};
use crate::gadgets::{gt, materialize, mul, perm, trunc, ExpTable};
use crate::r1cs::{ConstraintSystem, LinComb, Segment};
use crate::{Error, Result};

/// Bit width of kernel exponents and of compared decision values.
pub const N_BITS: u32 = 64;
/// Width of squared distances in Q64.
pub const DIST_BITS: u32 = 108;
const DROP: u32 = 2 * FRAC_BITS - EXP_FRAC_BITS;
const SHIFT: i128 = 1 << 63;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmClass {
    pub sv: Vec<Vec<Fxp>>,
    /// Signed dual coefficients.
    pub coef: Vec<Fxp>,
    pub bias: Fxp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    pub s: usize,
    pub gamma: Fxp,
    pub classes: Vec<SvmClass>,
}

impl SvmParams {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.s == 0 || self.classes.len() != self.s {
            return Err(Error::Model(format!("s={} but {} classes given", self.s, self.classes.len())));
        }
        if self.gamma.raw() < 0 {
            return Err(Error::Model("gamma must be nonnegative".into()));
        }
        for (c, cl) in self.classes.iter().enumerate() {
            if cl.sv.is_empty() {
                return Err(Error::Model(format!("class {} has no support vectors", c + 1)));
            }
            if cl.coef.len() != cl.sv.len() {
                return Err(Error::Model(format!("class {}: {} coefficients for {} support vectors", c + 1, cl.coef.len(), cl.sv.len())));
            }
            if cl.sv.iter().any(|v| v.len() != k) {
                return Err(Error::Model(format!("class {}: support vectors must have {k} entries", c + 1)));
            }
        }
        Ok(())
    }

    pub fn sv_counts(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.sv.len()).collect()
    }

    pub fn t(&self) -> usize {
        self.classes.iter().map(|c| c.sv.len()).sum()
    }

    /// Per class: support vectors row by row, coefficients, bias.
    pub fn model_values(&self) -> impl Iterator<Item = Fxp> + '_ {
        self.classes
            .iter()
            .flat_map(|c| c.sv.iter().flatten().chain(&c.coef).chain(std::iter::once(&c.bias)))
            .copied()
    }
}

pub fn exp_table(gamma: Fxp) -> Result<ExpTable> {
    ExpTable::neg_exp(gamma, N_BITS)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelTrace {
    pub dist: i128,
    pub exponent: u128,
    pub value: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvmTrace {
    pub kernels: Vec<Vec<KernelTrace>>,
    /// Decision values before (Q64) and after rescaling.
    pub u: Vec<i128>,
    pub f: Vec<Fxp>,
    /// 1-based label.
    pub y: usize,
    /// Class order with the label first, the rest ascending (1-based).
    pub sigma: Vec<usize>,
    /// f permuted by sigma.
    pub f_bar: Vec<Fxp>,
}

impl SvmTrace {
    /// Another class has exactly the winning value; no proof exists then.
    pub fn has_tie(&self) -> bool {
        self.f.iter().enumerate().any(|(i, v)| i + 1 != self.y && *v == self.f[self.y - 1])
    }
}

/// Argmax (1-based, lowest index among equals) and the ordering sigma.
pub fn classify(f: &[Fxp]) -> Result<(usize, Vec<usize>)> {
    if f.is_empty() {
        return Err(Error::Dimension("no decision values".into()));
    }
    let mut y = 0;
    for (i, v) in f.iter().enumerate() {
        if *v > f[y] {
            y = i;
        }
    }
    let sigma = std::iter::once(y + 1).chain((1..=f.len()).filter(|&c| c != y + 1)).collect();
    Ok((y + 1, sigma))
}

pub fn infer(x_tilde: &[Fxp], p: &SvmParams) -> Result<SvmTrace> {
    let table = exp_table(p.gamma)?;
    let overflow = || Error::Overflow("SVM decision value".into());
    let mut kernels = Vec::with_capacity(p.s);
    let mut u = Vec::with_capacity(p.s);
    for cl in &p.classes {
        let mut ks = Vec::with_capacity(cl.sv.len());
        let mut acc = (cl.bias.raw() as i128) << FRAC_BITS;
        for (sv, d) in cl.sv.iter().zip(&cl.coef) {
            if sv.len() != x_tilde.len() {
                return Err(Error::Dimension(format!("SVM input has {} entries, expected {}", x_tilde.len(), sv.len())));
            }
            let mut dist: i128 = 0;
            for (a, b) in x_tilde.iter().zip(sv) {
                let diff = a.raw() as i128 - b.raw() as i128;
                dist = dist.checked_add(diff * diff).ok_or_else(overflow)?;
            }
            let exponent = (dist >> DROP) as u128;
            if exponent >> N_BITS != 0 {
                return Err(Error::Range(format!("kernel exponent {exponent} exceeds {N_BITS} bits")));
            }
            let value = table.eval(exponent)?;
            acc = acc.checked_add(d.raw() as i128 * value as i128).ok_or_else(overflow)?;
            ks.push(KernelTrace { dist, exponent, value });
        }
        kernels.push(ks);
        u.push(acc);
    }
    let f: Vec<Fxp> = u.iter().map(|v| rescale(*v, FRAC_BITS)).collect::<Result<_>>()?;
    let (y, sigma) = classify(&f)?;
    let f_bar = sigma.iter().map(|&c| f[c - 1]).collect();
    Ok(SvmTrace { kernels, u, f, y, sigma, f_bar })
}

#[derive(Clone, Debug)]
pub struct ClassVars {
    pub sv: Vec<Vec<LinComb>>,
    pub coef: Vec<LinComb>,
    pub bias: LinComb,
}

#[derive(Clone, Copy, Debug)]
pub struct SvmChallenges {
    pub beta: Fe,
    pub alpha_max: Fe,
}

/// Emits the kernel, decision and classification blocks. `y` is the claimed
/// 1-based label; `gamma` is public.
pub fn constraints(
    cs: &mut ConstraintSystem,
    x_tilde: &[LinComb],
    classes: &[ClassVars],
    gamma: Fxp,
    trace: Option<&SvmTrace>,
    y: &LinComb,
    ch: SvmChallenges,
) -> Result<()> {
    let s = classes.len();
    if s == 0 {
        return Err(Error::Dimension("SVM without classes".into()));
    }
    let table = exp_table(gamma)?;
    let mut p = Vec::with_capacity(s);
    for (c, cl) in classes.iter().enumerate() {
        let kl = format!("svm.kernel[{c}]");
        let mut u = cl.bias.scale(cs.fe(1 << FRAC_BITS));
        for (sv, d) in cl.sv.iter().zip(&cl.coef) {
            if sv.len() != x_tilde.len() {
                return Err(Error::Dimension("support vector length".into()));
            }
            let mut dist = LinComb::zero();
            for (a, b) in x_tilde.iter().zip(sv) {
                let diff = a.clone() - b.clone();
                let sq = mul(cs, &diff, &diff, &kl)?;
                dist.push(sq, cs.one());
            }
            let e = trunc(cs, &dist, DIST_BITS, DROP, false, &kl)?.output;
            let l = crate::gadgets::exp(cs, &table, &cs.lc(e), &kl)?.output;
            let q = mul(cs, d, &l, &format!("svm.decision[{c}]"))?;
            u.push(q, cs.one());
        }
        let uv = materialize(cs, &u, &kl)?;
        let f = trunc(cs, &cs.lc(uv), 96, FRAC_BITS, true, &kl)?.output;
        let bc = LinComb::constant(ch.beta * cs.fe(c as i128 + 1));
        let pv = materialize(cs, &(cs.lc(f) + bc), &kl)?;
        p.push(cs.lc(pv));
    }

    let label = "svm.classify";
    let mut f_bar = Vec::with_capacity(s);
    for j in 0..s {
        let v = cs.alloc_in(Segment::Aux, trace.map(|t| t.f_bar[j].raw() as i128))?;
        f_bar.push(cs.lc(v));
    }
    let mut sigma = vec![y.clone()];
    for j in 1..s {
        let v = cs.alloc_in(Segment::Aux, trace.map(|t| t.sigma[j] as i128))?;
        sigma.push(cs.lc(v));
    }
    let shift = cs.constant(SHIFT);
    let head = f_bar[0].clone() + shift.clone();
    for fb in &f_bar[1..] {
        gt(cs, &head, &(fb.clone() + shift.clone()), N_BITS, label)?;
    }
    let p_bar: Vec<LinComb> = f_bar.iter().zip(&sigma).map(|(f, sg)| f.clone() + sg.scale(ch.beta)).collect();
    perm(cs, &p, &p_bar, ch.alpha_max, label)?;
    Ok(())
}
