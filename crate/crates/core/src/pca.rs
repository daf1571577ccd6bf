//! PCA projection x~ = V' (x^ - x_bar), checked with one random linear
//! combination over the k output rows:
//!
//! ```text
//! sum_i a^i U[i] = sum_j (sum_i a^i V[i][j]) (x^[j] - x_bar[j])
//! ```
//!
//! which costs m products regardless of k.

use serde::{Deserialize, Serialize};

use crate::field::Fe;
use crate::fixed::{rescale, Fxp, FRAC_BITS};
use crate::gadgets::{mul, trunc};
use crate::r1cs::{ConstraintSystem, LinComb, Segment};
use crate::{Error, Result};

/// Signed width of the full-precision projections.
pub const WIDE_BITS: u32 = 96;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaParams {
    pub m: usize,
    pub k: usize,
    pub x_bar: Vec<Fxp>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<Fxp>>,
}

impl PcaParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::Model("PCA dimensions must be positive".into()));
        }
        if self.k > self.m {
            return Err(Error::Model(format!("k={} exceeds m={}", self.k, self.m)));
        }
        if self.x_bar.len() != self.m {
            return Err(Error::Model(format!("mean has {} entries, expected {}", self.x_bar.len(), self.m)));
        }
        if self.v.len() != self.k || self.v.iter().any(|r| r.len() != self.m) {
            return Err(Error::Model(format!("V must be {} rows of {} entries", self.k, self.m)));
        }
        Ok(())
    }

    /// x_bar then V row by row, in commitment order.
    pub fn model_values(&self) -> impl Iterator<Item = Fxp> + '_ {
        self.x_bar.iter().chain(self.v.iter().flatten()).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcaTrace {
    /// Full-precision rows (Q64) and their Q31.32 rescaling.
    pub u: Vec<i128>,
    pub x_tilde: Vec<Fxp>,
}

pub fn project(x_hat: &[Fxp], p: &PcaParams) -> Result<PcaTrace> {
    if x_hat.len() != p.m {
        return Err(Error::Dimension(format!("PCA input has {} entries, expected {}", x_hat.len(), p.m)));
    }
    let overflow = || Error::Overflow("PCA projection".into());
    let diff: Vec<i128> = x_hat.iter().zip(&p.x_bar).map(|(a, b)| a.raw() as i128 - b.raw() as i128).collect();
    let mut u = Vec::with_capacity(p.k);
    for row in &p.v {
        let mut acc: i128 = 0;
        for (w, d) in row.iter().zip(&diff) {
            acc = (w.raw() as i128).checked_mul(*d).and_then(|t| acc.checked_add(t)).ok_or_else(overflow)?;
        }
        u.push(acc);
    }
    let x_tilde = u.iter().map(|v| rescale(*v, FRAC_BITS)).collect::<Result<_>>()?;
    Ok(PcaTrace { u, x_tilde })
}

/// Model operands: x_bar (m) and V (k rows of m).
#[derive(Clone, Debug)]
pub struct PcaVars {
    pub x_bar: Vec<LinComb>,
    pub v: Vec<Vec<LinComb>>,
}

/// Emits the m products and returns x~ as Q31.32 operands.
pub fn constraints(
    cs: &mut ConstraintSystem,
    x_hat: &[LinComb],
    vars: &PcaVars,
    trace: Option<&PcaTrace>,
    alpha: Fe,
) -> Result<Vec<LinComb>> {
    let m = x_hat.len();
    let k = vars.v.len();
    if m == 0 || vars.x_bar.len() != m || vars.v.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension("PCA operands do not match".into()));
    }
    let mut u = Vec::with_capacity(k);
    for i in 0..k {
        let w = cs.alloc_in(Segment::Aux, trace.map(|t| t.u[i]))?;
        u.push(cs.lc(w));
    }
    let mut pw = Vec::with_capacity(k);
    let mut acc = cs.one();
    for _ in 0..k {
        pw.push(acc);
        acc *= alpha;
    }
    let mut target = LinComb::zero();
    for (ui, a) in u.iter().zip(&pw) {
        target.add_scaled(ui, *a);
    }
    for j in 0..m {
        let mut col = LinComb::zero();
        for (row, a) in vars.v.iter().zip(&pw) {
            col.add_scaled(&row[j], *a);
        }
        let d = x_hat[j].clone() - vars.x_bar[j].clone();
        let label = format!("pca[{j}]");
        if j + 1 < m {
            let p = mul(cs, &col, &d, &label)?;
            target.push(p, -cs.one());
        } else {
            cs.enforce(col, d, std::mem::take(&mut target), &label)?;
        }
    }
    let mut out = Vec::with_capacity(k);
    for ui in &u {
        let t = trunc(cs, ui, WIDE_BITS, FRAC_BITS, true, "pca")?.output;
        out.push(cs.lc(t));
    }
    Ok(out)
}
