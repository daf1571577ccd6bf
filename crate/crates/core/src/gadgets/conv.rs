//! Strided convolutions checked with one random linear combination after
//! splitting input and kernel into `s` interleaved parts.
//!
//! With x_l[q] = x[s q + l], k_l[j] = k[s j + l] and K = ceil(c / s):
//!
//! ```text
//! sum_l H_l X_l + sum corr = a^(K-1) sum_i a^i out[i]
//! H_l = sum_j a^(K-1-j) k_l[j]        X_l = sum_q a^q x_l[q]
//! ```
//!
//! Circular boundary: corr runs over q < j with weight (a^T - 1) a^(K-1-j+q).
//! Valid boundary: corr runs over q < j and q >= j + T_out with weight
//! -a^(K-1-j+q). Each correction is one product k_l[j] x_l[q].

use std::collections::BTreeMap;

use super::{mul, record, GadgetResult};
use crate::field::Fe;
use crate::r1cs::{ConstraintSystem, LinComb, Var};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Indices wrap modulo the input length; n / s outputs.
    Circular,
    /// Only full windows; (n - c) / s + 1 outputs.
    Valid,
}

struct Layout {
    n: usize,
    c: usize,
    s: usize,
    kk: usize,
    t_out: usize,
    xl_len: usize,
    boundary: Boundary,
}

impl Layout {
    fn new(n: usize, c: usize, s: usize, boundary: Boundary) -> Result<Layout> {
        if s == 0 || c == 0 {
            return Err(Error::Unsupported("stride and kernel length must be positive".into()));
        }
        let kk = c.div_ceil(s);
        let (t_out, xl_len) = match boundary {
            Boundary::Circular => {
                if n % s != 0 || kk > n / s {
                    return Err(Error::Dimension(format!(
                        "circular convolution needs s | n and ceil(c/s) <= n/s (n={n}, c={c}, s={s})"
                    )));
                }
                (n / s, n / s)
            }
            Boundary::Valid => {
                if n < c {
                    return Err(Error::Dimension(format!("input of length {n} shorter than kernel {c}")));
                }
                let t = (n - c) / s + 1;
                (t, t + kk - 1)
            }
        };
        Ok(Layout { n, c, s, kk, t_out, xl_len, boundary })
    }

    fn x_index(&self, l: usize, q: usize) -> Option<usize> {
        let i = self.s * q + l;
        (q < self.xl_len && i < self.n).then_some(i)
    }

    fn k_index(&self, l: usize, j: usize) -> Option<usize> {
        let i = self.s * j + l;
        (j < self.kk && i < self.c).then_some(i)
    }

    /// (l, j, q, power of a) for every correction product.
    fn corrections(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for l in 0..self.s {
            for j in 0..self.kk {
                if self.k_index(l, j).is_none() {
                    continue;
                }
                for q in 0..self.xl_len {
                    if self.x_index(l, q).is_none() {
                        continue;
                    }
                    let head = q < j;
                    let tail = self.boundary == Boundary::Valid && q >= j + self.t_out;
                    if head || tail {
                        out.push((l, j, q, self.kk - 1 + q - j));
                    }
                }
            }
        }
        out
    }
}

/// Plain strided convolution, the reference for the gadget.
pub fn conv_direct(x: &[i128], k: &[i128], s: usize, boundary: Boundary) -> Result<Vec<i128>> {
    let lay = Layout::new(x.len(), k.len(), s, boundary)?;
    Ok((0..lay.t_out)
        .map(|i| k.iter().enumerate().map(|(j, kj)| kj * x[(s * i + j) % x.len()]).sum())
        .collect())
}

/// Multiplication constraints emitted by [`split_rlc`].
pub fn split_rlc_count(n: usize, c: usize, s: usize, boundary: Boundary) -> Result<usize> {
    let lay = Layout::new(n, c, s, boundary)?;
    Ok(lay.s + lay.corrections().len())
}

/// Checks `out` against the strided convolution of `x` by `k` at challenge
/// `alpha`. Emits the correction products first, then one product per part;
/// the final equality rides on the last part's product.
#[allow(clippy::too_many_arguments)]
pub fn split_rlc(
    cs: &mut ConstraintSystem,
    x: &[LinComb],
    k: &[LinComb],
    out: &[LinComb],
    s: usize,
    boundary: Boundary,
    alpha: Fe,
    label: &str,
) -> Result<GadgetResult<()>> {
    let lay = Layout::new(x.len(), k.len(), s, boundary)?;
    if out.len() != lay.t_out {
        return Err(Error::Dimension(format!("expected {} outputs, got {}", lay.t_out, out.len())));
    }
    let f = cs.field();
    let top = lay.xl_len + lay.kk + lay.t_out + 1;
    let mut pw = Vec::with_capacity(top);
    let mut acc = f.one();
    for _ in 0..top {
        pw.push(acc);
        acc *= alpha;
    }
    let wrap = match boundary {
        Boundary::Circular => pw[lay.t_out] - f.one(),
        Boundary::Valid => -f.one(),
    };
    record(cs, |cs| {
        let mut target = LinComb::zero();
        for (i, o) in out.iter().enumerate() {
            target.add_scaled(o, pw[lay.kk - 1 + i]);
        }
        for (l, j, q, p) in lay.corrections() {
            let kv = &k[lay.k_index(l, j).unwrap()];
            let xv = &x[lay.x_index(l, q).unwrap()];
            let prod = mul(cs, kv, xv, label)?;
            target.push(prod, -(wrap * pw[p]));
        }
        for l in 0..s {
            let mut h = LinComb::zero();
            for j in 0..lay.kk {
                if let Some(i) = lay.k_index(l, j) {
                    h.add_scaled(&k[i], pw[lay.kk - 1 - j]);
                }
            }
            let mut xs = LinComb::zero();
            for q in 0..lay.xl_len {
                if let Some(i) = lay.x_index(l, q) {
                    xs.add_scaled(&x[i], pw[q]);
                }
            }
            if l + 1 < s {
                let qv = mul(cs, &h, &xs, label)?;
                target.push(qv, -f.one());
            } else {
                cs.enforce(h, xs, std::mem::take(&mut target), label)?;
            }
        }
        Ok(())
    })
}

/// Allocates the outputs of the strided convolution and checks them with
/// [`split_rlc`].
#[allow(clippy::too_many_arguments)]
pub fn strided_conv(
    cs: &mut ConstraintSystem,
    x: &[LinComb],
    k: &[LinComb],
    s: usize,
    boundary: Boundary,
    alpha: Fe,
    label: &str,
) -> Result<GadgetResult<Vec<Var>>> {
    let lay = Layout::new(x.len(), k.len(), s, boundary)?;
    let xs: Option<Vec<Fe>> = x.iter().map(|v| cs.eval(v)).collect();
    let ks: Option<Vec<Fe>> = k.iter().map(|v| cs.eval(v)).collect();
    record(cs, |cs| {
        let mut outs = Vec::with_capacity(lay.t_out);
        for i in 0..lay.t_out {
            let v = xs.as_ref().zip(ks.as_ref()).map(|(xs, ks)| {
                ks.iter().enumerate().map(|(j, kj)| *kj * xs[(s * i + j) % xs.len()]).sum()
            });
            outs.push(cs.alloc_witness(v)?);
        }
        let olc: Vec<LinComb> = outs.iter().map(|o| cs.lc(*o)).collect();
        split_rlc(cs, x, k, &olc, s, boundary, alpha, label)?;
        Ok(outs)
    })
}

/// Polynomial in a with coefficients over products k_j x_q, keyed by
/// (power of a, j, q).
type Symbolic = BTreeMap<(usize, usize, usize), i64>;

fn add_term(p: &mut Symbolic, key: (usize, usize, usize), c: i64) {
    let e = p.entry(key).or_default();
    *e += c;
    if *e == 0 {
        p.remove(&key);
    }
}

/// Terms of the correction polynomial D that a circular strided convolution
/// leaves behind, counted symbolically.
///
/// Unsplit: D = (sum_j a^(c-1-j) k_j)(sum_q a^q x_q) - sum_i w_i out_i where
/// w_i = a^(c-1+s i) for windows that do not wrap and 1 for those that do.
/// Split: D = sum_l H_l X_l - a^(K-1) sum_i a^i out_i.
pub fn correction_terms(n: usize, c: usize, s: usize, split: bool) -> Result<usize> {
    let lay = Layout::new(n, c, s, Boundary::Circular)?;
    let mut d = Symbolic::new();
    if split {
        for l in 0..s {
            for j in 0..lay.kk {
                let Some(kj) = lay.k_index(l, j) else { continue };
                for q in 0..lay.xl_len {
                    add_term(&mut d, (lay.kk - 1 - j + q, kj, s * q + l), 1);
                }
            }
        }
        for i in 0..lay.t_out {
            for j in 0..c {
                add_term(&mut d, (lay.kk - 1 + i, j, (s * i + j) % n), -1);
            }
        }
    } else {
        for j in 0..c {
            for q in 0..n {
                add_term(&mut d, (c - 1 - j + q, j, q), 1);
            }
        }
        for i in 0..lay.t_out {
            let w = if s * i + c <= n { c - 1 + s * i } else { 0 };
            for j in 0..c {
                add_term(&mut d, (w, j, (s * i + j) % n), -1);
            }
        }
    }
    Ok(d.len())
}
