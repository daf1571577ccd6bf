//! Daubechies wavelet denoising: decomposition, soft thresholding of the
//! detail coefficients, and reconstruction, plus their constraints.
//!
//! Decomposition at a level of length t' (t = t'/2):
//!
//! ```text
//! z[i]     = sum_j h[j] x[(2i + j) mod t']
//! z[t + i] = sum_j g[j] x[(2i + j) mod t']
//! ```
//!
//! Reconstruction runs the same stride-2 convolution over the interleaved
//! sequence y = (a0, d0, a1, d1, ...), landing at offset c - 2:
//!
//! ```text
//! x^[(2i + c - 2) mod t'] = sum_j h_bar[j] y[(2i + j) mod t']
//! x^[(2i + c - 1) mod t'] = sum_j g_bar[j] y[(2i + j) mod t']
//! ```
//!
//! For an orthogonal filter pair this inverts the decomposition when
//! h_bar = (h[c-2], g[c-2], h[c-4], g[c-4], ...) and
//! g_bar = (h[c-1], g[c-1], h[c-3], g[c-3], ...).

use serde::{Deserialize, Serialize};

use crate::field::Fe;
use crate::fixed::{rescale, Fxp, FRAC_BITS};
use crate::gadgets::conv::{split_rlc, split_rlc_count, Boundary};
use crate::gadgets::{ge_inline, trunc};
use crate::r1cs::{ConstraintSystem, LinComb, Segment};
use crate::{Error, Result};

/// Bit width of the thresholding comparison.
pub const THRESHOLD_BITS: u32 = 64;
/// Signed width of full-precision (Q64) filter outputs.
pub const WIDE_BITS: u32 = 96;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwtParams {
    pub c: usize,
    pub h: Vec<Fxp>,
    pub g: Vec<Fxp>,
    pub h_bar: Vec<Fxp>,
    pub g_bar: Vec<Fxp>,
    pub eta: Fxp,
    pub levels: usize,
}

/// The 4-tap Daubechies filter bank.
pub fn db4() -> [[f64; 4]; 4] {
    let s3 = 3f64.sqrt();
    let d = 4.0 * 2f64.sqrt();
    let h = [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
    let g = [h[3], -h[2], h[1], -h[0]];
    let h_bar = [h[2], g[2], h[0], g[0]];
    let g_bar = [h[3], g[3], h[1], g[1]];
    [h, g, h_bar, g_bar]
}

impl DwtParams {
    /// DB4 filters quantized to Q31.32.
    pub fn db4(eta: Fxp, levels: usize) -> DwtParams {
        let q = |v: &[f64; 4]| v.iter().map(|x| Fxp::encode(*x).unwrap()).collect::<Vec<_>>();
        let [h, g, hb, gb] = db4();
        DwtParams { c: 4, h: q(&h), g: q(&g), h_bar: q(&hb), g_bar: q(&gb), eta, levels }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 2 || self.c % 2 != 0 {
            return Err(Error::Model(format!("filter length c={} must be even and at least 2", self.c)));
        }
        for (name, f) in [("h", &self.h), ("g", &self.g), ("h_bar", &self.h_bar), ("g_bar", &self.g_bar)] {
            if f.len() != self.c {
                return Err(Error::Model(format!("filter {name} has {} taps, expected {}", f.len(), self.c)));
            }
        }
        if self.eta.raw() < 0 {
            return Err(Error::Model("negative threshold".into()));
        }
        if self.levels == 0 {
            return Err(Error::Model("at least one decomposition level is required".into()));
        }
        Ok(())
    }

    /// Input length check for inference: a power of two with every level at
    /// least c long.
    pub fn check_length(&self, m: usize) -> Result<()> {
        if !m.is_power_of_two() {
            return Err(Error::Dimension(format!("signal length {m} is not a power of two")));
        }
        if self.levels > 31 || (m >> (self.levels - 1)) < self.c.max(2) {
            return Err(Error::Dimension(format!(
                "signal length {m} too short for {} levels of a {}-tap filter",
                self.levels, self.c
            )));
        }
        Ok(())
    }

    /// h, g, h_bar, g_bar in commitment order.
    pub fn model_values(&self) -> impl Iterator<Item = Fxp> + '_ {
        self.h.iter().chain(&self.g).chain(&self.h_bar).chain(&self.g_bar).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelTrace {
    /// Full-precision coefficients, approximation half then detail half.
    pub u: Vec<i128>,
    /// u rescaled to Q31.32.
    pub z: Vec<Fxp>,
    /// Per detail coefficient: |z|, sign(z) in {-1, 1}, |z'| and z'.
    pub abs: Vec<Fxp>,
    pub sign: Vec<i8>,
    pub mag: Vec<Fxp>,
    pub zt: Vec<Fxp>,
    /// Full-precision reconstruction, and its rescaled value.
    pub v: Vec<i128>,
    pub xhat: Vec<Fxp>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DwtTrace {
    pub levels: Vec<LevelTrace>,
}

impl DwtTrace {
    pub fn output(&self) -> &[Fxp] {
        &self.levels[0].xhat
    }

    /// Values committed as auxiliary witnesses, in allocation order.
    pub fn aux_values(&self) -> Vec<i128> {
        let mut out = Vec::new();
        for l in &self.levels {
            out.extend(&l.u);
            for i in 0..l.abs.len() {
                out.extend([l.abs[i].raw() as i128, l.sign[i] as i128, l.mag[i].raw() as i128, l.zt[i].raw() as i128]);
            }
        }
        for l in self.levels.iter().rev() {
            out.extend(&l.v);
        }
        out
    }
}

fn filter_wide(x: &[i128], k: &[Fxp], i: usize) -> Result<i128> {
    let n = x.len();
    let mut acc: i128 = 0;
    for (j, kj) in k.iter().enumerate() {
        acc = (kj.raw() as i128)
            .checked_mul(x[(2 * i + j) % n])
            .and_then(|p| acc.checked_add(p))
            .ok_or_else(|| Error::Overflow("wavelet filter accumulation".into()))?;
    }
    Ok(acc)
}

fn raws(x: &[Fxp]) -> Vec<i128> {
    x.iter().map(|v| v.raw() as i128).collect()
}

fn narrow(u: &[i128]) -> Result<Vec<Fxp>> {
    u.iter().map(|v| rescale(*v, FRAC_BITS)).collect()
}

/// One decomposition level: returns (u, z) of the same length as x.
pub fn decompose(x: &[Fxp], h: &[Fxp], g: &[Fxp]) -> Result<(Vec<i128>, Vec<Fxp>)> {
    let n = x.len();
    if n < h.len() || n % 2 != 0 {
        return Err(Error::Dimension(format!("level input of length {n} for a {}-tap filter", h.len())));
    }
    let xr = raws(x);
    let t = n / 2;
    let mut u = Vec::with_capacity(n);
    for i in 0..t {
        u.push(filter_wide(&xr, h, i)?);
    }
    for i in 0..t {
        u.push(filter_wide(&xr, g, i)?);
    }
    let z = narrow(&u)?;
    Ok((u, z))
}

/// Soft threshold: sign(z) (|z| - eta) when |z| > eta, else 0.
pub fn soft_threshold(z: Fxp, eta: Fxp) -> (Fxp, i8, Fxp, Fxp) {
    let a = z.raw().unsigned_abs() as i64;
    let sign = if z.raw() < 0 { -1 } else { 1 };
    let q = if a > eta.raw() { a - eta.raw() } else { 0 };
    (Fxp(a), sign, Fxp(q), Fxp(sign as i64 * q))
}

/// Threshold the detail half of z, returning the full thresholded vector.
pub fn threshold(z: &[Fxp], eta: Fxp) -> Vec<Fxp> {
    let t = z.len() / 2;
    z[..t].iter().copied().chain(z[t..].iter().map(|v| soft_threshold(*v, eta).3)).collect()
}

/// One reconstruction level from approximation `a` and detail `d`:
/// returns (v, x^) of length 2 len(a).
pub fn reconstruct(a: &[Fxp], d: &[Fxp], h_bar: &[Fxp], g_bar: &[Fxp]) -> Result<(Vec<i128>, Vec<Fxp>)> {
    if a.len() != d.len() {
        return Err(Error::Dimension(format!("{} approximation and {} detail coefficients", a.len(), d.len())));
    }
    let n = 2 * a.len();
    let c = h_bar.len();
    if n < c {
        return Err(Error::Dimension(format!("level of length {n} for a {c}-tap filter")));
    }
    let y: Vec<i128> = a.iter().zip(d).flat_map(|(p, q)| [p.raw() as i128, q.raw() as i128]).collect();
    let mut v = vec![0i128; n];
    for i in 0..n / 2 {
        v[(2 * i + c - 2) % n] = filter_wide(&y, h_bar, i)?;
        v[(2 * i + c - 1) % n] = filter_wide(&y, g_bar, i)?;
    }
    let xhat = narrow(&v)?;
    Ok((v, xhat))
}

/// Full denoising pass over `levels` levels.
pub fn denoise(x: &[Fxp], p: &DwtParams) -> Result<DwtTrace> {
    p.check_length(x.len())?;
    let mut levels = Vec::with_capacity(p.levels);
    let mut input = x.to_vec();
    for _ in 0..p.levels {
        let (u, z) = decompose(&input, &p.h, &p.g)?;
        let t = z.len() / 2;
        let mut lt = LevelTrace { u, z, abs: vec![], sign: vec![], mag: vec![], zt: vec![], v: vec![], xhat: vec![] };
        for zi in &lt.z[t..] {
            let (a, s, q, zt) = soft_threshold(*zi, p.eta);
            lt.abs.push(a);
            lt.sign.push(s);
            lt.mag.push(q);
            lt.zt.push(zt);
        }
        input = lt.z[..t].to_vec();
        levels.push(lt);
    }
    let mut approx = input;
    for lt in levels.iter_mut().rev() {
        let (v, xhat) = reconstruct(&approx, &lt.zt, &p.h_bar, &p.g_bar)?;
        lt.v = v;
        approx = xhat.clone();
        lt.xhat = xhat;
    }
    Ok(DwtTrace { levels })
}

/// Filter taps as circuit operands, in commitment order.
#[derive(Clone, Debug)]
pub struct DwtVars {
    pub h: Vec<LinComb>,
    pub g: Vec<LinComb>,
    pub h_bar: Vec<LinComb>,
    pub g_bar: Vec<LinComb>,
}

/// Thresholding constraints for one detail coefficient z (3n + 9):
///
/// ```text
/// s * s = 1            s * a = z           q * (q - a + eta) = 0
/// s * q = z'           eta + q >= a - q    (with a - q >= 0, eta + q >= 0)
/// ```
///
/// The first two make a = |z|. The third leaves q in {0, a - eta}; the
/// comparison picks q = 0 exactly when a <= eta.
pub fn threshold_constraints(
    cs: &mut ConstraintSystem,
    z: &LinComb,
    eta: Fxp,
    vals: Option<(Fxp, i8, Fxp, Fxp)>,
    label: &str,
) -> Result<LinComb> {
    let a = cs.alloc_in(Segment::Aux, vals.map(|v| v.0.raw() as i128))?;
    let s = cs.alloc_in(Segment::Aux, vals.map(|v| v.1 as i128))?;
    let q = cs.alloc_in(Segment::Aux, vals.map(|v| v.2.raw() as i128))?;
    let zt = cs.alloc_in(Segment::Aux, vals.map(|v| v.3.raw() as i128))?;
    let (a, s, q, zt) = (cs.lc(a), cs.lc(s), cs.lc(q), cs.lc(zt));
    let eta = cs.constant(eta.raw() as i128);
    cs.enforce(s.clone(), s.clone(), cs.constant(1), label)?;
    cs.enforce(s.clone(), a.clone(), z.clone(), label)?;
    cs.enforce(q.clone(), q.clone() - a.clone() + eta.clone(), LinComb::zero(), label)?;
    cs.enforce(s, q.clone(), zt.clone(), label)?;
    ge_inline(cs, &(eta + q.clone()), &(a - q), THRESHOLD_BITS, label)?;
    Ok(zt)
}

/// Constraints for the whole denoising pass. `x` is the level-1 input;
/// returns the reconstructed signal x^ as Q31.32 operands. With `trace` set
/// (proving) the auxiliary values are taken from it.
#[allow(clippy::too_many_arguments)]
pub fn constraints(
    cs: &mut ConstraintSystem,
    x: &[LinComb],
    vars: &DwtVars,
    params: &DwtParams,
    trace: Option<&DwtTrace>,
    alpha: Fe,
    alpha_bar: Fe,
) -> Result<Vec<LinComb>> {
    params.check_length(x.len())?;
    let aux = |cs: &mut ConstraintSystem, v: Option<i128>| -> Result<LinComb> {
        let w = cs.alloc_in(Segment::Aux, v)?;
        Ok(cs.lc(w))
    };
    let mut input: Vec<LinComb> = x.to_vec();
    let mut details: Vec<Vec<LinComb>> = Vec::with_capacity(params.levels);
    for lvl in 0..params.levels {
        let lt = trace.map(|t| &t.levels[lvl]);
        let n = input.len();
        let t = n / 2;
        let mut u = Vec::with_capacity(n);
        for i in 0..n {
            u.push(aux(cs, lt.map(|l| l.u[i]))?);
        }
        let label = format!("dwt.decompose[{lvl}]");
        split_rlc(cs, &input, &vars.h, &u[..t], 2, Boundary::Circular, alpha, &label)?;
        split_rlc(cs, &input, &vars.g, &u[t..], 2, Boundary::Circular, alpha, &label)?;
        let mut z = Vec::with_capacity(n);
        for ui in &u {
            let zi = trunc(cs, ui, WIDE_BITS, FRAC_BITS, true, &label)?.output;
            z.push(cs.lc(zi));
        }
        let mut d = Vec::with_capacity(t);
        for i in 0..t {
            let vals = lt.map(|l| (l.abs[i], l.sign[i], l.mag[i], l.zt[i]));
            let label = format!("dwt.threshold[{lvl}][{i}]");
            d.push(threshold_constraints(cs, &z[t + i], params.eta, vals, &label)?);
        }
        details.push(d);
        z.truncate(t);
        input = z;
    }
    let mut approx = input;
    for lvl in (0..params.levels).rev() {
        let lt = trace.map(|t| &t.levels[lvl]);
        let d = &details[lvl];
        let n = 2 * approx.len();
        let c = params.c;
        let y: Vec<LinComb> = approx.iter().zip(d).flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            v.push(aux(cs, lt.map(|l| l.v[i]))?);
        }
        let even: Vec<LinComb> = (0..n / 2).map(|i| v[(2 * i + c - 2) % n].clone()).collect();
        let odd: Vec<LinComb> = (0..n / 2).map(|i| v[(2 * i + c - 1) % n].clone()).collect();
        let label = format!("dwt.reconstruct[{lvl}]");
        split_rlc(cs, &y, &vars.h_bar, &even, 2, Boundary::Circular, alpha_bar, &label)?;
        split_rlc(cs, &y, &vars.g_bar, &odd, 2, Boundary::Circular, alpha_bar, &label)?;
        let mut xhat = Vec::with_capacity(n);
        for vi in &v {
            let xi = trunc(cs, vi, WIDE_BITS, FRAC_BITS, true, &label)?.output;
            xhat.push(cs.lc(xi));
        }
        approx = xhat;
    }
    Ok(approx)
}

/// Constraints per decomposition (and per reconstruction) level: c(c/2 - 1) + 4.
pub fn level_count(c: usize, len: usize) -> Result<usize> {
    Ok(2 * split_rlc_count(len, c, 2, Boundary::Circular)?)
}

/// Thresholding constraints for `details` coefficients: (3n + 9) each.
pub fn threshold_count(details: usize) -> usize {
    (3 * THRESHOLD_BITS as usize + 9) * details
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use rand::{Rng, SeedableRng};

    fn fx(v: f64) -> Fxp {
        Fxp::encode(v).unwrap()
    }

    fn params() -> DwtParams {
        DwtParams::db4(fx(0.2), 1)
    }

    #[test]
    fn zero_signal() {
        let x = vec![Fxp::ZERO; 16];
        let t = denoise(&x, &params()).unwrap();
        assert!(t.output().iter().all(|v| *v == Fxp::ZERO));
    }

    #[test]
    fn impulse_places_taps() {
        let p = params();
        let mut x = vec![Fxp::ZERO; 8];
        x[1] = Fxp::ONE;
        let (_, z) = decompose(&x, &p.h, &p.g).unwrap();
        // x[1] is read at (2i + j) mod 8 = 1: i = 0, j = 1 and i = 3, j = 3
        let mut want = vec![Fxp::ZERO; 8];
        want[0] = p.h[1];
        want[3] = p.h[3];
        want[4] = p.g[1];
        want[7] = p.g[3];
        assert_eq!(z, want);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(soft_threshold(fx(0.1), fx(0.2)).3, Fxp::ZERO);
        assert_eq!(soft_threshold(fx(0.5), fx(0.2)).3, Fxp(fx(0.5).raw() - fx(0.2).raw()));
        assert_eq!(soft_threshold(fx(-0.5), fx(0.2)).3, Fxp(-(fx(0.5).raw() - fx(0.2).raw())));
        let z = vec![fx(0.1), fx(0.5), fx(-0.5), fx(0.1)];
        assert_eq!(threshold(&z, fx(0.2))[..2], z[..2]);
    }

    #[test]
    fn perfect_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for levels in 1..=3 {
            let p = DwtParams::db4(Fxp::ZERO, levels);
            let x: Vec<Fxp> = (0..32).map(|_| fx(rng.gen_range(-100.0..100.0))).collect();
            let t = denoise(&x, &p).unwrap();
            for (a, b) in x.iter().zip(t.output()) {
                assert!((a.decode() - b.decode()).abs() < 2f64.powi(-12));
            }
        }
    }

    #[test]
    fn decompose_tracks_f64() {
        let [h, g, _, _] = db4();
        let p = params();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let xf: Vec<f64> = (0..16).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let x: Vec<Fxp> = xf.iter().map(|v| fx(*v)).collect();
        let (_, z) = decompose(&x, &p.h, &p.g).unwrap();
        for i in 0..8 {
            let lo: f64 = (0..4).map(|j| h[j] * xf[(2 * i + j) % 16]).sum();
            let hi: f64 = (0..4).map(|j| g[j] * xf[(2 * i + j) % 16]).sum();
            assert!((z[i].decode() - lo).abs() < 2f64.powi(-16));
            assert!((z[8 + i].decode() - hi).abs() < 2f64.powi(-16));
        }
    }

    fn build(
        x: &[Fxp],
        p: &DwtParams,
        trace: &DwtTrace,
        alpha: Fe,
        alpha_bar: Fe,
    ) -> (ConstraintSystem, Vec<LinComb>) {
        let f = PrimeField::ristretto();
        let mut cs = ConstraintSystem::new_proving(f);
        let xs: Vec<LinComb> = x
            .iter()
            .map(|v| {
                let w = cs.alloc_public(Some(v.to_field(f))).unwrap();
                cs.lc(w)
            })
            .collect();
        let mut taps = |k: &[Fxp]| -> Vec<LinComb> {
            k.iter()
                .map(|v| {
                    let w = cs.alloc_in(Segment::Model, Some(v.raw() as i128)).unwrap();
                    cs.lc(w)
                })
                .collect()
        };
        let vars = DwtVars { h: taps(&p.h), g: taps(&p.g), h_bar: taps(&p.h_bar), g_bar: taps(&p.g_bar) };
        let out = constraints(&mut cs, &xs, &vars, p, Some(trace), alpha, alpha_bar).unwrap();
        (cs, out)
    }

    #[test]
    fn honest_trace_satisfies() {
        let f = PrimeField::ristretto();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for levels in 1..=3 {
            let p = DwtParams::db4(fx(0.2), levels);
            let x: Vec<Fxp> = (0..16).map(|_| fx(rng.gen_range(-2.0..2.0))).collect();
            let t = denoise(&x, &p).unwrap();
            let (cs, out) = build(&x, &p, &t, f.from_u64(rng.gen()), f.from_u64(rng.gen()));
            assert!(cs.check().unwrap().is_satisfied());
            let got: Vec<Fxp> = out.iter().map(|v| Fxp::from_field(&cs.eval(v).unwrap()).unwrap()).collect();
            assert_eq!(got, t.output());
            let counts = cs.counts();
            assert_eq!(counts.prefix("dwt.decompose"), 8 * levels);
            assert_eq!(counts.prefix("dwt.reconstruct"), 8 * levels);
            let details: usize = (0..levels).map(|l| 8 >> l).sum();
            assert_eq!(counts.prefix("dwt.threshold"), threshold_count(details));
        }
    }

    #[test]
    fn threshold_count_m16() {
        // three levels of a 16-sample signal leave c/2 = 2 approximation coefficients
        let p = DwtParams::db4(fx(0.2), 3);
        let x = vec![Fxp::ONE; 16];
        let t = denoise(&x, &p).unwrap();
        let f = PrimeField::ristretto();
        let (cs, _) = build(&x, &p, &t, f.from_u64(3), f.from_u64(5));
        assert_eq!(cs.counts().prefix("dwt.threshold"), 2814);
        assert_eq!(level_count(4, 16).unwrap(), 8);
    }

    #[test]
    fn corrupted_coefficient_fails() {
        let f = PrimeField::ristretto();
        let p = params();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        let x: Vec<Fxp> = (0..16).map(|_| fx(rng.gen_range(-2.0..2.0))).collect();
        let mut t = denoise(&x, &p).unwrap();
        t.levels[0].u[5] += 1 << 32;
        t.levels[0].z[5] = Fxp(t.levels[0].z[5].raw() + 1);
        let (cs, _) = build(&x, &p, &t, f.from_u64(rng.gen()), f.from_u64(rng.gen()));
        assert!(!cs.check().unwrap().is_satisfied());
    }
}
