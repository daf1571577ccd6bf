//! Constraint accounting. Each block of the inference system is built in
//! shape mode at the requested dimensions and its count is reported next to
//! the closed-form count and the generic (unoptimized) baseline.

use serde::Serialize;

use crate::dwt::{self, THRESHOLD_BITS};
use crate::field::PrimeField;
use crate::fixed::Fxp;
use crate::gadgets::conv::{split_rlc, Boundary};
use crate::model::ModelShape;
use crate::pca::{self, PcaVars};
use crate::r1cs::{ConstraintSystem, LinComb};
use crate::svm::{self, ClassVars, SvmChallenges};
use crate::Result;

/// Dimensions for accounting. `details` is the number of thresholded
/// coefficients across all levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub m: usize,
    pub c: usize,
    pub n: usize,
    pub k: usize,
    pub sv_counts: Vec<usize>,
    pub levels: usize,
    pub details: usize,
}

impl Dims {
    /// A decomposition run down to length c: m - c/2 detail coefficients.
    pub fn full(m: usize, c: usize, k: usize, sv_counts: Vec<usize>) -> Dims {
        let mut levels = 0;
        let mut len = m;
        while len >= c && len >= 2 {
            levels += 1;
            len /= 2;
        }
        Dims { m, c, n: THRESHOLD_BITS as usize, k, sv_counts, levels, details: m - c / 2 }
    }

    pub fn from_shape(shape: &ModelShape) -> Dims {
        let details = (0..shape.levels).map(|l| (shape.m >> l) / 2).sum();
        Dims {
            m: shape.m,
            c: shape.c,
            n: THRESHOLD_BITS as usize,
            k: shape.k,
            sv_counts: shape.sv_counts.clone(),
            levels: shape.levels,
            details,
        }
    }

    pub fn s(&self) -> usize {
        self.sv_counts.len()
    }

    pub fn t(&self) -> usize {
        self.sv_counts.iter().sum()
    }
}

/// Counts for one block. `ezdps` is what the built system reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub stage: &'static str,
    pub ezdps: usize,
    pub formula: usize,
    pub generic: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub dims: Dims,
    pub rows: Vec<Row>,
    /// t products producing the decision values; not part of either SVM total.
    pub svm_decision: usize,
}

impl Report {
    pub fn row(&self, stage: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.stage == stage)
    }
}

fn fresh(cs: &mut ConstraintSystem, n: usize) -> Result<Vec<LinComb>> {
    (0..n).map(|_| cs.alloc_int(None).map(|v| cs.lc(v))).collect()
}

fn decompose_level(field: &'static PrimeField, m: usize, c: usize) -> Result<usize> {
    let mut cs = ConstraintSystem::new_shape(field);
    let x = fresh(&mut cs, m)?;
    let h = fresh(&mut cs, c)?;
    let g = fresh(&mut cs, c)?;
    let u = fresh(&mut cs, m)?;
    let a = field.from_u64(2);
    split_rlc(&mut cs, &x, &h, &u[..m / 2], 2, Boundary::Circular, a, "dwt.decompose")?;
    split_rlc(&mut cs, &x, &g, &u[m / 2..], 2, Boundary::Circular, a, "dwt.decompose")?;
    Ok(cs.counts().prefix("dwt.decompose"))
}

fn reconstruct_level(field: &'static PrimeField, m: usize, c: usize) -> Result<usize> {
    let mut cs = ConstraintSystem::new_shape(field);
    let y = fresh(&mut cs, m)?;
    let hb = fresh(&mut cs, c)?;
    let gb = fresh(&mut cs, c)?;
    let v = fresh(&mut cs, m)?;
    let a = field.from_u64(2);
    let even: Vec<LinComb> = v.iter().step_by(2).cloned().collect();
    let odd: Vec<LinComb> = v.iter().skip(1).step_by(2).cloned().collect();
    split_rlc(&mut cs, &y, &hb, &even, 2, Boundary::Circular, a, "dwt.reconstruct")?;
    split_rlc(&mut cs, &y, &gb, &odd, 2, Boundary::Circular, a, "dwt.reconstruct")?;
    Ok(cs.counts().prefix("dwt.reconstruct"))
}

fn thresholding(field: &'static PrimeField, details: usize) -> Result<usize> {
    let mut cs = ConstraintSystem::new_shape(field);
    for z in fresh(&mut cs, details)? {
        dwt::threshold_constraints(&mut cs, &z, Fxp(0), None, "dwt.threshold")?;
    }
    Ok(cs.counts().prefix("dwt.threshold"))
}

fn projection(field: &'static PrimeField, m: usize, k: usize) -> Result<usize> {
    let mut cs = ConstraintSystem::new_shape(field);
    let x = fresh(&mut cs, m)?;
    let x_bar = fresh(&mut cs, m)?;
    let v = (0..k).map(|_| fresh(&mut cs, m)).collect::<Result<Vec<_>>>()?;
    pca::constraints(&mut cs, &x, &PcaVars { x_bar, v }, None, field.from_u64(2))?;
    Ok(cs.counts().prefix("pca"))
}

/// (kernel, decision, classification)
fn classifier(field: &'static PrimeField, k: usize, sv_counts: &[usize]) -> Result<(usize, usize, usize)> {
    let mut cs = ConstraintSystem::new_shape(field);
    let x = fresh(&mut cs, k)?;
    let mut classes = Vec::with_capacity(sv_counts.len());
    for &t in sv_counts {
        let sv = (0..t).map(|_| fresh(&mut cs, k)).collect::<Result<Vec<_>>>()?;
        let coef = fresh(&mut cs, t)?;
        let bias = fresh(&mut cs, 1)?.remove(0);
        classes.push(ClassVars { sv, coef, bias });
    }
    let y = fresh(&mut cs, 1)?.remove(0);
    let ch = SvmChallenges { beta: field.from_u64(2), alpha_max: field.from_u64(3) };
    svm::constraints(&mut cs, &x, &classes, Fxp::encode(0.001)?, None, &y, ch)?;
    let n = cs.counts();
    Ok((n.prefix("svm.kernel"), n.prefix("svm.decision"), n.prefix("svm.classify")))
}

/// Builds every block and tabulates it.
pub fn report(d: &Dims) -> Result<Report> {
    let field = PrimeField::ristretto();
    let (m, c, n, k, s, t) = (d.m, d.c, d.n, d.k, d.s(), d.t());
    let (kernel, decision, classify) = classifier(field, k, &d.sv_counts)?;
    let generic_kernel = (2 * n + k + 2) * t + s;
    let generic_classify = (s * s - s) * (2 * n + 5) + 2 * s - 2;
    let level = c * (c / 2 - 1) + 4;
    let rows = vec![
        Row { stage: "decomposition (per level)", ezdps: decompose_level(field, m, c)?, formula: level, generic: 8 * m - 4 * c },
        Row {
            stage: "thresholding",
            ezdps: thresholding(field, d.details)?,
            formula: (3 * n + 9) * d.details,
            generic: (5 * n + 12) * d.details,
        },
        Row { stage: "reconstruction (per level)", ezdps: reconstruct_level(field, m, c)?, formula: level, generic: 8 * m - 4 * c },
        Row { stage: "pca", ezdps: projection(field, m, k)?, formula: m, generic: m * k },
        Row { stage: "svm kernel", ezdps: kernel, formula: (2 * n + k) * t + 2 * s, generic: generic_kernel },
        Row { stage: "svm classification", ezdps: classify, formula: (3 * n + 6) * (s - 1) + 2 * s, generic: generic_classify },
        Row {
            stage: "svm total",
            ezdps: kernel + classify,
            formula: (2 * n + k) * t + 4 * s + (3 * n + 6) * (s - 1),
            generic: generic_kernel + generic_classify,
        },
    ];
    Ok(Report { dims: d.clone(), rows, svm_decision: decision })
}
