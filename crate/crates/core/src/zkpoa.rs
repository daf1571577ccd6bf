//! Proof of accuracy: the committed model labels at least K of M public
//! samples correctly, without revealing which.
//!
//! One system holds the shared model variables, one inference block per
//! sample with its label y_i as a committed witness, and the accuracy block:
//!
//! ```text
//! y'_i = t'_i                                    for i < K
//! Perm({y_i + xi i}, {y'_i + xi sigma_i})        under alpha_poa
//! Perm({t_i + xi i}, {t'_i + xi sigma_i})        under alpha_poa
//! ```
//!
//! with one sigma shared by both lists, so 4M + K constraints on top of the
//! inference blocks. sigma lists correctly classified indices first.

use crate::field::Fe;
use crate::gadgets::perm;
use crate::model::{DatasetFile, ModelFile, ModelShape};
use crate::pipeline::commit::AUX_TAG;
use crate::pipeline::{
    alloc_model, claim_bytes, commit_aux, commit_model, encode_fxps, inference_constraints, infer, require_satisfied,
    statement_transcript, Backend, Challenges, Claim, Commitments, Digest, InferenceTrace, Openings, ProofBundle,
    PublicParams,
};
use crate::r1cs::{ConstraintSystem, LinComb, Segment};
use crate::{Error, Result};

/// Fraction of matching labels.
pub fn accuracy(y: &[usize], t: &[usize]) -> Result<f64> {
    if y.len() != t.len() {
        return Err(Error::Dimension(format!("{} predictions for {} labels", y.len(), t.len())));
    }
    if y.is_empty() {
        return Err(Error::Dimension("no samples".into()));
    }
    Ok(y.iter().zip(t).filter(|(a, b)| a == b).count() as f64 / y.len() as f64)
}

/// floor(psi M), the number of samples that must be correct. A tiny slack
/// keeps values such as 0.85 * 20 from rounding down to 16.
pub fn threshold(psi: f64, big_m: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::Range(format!("accuracy {psi} outside [0, 1]")));
    }
    Ok(((psi * big_m as f64) + 1e-9).floor().min(big_m as f64) as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoaChallenges {
    pub inner: Challenges,
    pub xi: Fe,
    pub alpha_poa: Fe,
}

impl PoaChallenges {
    fn placeholder(field: &'static crate::field::PrimeField) -> PoaChallenges {
        let c = field.from_u64(2);
        PoaChallenges { inner: Challenges::placeholder(field), xi: c, alpha_poa: c }
    }

    fn derive(t: &mut crate::pipeline::transcript::Transcript) -> PoaChallenges {
        let inner = Challenges::derive(t);
        PoaChallenges { inner, xi: t.challenge(b"xi"), alpha_poa: t.challenge(b"alpha_poa") }
    }

    pub fn to_vec(&self) -> Vec<Fe> {
        let mut v = self.inner.to_vec();
        v.extend([self.xi, self.alpha_poa]);
        v
    }
}

#[derive(Clone, Debug)]
pub struct PoaTrace {
    pub samples: Vec<InferenceTrace>,
    /// 1-based, correct indices first, each part ascending.
    pub sigma: Vec<usize>,
}

impl PoaTrace {
    pub fn predictions(&self) -> Vec<usize> {
        self.samples.iter().map(|t| t.label()).collect()
    }

    pub fn correct(&self, labels: &[usize]) -> usize {
        self.predictions().iter().zip(labels).filter(|(a, b)| a == b).count()
    }
}

fn labels(d: &DatasetFile) -> Vec<usize> {
    d.samples.iter().map(|s| s.t).collect()
}

/// Inference on every sample plus the ordering sigma.
pub fn trace(model: &ModelFile, d: &DatasetFile) -> Result<PoaTrace> {
    let samples = d.samples.iter().map(|s| infer(model, &s.x)).collect::<Result<Vec<_>>>()?;
    if samples.iter().any(|t| t.svm.has_tie()) {
        return Err(Error::Refused("a sample has tied decision values".into()));
    }
    let t = labels(d);
    let ok = |i: &usize| samples[*i].label() == t[*i];
    let sigma = (0..t.len()).filter(ok).chain((0..t.len()).filter(|i| !ok(i))).map(|i| i + 1).collect();
    Ok(PoaTrace { samples, sigma })
}

fn statement_bytes(d: &DatasetFile) -> Vec<u8> {
    let mut out = (d.samples.len() as u64).to_le_bytes().to_vec();
    for s in &d.samples {
        out.extend(encode_fxps(&s.x));
        out.extend((s.t as u64).to_le_bytes());
    }
    out
}

pub fn public_inputs(field: &'static crate::field::PrimeField, d: &DatasetFile) -> Vec<Fe> {
    let mut v: Vec<Fe> = d.samples.iter().flat_map(|s| s.x.iter().map(|x| x.to_field(field))).collect();
    v.extend(d.samples.iter().map(|s| field.from_u64(s.t as u64)));
    v
}

/// The combined system. Labels y_i, sigma, Y' and T' are aux witnesses.
pub fn build(
    pp: &PublicParams,
    shape: &ModelShape,
    d: &DatasetFile,
    k: usize,
    witness: Option<(&ModelFile, &PoaTrace)>,
    ch: &PoaChallenges,
) -> Result<ConstraintSystem> {
    let big_m = d.samples.len();
    if k > big_m || big_m == 0 {
        return Err(Error::Range(format!("threshold {k} for {big_m} samples")));
    }
    if d.samples.iter().any(|s| s.x.len() != shape.m) {
        return Err(Error::Dimension("sample length differs from the model".into()));
    }
    let field = pp.field;
    let mut cs = if witness.is_some() { ConstraintSystem::new_proving(field) } else { ConstraintSystem::new_shape(field) };
    let mut xs = Vec::with_capacity(big_m);
    for s in &d.samples {
        let mut row = Vec::with_capacity(shape.m);
        for v in &s.x {
            let p = cs.alloc_public(Some(v.to_field(field)))?;
            row.push(cs.lc(p));
        }
        xs.push(row);
    }
    let mut ts = Vec::with_capacity(big_m);
    for s in &d.samples {
        let p = cs.alloc_public(Some(field.from_u64(s.t as u64)))?;
        ts.push(cs.lc(p));
    }
    let values = witness.map(|(m, _)| m.values());
    let mv = alloc_model(&mut cs, shape, values.as_deref())?;
    let tr = witness.map(|(_, t)| t);
    let mut ys = Vec::with_capacity(big_m);
    for i in 0..big_m {
        let st = tr.map(|t| &t.samples[i]);
        let y = cs.alloc_in(Segment::Aux, st.map(|t| t.label() as i128))?;
        let yl = cs.lc(y);
        inference_constraints(&mut cs, shape, &mv, &xs[i], &yl, st, &ch.inner)?;
        ys.push(yl);
    }

    let alloc_aux = |cs: &mut ConstraintSystem, f: &dyn Fn(&PoaTrace, usize) -> i128| -> Result<Vec<LinComb>> {
        (0..big_m)
            .map(|j| {
                let v = cs.alloc_in(Segment::Aux, tr.map(|t| f(t, j)))?;
                Ok(cs.lc(v))
            })
            .collect()
    };
    let sigma = alloc_aux(&mut cs, &|t, j| t.sigma[j] as i128)?;
    let y_p = alloc_aux(&mut cs, &|t, j| t.samples[t.sigma[j] - 1].label() as i128)?;
    let t_p = alloc_aux(&mut cs, &|t, j| d.samples[t.sigma[j] - 1].t as i128)?;
    for j in 0..k {
        cs.enforce_eq(y_p[j].clone(), t_p[j].clone(), "poa.match")?;
    }
    let bind = |vals: &[LinComb], idx: &[LinComb]| -> Vec<LinComb> {
        vals.iter().zip(idx).map(|(v, i)| v.clone() + i.scale(ch.xi)).collect()
    };
    let index: Vec<LinComb> = (1..=big_m).map(|i| cs.constant(i as i128)).collect();
    let (y_tilde, y_bar) = (bind(&ys, &index), bind(&y_p, &sigma));
    let (t_tilde, t_bar) = (bind(&ts, &index), bind(&t_p, &sigma));
    perm(&mut cs, &y_tilde, &y_bar, ch.alpha_poa, "poa.perm_y")?;
    perm(&mut cs, &t_tilde, &t_bar, ch.alpha_poa, "poa.perm_t")?;
    cs.freeze();
    Ok(cs)
}

/// Proves that at least `k` samples are classified correctly. Refuses when
/// the model does worse.
pub fn prove(
    model: &ModelFile,
    secret: &[u8; 32],
    d: &DatasetFile,
    k: usize,
    pp: &PublicParams,
    backend: &dyn Backend,
) -> Result<ProofBundle> {
    let tr = trace(model, d)?;
    let correct = tr.correct(&labels(d));
    if correct < k {
        return Err(Error::Refused(format!("{correct} of {} samples are correct, {k} claimed", d.samples.len())));
    }
    prove_trace(model, secret, d, k, &tr, pp, backend, true)
}

/// Proves a given trace; with `check` off a forged trace goes through.
#[allow(clippy::too_many_arguments)]
pub fn prove_trace(
    model: &ModelFile,
    secret: &[u8; 32],
    d: &DatasetFile,
    k: usize,
    tr: &PoaTrace,
    pp: &PublicParams,
    backend: &dyn Backend,
    check: bool,
) -> Result<ProofBundle> {
    let (model_cm, model_open) = commit_model(model, secret, pp)?;
    let shape = model.shape();
    let claim = Claim::Accuracy { k: u32::try_from(k).map_err(|_| Error::Range("threshold".into()))? };
    let statement = statement_bytes(d);
    let first = build(pp, &shape, d, k, Some((model, tr)), &PoaChallenges::placeholder(pp.field))?;
    let context = [&model_cm[..], &claim_bytes(claim), &statement].concat();
    let aux_open = commit_aux(&first, secret, &context)?;
    drop(first);
    let aux_cm = aux_open.digest(AUX_TAG);
    let mut t = statement_transcript(pp, &shape, claim, &statement, &model_cm, &aux_cm);
    let ch = PoaChallenges::derive(&mut t);
    let cs = build(pp, &shape, d, k, Some((model, tr)), &ch)?;
    if check {
        require_satisfied(&cs)?;
    }
    let payload = backend.prove(&cs, Openings { model: &model_open, aux: &aux_open })?;
    Ok(ProofBundle { claim, shape, model_cm, aux_cm, challenges: ch.to_vec(), backend: backend.name().into(), payload })
}

/// Accepts iff the bundle shows at least `k` correct predictions on `d` by
/// the model committed under `cm`.
pub fn verify(cm: &Digest, d: &DatasetFile, k: usize, bundle: &ProofBundle, pp: &PublicParams, backend: &dyn Backend) -> bool {
    let Claim::Accuracy { k: proved } = bundle.claim else {
        return false;
    };
    let proved = proved as usize;
    if proved < k || proved > d.samples.len() || d.samples.is_empty() {
        return false;
    }
    if bundle.model_cm != *cm || bundle.backend != backend.name() {
        return false;
    }
    let shape = &bundle.shape;
    if shape.validate().is_err() || shape.num_values() > pp.max_model_size || d.samples.iter().any(|s| s.t == 0) {
        return false;
    }
    let statement = statement_bytes(d);
    let mut t = statement_transcript(pp, shape, bundle.claim, &statement, cm, &bundle.aux_cm);
    let ch = PoaChallenges::derive(&mut t);
    if ch.to_vec() != bundle.challenges {
        return false;
    }
    let Ok(cs) = build(pp, shape, d, proved, None, &ch) else {
        return false;
    };
    let header = shape.header(pp.field);
    let cms = Commitments { model: cm, model_header: &header, aux: &bundle.aux_cm };
    backend.verify(&cs, &public_inputs(pp.field, d), cms, &bundle.payload)
}

/// Accuracy-block constraints for M samples and threshold K.
pub fn block_count(big_m: usize, k: usize) -> usize {
    4 * big_m + k
}
