//! Setup, model commitment, inference, and the commit–prove–verify protocol.
//!
//! Proving runs inference, commits to the auxiliary witnesses, derives the
//! challenges from a transcript over
//!
//! ```text
//! pp | shape | claim | x | model commitment | aux commitment
//! ```
//!
//! and builds the full constraint system under those challenges. The aux
//! values are collected from a first build under placeholder challenges;
//! none of them depend on the challenges.

pub mod backend;
pub mod commit;
pub mod proof;
pub mod transcript;

pub use backend::{Backend, Commitments, Openings, ReferenceBackend};
pub use commit::{Digest, Opening};
pub use proof::{Claim, ProofBundle};

use crate::dwt::{self, DwtTrace, DwtVars};
use crate::field::{Fe, PrimeField};
use crate::fixed::Fxp;
use crate::model::{ModelFile, ModelShape};
use crate::pca::{self, PcaTrace, PcaVars};
use crate::r1cs::{ConstraintSystem, LinComb, Satisfaction, Segment};
use crate::svm::{self, ClassVars, SvmChallenges, SvmTrace};
use crate::{Error, Result};
use commit::{derive_blinding, AUX_TAG, MODEL_TAG};
use transcript::Transcript;

pub const DEFAULT_SECURITY: u32 = 128;
pub const DEFAULT_MAX_MODEL_SIZE: usize = 1 << 24;
const DOMAIN: &[u8] = b"ezdps/v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub security: u32,
    /// Upper bound on committed parameters.
    pub max_model_size: usize,
    /// Bit width of compared values.
    pub n_bits: u32,
    pub field: &'static PrimeField,
}

/// Only 128-bit security is supported; it selects the 253-bit ristretto
/// scalar field.
pub fn setup(security: u32, max_model_size: usize) -> Result<PublicParams> {
    if security != DEFAULT_SECURITY {
        return Err(Error::Unsupported(format!("security level {security} (only 128 is supported)")));
    }
    Ok(PublicParams { security, max_model_size, n_bits: svm::N_BITS, field: PrimeField::ristretto() })
}

impl PublicParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(self.security.to_le_bytes());
        out.extend(self.n_bits.to_le_bytes());
        out.extend((self.max_model_size as u64).to_le_bytes());
        let mut p = self.field.modulus().to_bytes_le();
        p.resize(32, 0);
        out.extend(p);
        out.extend(MODEL_TAG);
        out.extend(AUX_TAG);
        out
    }

    fn check_model(&self, model: &ModelFile) -> Result<()> {
        model.validate()?;
        if model.field()? != self.field {
            return Err(Error::Model("model field differs from the public parameters".into()));
        }
        if model.shape().num_values() > self.max_model_size {
            return Err(Error::Model("model exceeds the maximum size".into()));
        }
        Ok(())
    }

    fn check_shape(&self, shape: &ModelShape) -> bool {
        shape.validate().is_ok() && shape.num_values() <= self.max_model_size
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferenceTrace {
    pub dwt: DwtTrace,
    pub pca: PcaTrace,
    pub svm: SvmTrace,
}

impl InferenceTrace {
    pub fn label(&self) -> usize {
        self.svm.y
    }
}

/// Fixed-point inference: denoise, project, classify.
pub fn infer(model: &ModelFile, x: &[Fxp]) -> Result<InferenceTrace> {
    if x.len() != model.pca.m {
        return Err(Error::Dimension(format!("sample has {} values, model expects {}", x.len(), model.pca.m)));
    }
    let dwt = dwt::denoise(x, &model.dwt)?;
    let pca = pca::project(dwt.output(), &model.pca)?;
    let svm = svm::infer(&pca.x_tilde, &model.svm)?;
    Ok(InferenceTrace { dwt, pca, svm })
}

pub fn commit_model(model: &ModelFile, r: &[u8; 32], pp: &PublicParams) -> Result<(Digest, Opening)> {
    pp.check_model(model)?;
    let o = Opening { payload: model.canonical_bytes()?, r: *r };
    Ok((o.digest(MODEL_TAG), o))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Challenges {
    pub alpha: Fe,
    pub alpha_bar: Fe,
    pub alpha_pca: Fe,
    pub beta: Fe,
    pub alpha_max: Fe,
}

impl Challenges {
    pub const COUNT: usize = 5;

    /// Stand-ins for the first build, which only collects aux values.
    pub fn placeholder(field: &'static PrimeField) -> Challenges {
        let c = field.from_u64(2);
        Challenges { alpha: c, alpha_bar: c, alpha_pca: c, beta: c, alpha_max: c }
    }

    pub(crate) fn derive(t: &mut Transcript) -> Challenges {
        Challenges {
            alpha: t.challenge(b"alpha"),
            alpha_bar: t.challenge(b"alpha_bar"),
            alpha_pca: t.challenge(b"alpha_pca"),
            beta: t.challenge(b"beta"),
            alpha_max: t.challenge(b"alpha_max"),
        }
    }

    pub fn to_vec(&self) -> Vec<Fe> {
        vec![self.alpha, self.alpha_bar, self.alpha_pca, self.beta, self.alpha_max]
    }

    fn svm(&self) -> SvmChallenges {
        SvmChallenges { beta: self.beta, alpha_max: self.alpha_max }
    }
}

/// Model parameters as circuit operands.
#[derive(Clone, Debug)]
pub struct ModelVars {
    pub dwt: DwtVars,
    pub pca: PcaVars,
    pub svm: Vec<ClassVars>,
}

struct ModelAlloc<'a> {
    values: Option<&'a [Fxp]>,
    pos: usize,
}

impl ModelAlloc<'_> {
    fn take(&mut self, cs: &mut ConstraintSystem, n: usize) -> Result<Vec<LinComb>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let v = self.values.map(|v| v[self.pos].raw() as i128);
            self.pos += 1;
            let w = cs.alloc_in(Segment::Model, v)?;
            out.push(cs.lc(w));
        }
        Ok(out)
    }
}

/// Allocates every model parameter in the Model segment, in commitment order.
pub fn alloc_model(cs: &mut ConstraintSystem, shape: &ModelShape, values: Option<&[Fxp]>) -> Result<ModelVars> {
    if values.is_some_and(|v| v.len() != shape.num_values()) {
        return Err(Error::Dimension("model values do not match the shape".into()));
    }
    let mut a = ModelAlloc { values, pos: 0 };
    let (c, m, k) = (shape.c, shape.m, shape.k);
    let dwt = DwtVars { h: a.take(cs, c)?, g: a.take(cs, c)?, h_bar: a.take(cs, c)?, g_bar: a.take(cs, c)? };
    let x_bar = a.take(cs, m)?;
    let v = (0..k).map(|_| a.take(cs, m)).collect::<Result<_>>()?;
    let mut classes = Vec::with_capacity(shape.s);
    for &t in &shape.sv_counts {
        let sv = (0..t).map(|_| a.take(cs, k)).collect::<Result<_>>()?;
        let coef = a.take(cs, t)?;
        let bias = a.take(cs, 1)?.remove(0);
        classes.push(ClassVars { sv, coef, bias });
    }
    Ok(ModelVars { dwt, pca: PcaVars { x_bar, v }, svm: classes })
}

/// DWT, PCA and SVM constraints for one sample with claimed label `y`.
pub fn inference_constraints(
    cs: &mut ConstraintSystem,
    shape: &ModelShape,
    mv: &ModelVars,
    x: &[LinComb],
    y: &LinComb,
    trace: Option<&InferenceTrace>,
    ch: &Challenges,
) -> Result<()> {
    let xhat = dwt::constraints(cs, x, &mv.dwt, &shape.dwt_layout(), trace.map(|t| &t.dwt), ch.alpha, ch.alpha_bar)?;
    let xt = pca::constraints(cs, &xhat, &mv.pca, trace.map(|t| &t.pca), ch.alpha_pca)?;
    svm::constraints(cs, &xt, &mv.svm, shape.gamma, trace.map(|t| &t.svm), y, ch.svm())
}

pub(crate) fn encode_fxps(x: &[Fxp]) -> Vec<u8> {
    x.iter().flat_map(|v| v.raw().to_le_bytes()).collect()
}

pub(crate) fn claim_bytes(c: Claim) -> [u8; 5] {
    let (kind, v) = match c {
        Claim::Inference { y } => (0u8, y),
        Claim::Accuracy { k } => (1u8, k),
    };
    let mut out = [kind, 0, 0, 0, 0];
    out[1..].copy_from_slice(&v.to_le_bytes());
    out
}

/// Transcript state after absorbing everything the challenges must follow.
pub(crate) fn statement_transcript(
    pp: &PublicParams,
    shape: &ModelShape,
    claim: Claim,
    statement: &[u8],
    model_cm: &Digest,
    aux_cm: &Digest,
) -> Transcript {
    let mut t = Transcript::new(DOMAIN, pp.field);
    t.absorb(b"pp", &pp.to_bytes());
    t.absorb(b"shape", &shape.to_bytes());
    t.absorb(b"claim", &claim_bytes(claim));
    t.absorb(b"statement", statement);
    t.absorb(b"model_cm", model_cm);
    t.absorb(b"aux_cm", aux_cm);
    t
}

pub fn public_inputs(field: &'static PrimeField, x: &[Fxp], y: usize) -> Vec<Fe> {
    x.iter().map(|v| v.to_field(field)).chain(std::iter::once(field.from_u64(y as u64))).collect()
}

/// The inference system. With `witness` set it is built in proving mode.
pub fn build_inference(
    pp: &PublicParams,
    shape: &ModelShape,
    x: &[Fxp],
    y: usize,
    witness: Option<(&ModelFile, &InferenceTrace)>,
    ch: &Challenges,
) -> Result<ConstraintSystem> {
    if x.len() != shape.m {
        return Err(Error::Dimension(format!("sample has {} values, model expects {}", x.len(), shape.m)));
    }
    let mut cs = if witness.is_some() { ConstraintSystem::new_proving(pp.field) } else { ConstraintSystem::new_shape(pp.field) };
    let mut xs = Vec::with_capacity(x.len());
    for v in x {
        let p = cs.alloc_public(Some(v.to_field(pp.field)))?;
        xs.push(cs.lc(p));
    }
    let yv = cs.alloc_public(Some(pp.field.from_u64(y as u64)))?;
    let values = witness.map(|(m, _)| m.values());
    let mv = alloc_model(&mut cs, shape, values.as_deref())?;
    let yl = cs.lc(yv);
    inference_constraints(&mut cs, shape, &mv, &xs, &yl, witness.map(|(_, t)| t), ch)?;
    cs.freeze();
    Ok(cs)
}

/// Commits to the aux segment of a first build and derives the challenges.
pub(crate) fn commit_aux(
    first: &ConstraintSystem,
    secret: &[u8; 32],
    context: &[u8],
) -> Result<Opening> {
    let payload = backend::aux_payload(first)?;
    Ok(Opening { payload, r: derive_blinding(secret, context) })
}

pub(crate) fn require_satisfied(cs: &ConstraintSystem) -> Result<()> {
    match cs.check()? {
        Satisfaction::Satisfied => Ok(()),
        Satisfaction::Violated { label, .. } => Err(Error::Unsatisfied(label)),
    }
}

/// Runs inference and proves its label. Returns the label with the proof.
pub fn prove(
    model: &ModelFile,
    secret: &[u8; 32],
    x: &[Fxp],
    pp: &PublicParams,
    backend: &dyn Backend,
) -> Result<(usize, ProofBundle)> {
    let trace = infer(model, x)?;
    if trace.svm.has_tie() {
        return Err(Error::Refused("two classes share the winning decision value".into()));
    }
    let y = trace.label();
    Ok((y, prove_trace(model, secret, x, y, &trace, pp, backend, true)?))
}

/// Proves a given (possibly dishonest) trace and label. With `check` off the
/// satisfaction guard is skipped, which is only useful for exercising the
/// verifier.
#[allow(clippy::too_many_arguments)]
pub fn prove_trace(
    model: &ModelFile,
    secret: &[u8; 32],
    x: &[Fxp],
    y: usize,
    trace: &InferenceTrace,
    pp: &PublicParams,
    backend: &dyn Backend,
    check: bool,
) -> Result<ProofBundle> {
    let (model_cm, model_open) = commit_model(model, secret, pp)?;
    let shape = model.shape();
    let claim = Claim::Inference { y: u32::try_from(y).map_err(|_| Error::Range("label".into()))? };
    let statement = encode_fxps(x);
    let first = build_inference(pp, &shape, x, y, Some((model, trace)), &Challenges::placeholder(pp.field))?;
    let context = [&model_cm[..], &claim_bytes(claim), &statement].concat();
    let aux_open = commit_aux(&first, secret, &context)?;
    drop(first);
    let aux_cm = aux_open.digest(AUX_TAG);
    let mut t = statement_transcript(pp, &shape, claim, &statement, &model_cm, &aux_cm);
    let ch = Challenges::derive(&mut t);
    let cs = build_inference(pp, &shape, x, y, Some((model, trace)), &ch)?;
    if check {
        require_satisfied(&cs)?;
    }
    let payload = backend.prove(&cs, Openings { model: &model_open, aux: &aux_open })?;
    Ok(ProofBundle {
        claim,
        shape,
        model_cm,
        aux_cm,
        challenges: ch.to_vec(),
        backend: backend.name().to_string(),
        payload,
    })
}

/// Accepts iff the bundle proves that the model committed under `cm`
/// labels `x` as `y`. Malformed bundles are rejected, never an error.
pub fn verify(
    cm: &Digest,
    x: &[Fxp],
    y: usize,
    bundle: &ProofBundle,
    pp: &PublicParams,
    backend: &dyn Backend,
) -> bool {
    let claim = Claim::Inference { y: y as u32 };
    if y == 0 || bundle.claim != claim || u32::try_from(y).is_err() {
        return false;
    }
    if bundle.model_cm != *cm || bundle.backend != backend.name() {
        return false;
    }
    let shape = &bundle.shape;
    if !pp.check_shape(shape) || shape.m != x.len() || y > shape.s {
        return false;
    }
    let statement = encode_fxps(x);
    let mut t = statement_transcript(pp, shape, claim, &statement, cm, &bundle.aux_cm);
    let ch = Challenges::derive(&mut t);
    if ch.to_vec() != bundle.challenges {
        return false;
    }
    let Ok(cs) = build_inference(pp, shape, x, y, None, &ch) else {
        return false;
    };
    let header = shape.header(pp.field);
    let cms = Commitments { model: cm, model_header: &header, aux: &bundle.aux_cm };
    backend.verify(&cs, &public_inputs(pp.field, x, y), cms, &bundle.payload)
}
