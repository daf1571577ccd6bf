//! Model, sample and dataset files.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dwt::DwtParams;
use crate::field::{PrimeField, RISTRETTO_ORDER};
use crate::fixed::{Fxp, FRAC_BITS};
use crate::pca::PcaParams;
use crate::svm::SvmParams;
use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

/// Largest accepted support-vector coordinate, raw. Keeps squared distances
/// to in-range inputs well inside the kernel's exponent width.
pub const SV_BOUND_RAW: i64 = 1 << 56;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub field_modulus: String,
    pub fxp_frac_bits: u32,
    pub dwt: DwtParams,
    pub pca: PcaParams,
    pub svm: SvmParams,
}

/// Public dimensions of a model. Everything here is known to the verifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub c: usize,
    pub levels: usize,
    pub m: usize,
    pub k: usize,
    pub s: usize,
    pub sv_counts: Vec<usize>,
    pub eta: Fxp,
    pub gamma: Fxp,
}

impl ModelShape {
    pub fn t(&self) -> usize {
        self.sv_counts.iter().sum()
    }

    /// Number of committed parameters.
    pub fn num_values(&self) -> usize {
        4 * self.c + self.m + self.k * self.m + self.sv_counts.iter().map(|t| t * (self.k + 1) + 1).sum::<usize>()
    }

    /// Structure-only DWT parameters (no taps), enough to lay out constraints.
    pub fn dwt_layout(&self) -> DwtParams {
        DwtParams { c: self.c, h: vec![], g: vec![], h_bar: vec![], g_bar: vec![], eta: self.eta, levels: self.levels }
    }

    /// Inverse of [`to_bytes`](Self::to_bytes); the whole input must be consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<ModelShape> {
        let mut r = Reader { bytes, pos: 0 };
        let shape = Self::read(&mut r)?;
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after model shape".into()));
        }
        Ok(shape)
    }

    fn read(r: &mut Reader<'_>) -> Result<ModelShape> {
        let c = r.u32()? as usize;
        let levels = r.u32()? as usize;
        let m = r.u32()? as usize;
        let k = r.u32()? as usize;
        let s = r.u32()? as usize;
        if c > 64 || levels > 31 || s > 1 << 16 || m > 1 << 24 || k > m {
            return Err(Error::Format("implausible model dimensions".into()));
        }
        let sv_counts = (0..s).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        if sv_counts.iter().any(|t| *t > 1 << 20) {
            return Err(Error::Format("implausible support vector count".into()));
        }
        let eta = Fxp(r.i64()?);
        let gamma = Fxp(r.i64()?);
        Ok(ModelShape { c, levels, m, k, s, sv_counts, eta, gamma })
    }

    /// Structural checks a verifier can make without the model.
    pub fn validate(&self) -> Result<()> {
        self.dwt_layout().check_length(self.m).map_err(|e| Error::Format(e.to_string()))?;
        if self.c < 2 || self.c % 2 != 0 || self.k == 0 || self.s == 0 || self.sv_counts.contains(&0) {
            return Err(Error::Format("invalid model shape".into()));
        }
        if self.eta.raw() < 0 || self.gamma.raw() < 0 {
            return Err(Error::Format("negative threshold or kernel scale".into()));
        }
        Ok(())
    }

    /// Public prefix of the canonical model encoding: shape then modulus.
    pub fn header(&self, field: &PrimeField) -> Vec<u8> {
        let mut out = self.to_bytes();
        let mut modulus = field.modulus().to_bytes_le();
        modulus.resize(32, 0);
        out.extend(modulus);
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for d in [self.c, self.levels, self.m, self.k, self.s] {
            out.extend((d as u32).to_le_bytes());
        }
        for t in &self.sv_counts {
            out.extend((*t as u32).to_le_bytes());
        }
        out.extend(self.eta.raw().to_le_bytes());
        out.extend(self.gamma.raw().to_le_bytes());
        out
    }
}

fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("{what}: {e}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

impl ModelFile {
    pub fn new(dwt: DwtParams, pca: PcaParams, svm: SvmParams) -> ModelFile {
        ModelFile {
            version: MODEL_VERSION,
            field_modulus: RISTRETTO_ORDER.to_string(),
            fxp_frac_bits: FRAC_BITS,
            dwt,
            pca,
            svm,
        }
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<ModelFile> {
        let m: ModelFile = parse_json(text, "model file")?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        Self::from_json(&read(path)?)
    }

    /// Parses with [`validate_structure`](Self::validate_structure) only.
    pub fn load_structure(path: &Path) -> Result<ModelFile> {
        let m: ModelFile = parse_json(&read(path)?, "model file")?;
        m.validate_structure()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        self.dwt.check_length(self.pca.m).map_err(|e| Error::Model(e.to_string()))
    }

    /// Every check except the signal-length rule, enough for constraint
    /// accounting at arbitrary dimensions.
    pub fn validate_structure(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported model version {}", self.version)));
        }
        if self.fxp_frac_bits != FRAC_BITS {
            return Err(Error::Model(format!("fxp_frac_bits must be {FRAC_BITS}, got {}", self.fxp_frac_bits)));
        }
        self.field()?;
        self.dwt.validate()?;
        self.pca.validate()?;
        self.svm.validate(self.pca.k)?;
        let too_big = self.svm.classes.iter().flat_map(|c| c.sv.iter().flatten()).any(|v| v.raw().abs() >= SV_BOUND_RAW);
        if too_big {
            return Err(Error::Model("support vector coordinate outside the kernel exponent range".into()));
        }
        Ok(())
    }

    pub fn field(&self) -> Result<&'static PrimeField> {
        PrimeField::from_decimal(&self.field_modulus)
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            c: self.dwt.c,
            levels: self.dwt.levels,
            m: self.pca.m,
            k: self.pca.k,
            s: self.svm.s,
            sv_counts: self.svm.sv_counts(),
            eta: self.dwt.eta,
            gamma: self.svm.gamma,
        }
    }

    /// All committed parameters: filters, PCA mean and basis, then per class
    /// support vectors, coefficients and bias.
    pub fn values(&self) -> Vec<Fxp> {
        self.dwt.model_values().chain(self.pca.model_values()).chain(self.svm.model_values()).collect()
    }

    /// Canonical encoding: shape, modulus (32 bytes), then every value as i64,
    /// little-endian throughout.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        let mut out = self.shape().header(self.field()?);
        for v in self.values() {
            out.extend(v.raw().to_le_bytes());
        }
        Ok(out)
    }

    /// Inverse of [`canonical_bytes`](Self::canonical_bytes).
    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<ModelFile> {
        let mut r = Reader { bytes, pos: 0 };
        let shape = ModelShape::read(&mut r)?;
        let ModelShape { c, levels, m, k, s, eta, gamma, .. } = shape.clone();
        let modulus = num_bigint::BigUint::from_bytes_le(r.take(32)?);
        if shape.num_values().checked_mul(8) != Some(bytes.len() - r.pos) {
            return Err(Error::Format("model payload length does not match its dimensions".into()));
        }
        let mut vals = (0..shape.num_values()).map(|_| r.i64().map(Fxp));
        let mut take = |n: usize| -> Result<Vec<Fxp>> { (&mut vals).take(n).collect() };
        let dwt = DwtParams { c, h: take(c)?, g: take(c)?, h_bar: take(c)?, g_bar: take(c)?, eta, levels };
        let x_bar = take(m)?;
        let v = (0..k).map(|_| take(m)).collect::<Result<_>>()?;
        let pca = PcaParams { m, k, x_bar, v };
        let mut classes = Vec::with_capacity(s);
        for &t in &shape.sv_counts {
            let sv = (0..t).map(|_| take(k)).collect::<Result<_>>()?;
            let coef = take(t)?;
            let bias = take(1)?[0];
            classes.push(crate::svm::SvmClass { sv, coef, bias });
        }
        let model = ModelFile {
            version: MODEL_VERSION,
            field_modulus: modulus.to_string(),
            fxp_frac_bits: FRAC_BITS,
            dwt,
            pca,
            svm: SvmParams { s, gamma, classes },
        };
        model.validate()?;
        Ok(model)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| Error::Format("truncated model encoding".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub m: usize,
    pub x: Vec<Fxp>,
}

impl SampleFile {
    pub fn new(x: Vec<Fxp>) -> SampleFile {
        SampleFile { m: x.len(), x }
    }

    pub fn from_json(text: &str) -> Result<SampleFile> {
        let s: SampleFile = parse_json(text, "sample file")?;
        if s.x.len() != s.m {
            return Err(Error::Format(format!("sample declares m={} but has {} values", s.m, s.x.len())));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<SampleFile> {
        Self::from_json(&read(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sample serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledSample {
    pub x: Vec<Fxp>,
    /// Ground-truth class, 1-based.
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    #[serde(rename = "M")]
    pub big_m: usize,
    pub samples: Vec<LabeledSample>,
}

impl DatasetFile {
    pub fn new(samples: Vec<LabeledSample>) -> DatasetFile {
        DatasetFile { big_m: samples.len(), samples }
    }

    pub fn from_json(text: &str) -> Result<DatasetFile> {
        let d: DatasetFile = parse_json(text, "dataset file")?;
        if d.samples.len() != d.big_m {
            return Err(Error::Format(format!("dataset declares M={} but has {} samples", d.big_m, d.samples.len())));
        }
        if d.big_m == 0 {
            return Err(Error::Format("empty dataset".into()));
        }
        if d.samples.iter().any(|s| s.t == 0) {
            return Err(Error::Format("labels are 1-based".into()));
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<DatasetFile> {
        Self::from_json(&read(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serializes")
    }
}
