//! Rank-1 constraint systems: `<a,z> * <b,z> = <c,z>` with z = (public, 1, witness).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::ops::{Add, Mul, Neg, Sub};

use crate::field::{Fe, PrimeField};
use crate::{Error, Result};

/// Ordering follows the layout of z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Public(u32),
    One,
    Witness(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Public,
    Witness,
}

/// What a witness variable is bound to. Model and aux variables are the ones
/// opened against the two commitments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Model,
    Aux,
    Internal,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinComb {
    terms: Vec<(Var, Fe)>,
}

impl LinComb {
    pub fn zero() -> LinComb {
        LinComb { terms: Vec::new() }
    }

    pub fn term(v: Var, c: Fe) -> LinComb {
        LinComb { terms: vec![(v, c)] }
    }

    pub fn constant(c: Fe) -> LinComb {
        LinComb::term(Var::One, c)
    }

    pub fn push(&mut self, v: Var, c: Fe) {
        self.terms.push((v, c));
    }

    pub fn with(mut self, v: Var, c: Fe) -> LinComb {
        self.push(v, c);
        self
    }

    pub fn add_scaled(&mut self, other: &LinComb, c: Fe) {
        self.terms.extend(other.terms.iter().map(|(v, k)| (*v, *k * c)));
    }

    pub fn scale(&self, c: Fe) -> LinComb {
        LinComb { terms: self.terms.iter().map(|(v, k)| (*v, *k * c)).collect() }
    }

    pub fn terms(&self) -> &[(Var, Fe)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sorted by variable, duplicates merged, zero coefficients dropped.
    pub fn normalized(mut self) -> LinComb {
        if self.terms.len() > 1 {
            self.terms.sort_by_key(|t| t.0);
        }
        let mut out: Vec<(Var, Fe)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| !t.1.is_zero());
        LinComb { terms: out }
    }

    fn render(&self, out: &mut String) {
        if self.terms.is_empty() {
            out.push('0');
        }
        for (i, (v, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                out.push_str(" + ");
            }
            let name = match v {
                Var::Public(j) => format!("x{j}"),
                Var::One => "one".to_string(),
                Var::Witness(j) => format!("w{j}"),
            };
            let _ = write!(out, "{}*{}", c.to_signed_string(), name);
        }
    }
}

impl Add for LinComb {
    type Output = LinComb;
    fn add(mut self, rhs: LinComb) -> LinComb {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for LinComb {
    type Output = LinComb;
    fn sub(mut self, rhs: LinComb) -> LinComb {
        self.terms.extend(rhs.terms.into_iter().map(|(v, c)| (v, -c)));
        self
    }
}

impl Neg for LinComb {
    type Output = LinComb;
    fn neg(self) -> LinComb {
        LinComb { terms: self.terms.into_iter().map(|(v, c)| (v, -c)).collect() }
    }
}

impl Mul<Fe> for LinComb {
    type Output = LinComb;
    fn mul(self, rhs: Fe) -> LinComb {
        self.scale(rhs)
    }
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub a: LinComb,
    pub b: LinComb,
    pub c: LinComb,
    pub label: Box<str>,
}

/// A full assignment z = (public, 1, witness).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub public: Vec<Fe>,
    pub witness: Vec<Fe>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.public.len() + 1 + self.witness.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, v: Var, field: &'static PrimeField) -> Fe {
        match v {
            Var::Public(i) => self.public[i as usize],
            Var::One => field.one(),
            Var::Witness(i) => self.witness[i as usize],
        }
    }

    pub fn eval(&self, lc: &LinComb, field: &'static PrimeField) -> Fe {
        let mut acc = field.zero();
        for (v, c) in lc.terms() {
            acc += *c * self.value(*v, field);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Satisfaction {
    Satisfied,
    Violated { index: usize, label: String },
}

impl Satisfaction {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, Satisfaction::Satisfied)
    }
}

/// Constraint totals keyed by label path with bracketed indices removed,
/// e.g. `dwt.threshold[3].gt` counts under `dwt.threshold.gt`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub total: usize,
    pub by_path: BTreeMap<String, usize>,
}

impl Counts {
    /// Sum over every path equal to `prefix` or below it.
    pub fn prefix(&self, prefix: &str) -> usize {
        self.by_path
            .iter()
            .filter(|(k, _)| {
                k.as_str() == prefix
                    || (k.starts_with(prefix) && k.as_bytes().get(prefix.len()) == Some(&b'.'))
            })
            .map(|(_, n)| n)
            .sum()
    }

    /// Totals by the first `depth` path segments.
    pub fn grouped(&self, depth: usize) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for (k, n) in &self.by_path {
            let key: Vec<&str> = k.split('.').take(depth).collect();
            *out.entry(key.join(".")).or_default() += n;
        }
        out
    }
}

pub fn label_path(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    let mut depth = 0usize;
    for ch in label.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            _ if depth == 0 => out.push(ch),
            _ => {}
        }
    }
    out
}

/// Builder for a constraint system. In proving mode every allocation carries
/// its value; in shape mode values are ignored, which is how a verifier
/// rebuilds the same system without the witness.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    field: &'static PrimeField,
    proving: bool,
    public: Vec<Fe>,
    num_public: u32,
    witness: Vec<Fe>,
    segments: Vec<Segment>,
    segment: Segment,
    constraints: Vec<Constraint>,
    frozen: bool,
}

impl ConstraintSystem {
    pub fn new_proving(field: &'static PrimeField) -> ConstraintSystem {
        Self::new(field, true)
    }

    pub fn new_shape(field: &'static PrimeField) -> ConstraintSystem {
        Self::new(field, false)
    }

    fn new(field: &'static PrimeField, proving: bool) -> ConstraintSystem {
        ConstraintSystem {
            field,
            proving,
            public: Vec::new(),
            num_public: 0,
            witness: Vec::new(),
            segments: Vec::new(),
            segment: Segment::Internal,
            constraints: Vec::new(),
            frozen: false,
        }
    }

    pub fn field(&self) -> &'static PrimeField {
        self.field
    }

    pub fn is_proving(&self) -> bool {
        self.proving
    }

    pub fn fe(&self, v: i128) -> Fe {
        self.field.from_i128(v)
    }

    pub fn one(&self) -> Fe {
        self.field.one()
    }

    pub fn lc(&self, v: Var) -> LinComb {
        LinComb::term(v, self.field.one())
    }

    pub fn constant(&self, v: i128) -> LinComb {
        LinComb::constant(self.fe(v))
    }

    /// Segment assigned to subsequent witness allocations.
    pub fn set_segment(&mut self, s: Segment) -> Segment {
        std::mem::replace(&mut self.segment, s)
    }

    pub fn alloc(&mut self, kind: VarKind, value: Option<Fe>) -> Result<Var> {
        match kind {
            VarKind::Public => self.alloc_public(value),
            VarKind::Witness => self.alloc_witness(value),
        }
    }

    pub fn alloc_public(&mut self, value: Option<Fe>) -> Result<Var> {
        self.check_open()?;
        if self.proving {
            self.public.push(self.require(value)?);
        }
        self.num_public += 1;
        Ok(Var::Public(self.num_public - 1))
    }

    pub fn alloc_witness(&mut self, value: Option<Fe>) -> Result<Var> {
        self.check_open()?;
        if self.proving {
            self.witness.push(self.require(value)?);
        }
        self.segments.push(self.segment);
        Ok(Var::Witness(self.segments.len() as u32 - 1))
    }

    /// Witness allocation in a given segment, leaving the current one alone.
    pub fn alloc_in(&mut self, seg: Segment, value: Option<i128>) -> Result<Var> {
        let prev = self.set_segment(seg);
        let v = self.alloc_int(value);
        self.set_segment(prev);
        v
    }

    /// Witness allocation from a signed integer value.
    pub fn alloc_int(&mut self, value: Option<i128>) -> Result<Var> {
        let v = value.map(|v| self.fe(v));
        self.alloc_witness(v)
    }

    fn require(&self, value: Option<Fe>) -> Result<Fe> {
        value.ok_or_else(|| Error::System("missing witness value while proving".into()))
    }

    fn check_open(&self) -> Result<()> {
        if self.frozen {
            return Err(Error::System("system is frozen".into()));
        }
        Ok(())
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn num_public(&self) -> usize {
        self.num_public as usize
    }

    pub fn num_witness(&self) -> usize {
        self.segments.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn check_var(&self, v: Var) -> Result<()> {
        let ok = match v {
            Var::Public(i) => i < self.num_public,
            Var::One => true,
            Var::Witness(i) => (i as usize) < self.segments.len(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::System(format!("unallocated variable {v:?}")))
        }
    }

    pub fn enforce(
        &mut self,
        a: LinComb,
        b: LinComb,
        c: LinComb,
        label: impl Into<String>,
    ) -> Result<()> {
        self.check_open()?;
        for lc in [&a, &b, &c] {
            for (v, _) in lc.terms() {
                self.check_var(*v)?;
            }
        }
        self.constraints.push(Constraint {
            a: a.normalized(),
            b: b.normalized(),
            c: c.normalized(),
            label: label.into().into_boxed_str(),
        });
        Ok(())
    }

    /// `lhs = rhs` as the single constraint `(lhs - rhs) * 1 = 0`.
    pub fn enforce_eq(&mut self, lhs: LinComb, rhs: LinComb, label: impl Into<String>) -> Result<()> {
        let one = self.lc(Var::One);
        self.enforce(lhs - rhs, one, LinComb::zero(), label)
    }

    /// Value of a variable while proving; `None` in shape mode.
    pub fn value(&self, v: Var) -> Option<Fe> {
        if !self.proving {
            return None;
        }
        Some(match v {
            Var::Public(i) => self.public[i as usize],
            Var::One => self.field.one(),
            Var::Witness(i) => self.witness[i as usize],
        })
    }

    pub fn eval(&self, lc: &LinComb) -> Option<Fe> {
        if !self.proving {
            return None;
        }
        let mut acc = self.field.zero();
        for (v, c) in lc.terms() {
            acc += *c * self.value(*v)?;
        }
        Some(acc)
    }

    /// Signed integer value of `lc` while proving. Errors if the value is not
    /// a small signed integer.
    pub fn eval_int(&self, lc: &LinComb) -> Result<Option<i128>> {
        match self.eval(lc) {
            None => Ok(None),
            Some(v) => v
                .to_i128()
                .map(Some)
                .ok_or_else(|| Error::Range(format!("value {v:?} is not a 128-bit integer"))),
        }
    }

    pub fn assignment(&self) -> Option<Assignment> {
        self.proving.then(|| Assignment { public: self.public.clone(), witness: self.witness.clone() })
    }

    pub fn is_satisfied(&self, z: &Assignment) -> Result<Satisfaction> {
        if z.public.len() != self.num_public() || z.witness.len() != self.num_witness() {
            return Err(Error::System(format!(
                "assignment has {} public and {} witness values, system expects {} and {}",
                z.public.len(),
                z.witness.len(),
                self.num_public(),
                self.num_witness()
            )));
        }
        for (i, con) in self.constraints.iter().enumerate() {
            let a = z.eval(&con.a, self.field);
            let b = z.eval(&con.b, self.field);
            let c = z.eval(&con.c, self.field);
            if a * b != c {
                return Ok(Satisfaction::Violated { index: i, label: con.label.to_string() });
            }
        }
        Ok(Satisfaction::Satisfied)
    }

    /// Checks the system against its own values (proving mode only).
    pub fn check(&self) -> Result<Satisfaction> {
        let z = self
            .assignment()
            .ok_or_else(|| Error::System("shape-only system has no assignment".into()))?;
        self.is_satisfied(&z)
    }

    pub fn counts(&self) -> Counts {
        let mut by_path: BTreeMap<String, usize> = BTreeMap::new();
        let mut last: Option<(&str, String)> = None;
        for con in &self.constraints {
            // labels arrive in long runs, skip re-parsing identical ones
            let path = match &last {
                Some((l, p)) if *l == &*con.label => p.clone(),
                _ => label_path(&con.label),
            };
            *by_path.entry(path.clone()).or_default() += 1;
            last = Some((&con.label, path));
        }
        Counts { total: self.constraints.len(), by_path }
    }

    /// One line per constraint: `label | a | b | c`.
    pub fn dump<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# public={} witness={} constraints={}", self.num_public, self.num_witness(), self.constraints.len())?;
        let mut line = String::new();
        for con in &self.constraints {
            line.clear();
            line.push_str(&con.label);
            line.push_str(" | ");
            con.a.render(&mut line);
            line.push_str(" | ");
            con.b.render(&mut line);
            line.push_str(" | ");
            con.c.render(&mut line);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
