//! BHK-style constructions over atomic bases (∧-free fragment).
//!
//! A construction of an atom is an atomic derivation, of a disjunction a
//! tagged construction, of an implication a lambda whose body is an open
//! term with named holes for the bound atom. Bodies are first-order terms,
//! so constructions can be compared, printed and replayed.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::argstruct::{ArgError, ArgStructure};
use crate::atomic::{check_derivation, derive, AtomicDerivation, AtomicRule, Base, DerivationStep, DEFAULT_DEPTH_CAP};
use crate::bes::{pool_extensions, BesError, ExtensionPool, PoolBounds};
use crate::formula::{Atom, Formula};
use crate::par;
use crate::sexp::{self, Sexp, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructionError {
    #[error("conjunction {0} is outside the supported fragment")]
    Conjunction(Formula),
    #[error("implication antecedent {0} is not atomic")]
    NonAtomicAntecedent(Formula),
    #[error("hypothesis {0} is not atomic")]
    NonAtomicHypothesis(Formula),
    #[error("free hole for {0}")]
    FreeHole(Atom),
    #[error("ill-formed term: {0}")]
    IllFormed(String),
    #[error("malformed input construction: {0}")]
    Malformed(String),
    #[error(transparent)]
    Bes(#[from] BesError),
    #[error(transparent)]
    Arg(#[from] ArgError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Tag {
    First,
    Second,
}

impl Tag {
    pub fn index(self) -> u8 {
        match self {
            Tag::First => 1,
            Tag::Second => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Tag> {
        match i {
            1 => Some(Tag::First),
            2 => Some(Tag::Second),
            _ => None,
        }
    }

    fn pick<'a>(self, left: &'a Formula, right: &'a Formula) -> &'a Formula {
        match self {
            Tag::First => left,
            Tag::Second => right,
        }
    }
}

/// An open construction term. `Hole(a)` stands for a construction of the
/// atom `a` bound by the nearest enclosing `Lambda(a, _)`, or supplied from
/// outside when free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpenTerm {
    Hole(Atom),
    Apply { rule: AtomicRule, premises: Vec<OpenTerm> },
    Explode(Atom, Box<OpenTerm>),
    Tagged(Tag, Box<OpenTerm>),
    Lambda(Atom, Box<OpenTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Construction {
    Atomic(AtomicDerivation),
    Tagged(Tag, Box<Construction>),
    Lambda(Atom, OpenTerm),
}

impl OpenTerm {
    pub fn of_derivation(d: &AtomicDerivation) -> OpenTerm {
        match &d.step {
            DerivationStep::Rule { rule, premises } => OpenTerm::Apply {
                rule: rule.clone(),
                premises: premises.iter().map(OpenTerm::of_derivation).collect(),
            },
            DerivationStep::Explosion(sub) => OpenTerm::Explode(d.conclusion.clone(), Box::new(OpenTerm::of_derivation(sub))),
        }
    }

    /// `d` with each application of `axiom` replaced by a hole for its
    /// conclusion.
    pub fn abstract_axiom(d: &AtomicDerivation, axiom: &AtomicRule) -> OpenTerm {
        match &d.step {
            DerivationStep::Rule { rule, .. } if rule == axiom => OpenTerm::Hole(rule.conclusion().clone()),
            DerivationStep::Rule { rule, premises } => OpenTerm::Apply {
                rule: rule.clone(),
                premises: premises.iter().map(|p| OpenTerm::abstract_axiom(p, axiom)).collect(),
            },
            DerivationStep::Explosion(sub) => {
                OpenTerm::Explode(d.conclusion.clone(), Box::new(OpenTerm::abstract_axiom(sub, axiom)))
            }
        }
    }

    pub fn free_holes(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Atom>, out: &mut BTreeSet<Atom>) {
        match self {
            OpenTerm::Hole(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            OpenTerm::Apply { premises, .. } => premises.iter().for_each(|p| p.collect_free(bound, out)),
            OpenTerm::Explode(_, t) | OpenTerm::Tagged(_, t) => t.collect_free(bound, out),
            OpenTerm::Lambda(a, t) => {
                bound.push(a.clone());
                t.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Fills the free holes for `a` with `k`, a derivation of `a`.
    pub fn fill(&self, a: &Atom, k: &AtomicDerivation) -> OpenTerm {
        match self {
            OpenTerm::Hole(b) if b == a => OpenTerm::of_derivation(k),
            OpenTerm::Hole(_) => self.clone(),
            OpenTerm::Apply { rule, premises } => OpenTerm::Apply {
                rule: rule.clone(),
                premises: premises.iter().map(|p| p.fill(a, k)).collect(),
            },
            OpenTerm::Explode(c, t) => OpenTerm::Explode(c.clone(), Box::new(t.fill(a, k))),
            OpenTerm::Tagged(i, t) => OpenTerm::Tagged(*i, Box::new(t.fill(a, k))),
            // Shadowed.
            OpenTerm::Lambda(b, _) if b == a => self.clone(),
            OpenTerm::Lambda(b, t) => OpenTerm::Lambda(b.clone(), Box::new(t.fill(a, k))),
        }
    }

    /// The construction denoted by a term without free holes.
    pub fn close(&self) -> Result<Construction, ConstructionError> {
        match self {
            OpenTerm::Hole(a) => Err(ConstructionError::FreeHole(a.clone())),
            OpenTerm::Apply { .. } | OpenTerm::Explode(..) => Ok(Construction::Atomic(self.to_derivation()?)),
            OpenTerm::Tagged(i, t) => Ok(Construction::Tagged(*i, Box::new(t.close()?))),
            OpenTerm::Lambda(a, t) => {
                let free: Vec<Atom> = t.free_holes().into_iter().filter(|b| b != a).collect();
                match free.first() {
                    Some(b) => Err(ConstructionError::FreeHole(b.clone())),
                    None => Ok(Construction::Lambda(a.clone(), (**t).clone())),
                }
            }
        }
    }

    fn to_derivation(&self) -> Result<AtomicDerivation, ConstructionError> {
        match self {
            OpenTerm::Hole(a) => Err(ConstructionError::FreeHole(a.clone())),
            OpenTerm::Apply { rule, premises } => {
                let subs = premises.iter().map(OpenTerm::to_derivation).collect::<Result<Vec<_>, _>>()?;
                if rule.premises().len() != subs.len()
                    || rule.premises().iter().zip(&subs).any(|(s, d)| s.premise != d.conclusion)
                {
                    return Err(ConstructionError::IllFormed(format!("premises do not match {rule}")));
                }
                Ok(AtomicDerivation::apply(rule.clone(), subs))
            }
            OpenTerm::Explode(a, t) => {
                let sub = t.to_derivation()?;
                if !sub.conclusion.is_bottom() {
                    return Err(ConstructionError::IllFormed("explosion needs a derivation of bot".into()));
                }
                Ok(AtomicDerivation::explode(a.clone(), sub))
            }
            OpenTerm::Tagged(..) | OpenTerm::Lambda(..) => {
                Err(ConstructionError::IllFormed("expected an atomic derivation".into()))
            }
        }
    }

    /// `(hole A) | (apply RULE TERM*) | (explode A TERM) | (tag I TERM) | (lambda A TERM)`.
    pub fn parse(text: &str) -> Result<OpenTerm, ConstructionError> {
        Ok(OpenTerm::from_sexp(&sexp::parse_one(text)?)?)
    }

    fn from_sexp(s: &Sexp) -> Result<OpenTerm, SyntaxError> {
        let atom_of = |x: &Sexp| {
            Atom::parse_atomic(x.expect_symbol("atom")?).map_err(|e| SyntaxError::new(x.pos(), e.message))
        };
        let bad = |m: &str| SyntaxError::new(s.pos(), m.to_string());
        if let Some(items) = s.tagged("hole") {
            match items {
                [a] => Ok(OpenTerm::Hole(atom_of(a)?)),
                _ => Err(bad("expected (hole ATOM)")),
            }
        } else if let Some(items) = s.tagged("apply") {
            let (rule, subs) = items.split_first().ok_or_else(|| bad("apply needs a rule"))?;
            Ok(OpenTerm::Apply {
                rule: AtomicRule::from_sexp(rule)?,
                premises: subs.iter().map(OpenTerm::from_sexp).collect::<Result<_, _>>()?,
            })
        } else if let Some(items) = s.tagged("explode") {
            match items {
                [a, t] => Ok(OpenTerm::Explode(atom_of(a)?, Box::new(OpenTerm::from_sexp(t)?))),
                _ => Err(bad("expected (explode ATOM TERM)")),
            }
        } else if let Some(items) = s.tagged("tag") {
            match items {
                [i, t] => {
                    let tag = i
                        .expect_symbol("tag index")?
                        .parse::<u8>()
                        .ok()
                        .and_then(Tag::from_index)
                        .ok_or_else(|| SyntaxError::new(i.pos(), "tag index is 1 or 2"))?;
                    Ok(OpenTerm::Tagged(tag, Box::new(OpenTerm::from_sexp(t)?)))
                }
                _ => Err(bad("expected (tag I TERM)")),
            }
        } else if let Some(items) = s.tagged("lambda") {
            match items {
                [a, t] => Ok(OpenTerm::Lambda(atom_of(a)?, Box::new(OpenTerm::from_sexp(t)?))),
                _ => Err(bad("expected (lambda ATOM TERM)")),
            }
        } else {
            Err(bad("expected hole, apply, explode, tag or lambda"))
        }
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let pad = "  ".repeat(indent);
        match self {
            OpenTerm::Hole(a) => write!(f, "{pad}(hole {a})"),
            OpenTerm::Apply { rule, premises } => {
                write!(f, "{pad}(apply {rule}")?;
                for p in premises {
                    f.write_str("\n")?;
                    p.write_indented(f, indent + 1)?;
                }
                f.write_str(")")
            }
            OpenTerm::Explode(a, t) | OpenTerm::Lambda(a, t) => {
                let head = if matches!(self, OpenTerm::Explode(..)) { "explode" } else { "lambda" };
                writeln!(f, "{pad}({head} {a}")?;
                t.write_indented(f, indent + 1)?;
                f.write_str(")")
            }
            OpenTerm::Tagged(i, t) => {
                writeln!(f, "{pad}(tag {}", i.index())?;
                t.write_indented(f, indent + 1)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for OpenTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

impl Serialize for OpenTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Construction {
    pub fn to_term(&self) -> OpenTerm {
        match self {
            Construction::Atomic(d) => OpenTerm::of_derivation(d),
            Construction::Tagged(i, k) => OpenTerm::Tagged(*i, Box::new(k.to_term())),
            Construction::Lambda(a, body) => OpenTerm::Lambda(a.clone(), Box::new(body.clone())),
        }
    }

    /// Applies a lambda to a derivation of its bound atom.
    pub fn apply(&self, arg: &AtomicDerivation) -> Result<Construction, ConstructionError> {
        match self {
            Construction::Lambda(a, body) if *a == arg.conclusion => body.fill(a, arg).close(),
            Construction::Lambda(a, _) => Err(ConstructionError::IllFormed(format!(
                "argument concludes {} but the lambda binds {a}",
                arg.conclusion
            ))),
            _ => Err(ConstructionError::IllFormed("only a lambda can be applied".into())),
        }
    }

    pub fn parse(text: &str) -> Result<Construction, ConstructionError> {
        OpenTerm::parse(text)?.close()
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_term().fmt(f)
    }
}

impl Serialize for Construction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstructionCaps {
    /// Nested implication checks.
    pub nesting: usize,
    /// Derivations tried as hole fillers per atom and extension.
    pub inputs: usize,
    /// Height of enumerated hole fillers.
    pub height: usize,
}

impl Default for ConstructionCaps {
    fn default() -> Self {
        ConstructionCaps {
            nesting: 4,
            inputs: 6,
            height: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstructionBounds {
    pub pool: PoolBounds,
    pub extensions: usize,
    pub inputs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConstructionVerdict {
    /// `bounds` is absent when no extension had to be quantified over.
    Valid { bounds: Option<ConstructionBounds> },
    Invalid {
        reason: String,
        extension: Option<Base>,
        inputs: Vec<AtomicDerivation>,
    },
    Inconclusive { reason: String },
}

impl ConstructionVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ConstructionVerdict::Valid { .. })
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, ConstructionVerdict::Invalid { .. })
    }

    fn invalid(reason: impl Into<String>) -> Self {
        ConstructionVerdict::Invalid {
            reason: reason.into(),
            extension: None,
            inputs: Vec::new(),
        }
    }
}

/// Derivations of `a` on `c`: the search witness plus level-1 trees up to
/// the height cap, at most `caps.inputs` of them.
pub fn sample_derivations(a: &Atom, c: &Base, caps: &ConstructionCaps) -> Vec<AtomicDerivation> {
    let mut out: Vec<AtomicDerivation> = Vec::new();
    if let Ok(Some(d)) = derive(a, &BTreeSet::new(), c, DEFAULT_DEPTH_CAP) {
        out.push(d);
    }
    for d in enumerate(a, c, caps.height, caps.inputs) {
        if out.len() >= caps.inputs {
            break;
        }
        if !out.contains(&d) {
            out.push(d);
        }
    }
    out
}

fn enumerate(a: &Atom, c: &Base, height: usize, limit: usize) -> Vec<AtomicDerivation> {
    let mut out = Vec::new();
    if height == 0 {
        return out;
    }
    for rule in c.rules() {
        if rule.conclusion() != a || rule.premises().iter().any(|s| !s.discharges.is_empty()) {
            continue;
        }
        let mut tuples: Vec<Vec<AtomicDerivation>> = vec![Vec::new()];
        for slot in rule.premises() {
            let subs = enumerate(&slot.premise, c, height - 1, limit);
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    subs.iter().map(move |s| {
                        let mut t = t.clone();
                        t.push(s.clone());
                        t
                    })
                })
                .take(limit)
                .collect();
        }
        for t in tuples {
            out.push(AtomicDerivation::apply(rule.clone(), t));
            if out.len() >= limit {
                return out;
            }
        }
    }
    out
}

/// Checks constructions against formulas, quantifying over a pool.
pub struct ConstructionChecker {
    pub pool: ExtensionPool,
    pub caps: ConstructionCaps,
}

impl ConstructionChecker {
    pub fn new(pool: ExtensionPool, caps: ConstructionCaps) -> Self {
        ConstructionChecker { pool, caps }
    }

    pub fn is_construction(&self, k: &Construction, a: &Formula, b: &Base) -> Result<ConstructionVerdict, ConstructionError> {
        self.check(k, a, b, 0)
    }

    fn check(&self, k: &Construction, a: &Formula, b: &Base, depth: usize) -> Result<ConstructionVerdict, ConstructionError> {
        match a {
            Formula::Conj(..) => Err(ConstructionError::Conjunction(a.clone())),
            Formula::Atom(_) | Formula::Bottom => {
                let goal = a.as_atomic().expect("atomic");
                Ok(match k {
                    Construction::Atomic(d) if d.conclusion == goal => {
                        match check_derivation(d, &BTreeSet::new(), b) {
                            Ok(v) if v.is_accept() => ConstructionVerdict::Valid { bounds: None },
                            Ok(_) => ConstructionVerdict::invalid(format!("derivation of {goal} uses a rule outside the base")),
                            Err(e) => ConstructionError::IllFormed(e.to_string()).into_verdict(),
                        }
                    }
                    _ => ConstructionVerdict::invalid(format!("not an atomic derivation of {goal}")),
                })
            }
            Formula::Disj(l, r) => match k {
                Construction::Tagged(i, inner) => self.check(inner, i.pick(l, r), b, depth),
                _ => Ok(ConstructionVerdict::invalid(format!("not a tagged construction of {a}"))),
            },
            Formula::Impl(ante, cons) => {
                let bound = ante
                    .as_atomic()
                    .ok_or_else(|| ConstructionError::NonAtomicAntecedent((**ante).clone()))?;
                match k {
                    Construction::Lambda(x, body) if *x == bound => {
                        self.check_from(body, &[bound], cons, b, depth + 1)
                    }
                    _ => Ok(ConstructionVerdict::invalid(format!("not a lambda binding {bound}"))),
                }
            }
        }
    }

    /// `k` applied to constructions of the atoms `gamma` is a construction
    /// of `a`, on every pool extension of `b`.
    pub fn is_construction_from(
        &self,
        k: &OpenTerm,
        gamma: &[Formula],
        a: &Formula,
        b: &Base,
    ) -> Result<ConstructionVerdict, ConstructionError> {
        let atoms = gamma
            .iter()
            .map(|f| f.as_atomic().ok_or_else(|| ConstructionError::NonAtomicHypothesis(f.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        self.check_from(k, &atoms, a, b, 0)
    }

    fn check_from(
        &self,
        k: &OpenTerm,
        gamma: &[Atom],
        a: &Formula,
        b: &Base,
        depth: usize,
    ) -> Result<ConstructionVerdict, ConstructionError> {
        if depth > self.caps.nesting {
            return Ok(ConstructionVerdict::Inconclusive {
                reason: "nesting cap reached".into(),
            });
        }
        if let Some(h) = k.free_holes().into_iter().find(|h| !gamma.contains(h)) {
            return Err(ConstructionError::FreeHole(h));
        }
        let extensions = pool_extensions(b, &self.pool)?;
        let results = par::map(&extensions, |c| self.on_extension(k, gamma, a, c, depth));
        let mut inputs = 0;
        let mut unsure = None;
        for r in results {
            match r? {
                (n, ConstructionVerdict::Valid { .. }) => inputs += n,
                (_, v @ ConstructionVerdict::Invalid { .. }) => return Ok(v),
                (n, ConstructionVerdict::Inconclusive { reason }) => {
                    inputs += n;
                    unsure.get_or_insert(reason);
                }
            }
        }
        Ok(match unsure {
            Some(reason) => ConstructionVerdict::Inconclusive { reason },
            None => ConstructionVerdict::Valid {
                bounds: Some(ConstructionBounds {
                    pool: self.pool.bounds(),
                    extensions: extensions.len(),
                    inputs,
                }),
            },
        })
    }

    fn on_extension(
        &self,
        k: &OpenTerm,
        gamma: &[Atom],
        a: &Formula,
        c: &Base,
        depth: usize,
    ) -> Result<(usize, ConstructionVerdict), ConstructionError> {
        let candidates: Vec<Vec<AtomicDerivation>> =
            gamma.iter().map(|g| sample_derivations(g, c, &self.caps)).collect();
        let total: usize = candidates.iter().map(Vec::len).product();
        let mut unsure = None;
        for n in 0..total {
            let mut rest = n;
            let tuple: Vec<&AtomicDerivation> = candidates
                .iter()
                .map(|cs| {
                    let d = &cs[rest % cs.len()];
                    rest /= cs.len();
                    d
                })
                .collect();
            let filled = gamma.iter().zip(&tuple).fold(k.clone(), |t, (g, d)| t.fill(g, d));
            let verdict = match filled.close() {
                Ok(kk) => self.check(&kk, a, c, depth)?,
                Err(e) => ConstructionVerdict::invalid(format!("applied term is not a construction: {e}")),
            };
            match verdict {
                ConstructionVerdict::Valid { .. } => {}
                ConstructionVerdict::Invalid { reason, .. } => {
                    return Ok((
                        n + 1,
                        ConstructionVerdict::Invalid {
                            reason,
                            extension: Some(c.clone()),
                            inputs: tuple.into_iter().cloned().collect(),
                        },
                    ))
                }
                ConstructionVerdict::Inconclusive { reason } => {
                    unsure.get_or_insert(reason);
                }
            }
        }
        Ok((
            total,
            match unsure {
                Some(reason) => ConstructionVerdict::Inconclusive { reason },
                None => ConstructionVerdict::Valid { bounds: None },
            },
        ))
    }
}

impl ConstructionError {
    fn into_verdict(self) -> ConstructionVerdict {
        ConstructionVerdict::invalid(self.to_string())
    }
}

/// `d` with every undischarged application of `axiom` turned into an open
/// assumption of its conclusion.
pub fn replace_axiom(d: &AtomicDerivation, axiom: &AtomicRule) -> Result<ArgStructure, ConstructionError> {
    let mut paths = Vec::new();
    axiom_paths(d, axiom, &mut Vec::new(), &mut Vec::new(), &mut paths);
    let mut s = ArgStructure::from_atomic(d)?;
    let leaf = ArgStructure::assumption(axiom.conclusion().to_formula());
    for p in paths {
        s = s.replace_at(&p, leaf.clone())?;
    }
    Ok(s)
}

fn axiom_paths<'a>(
    d: &'a AtomicDerivation,
    axiom: &AtomicRule,
    discharged: &mut Vec<&'a BTreeSet<AtomicRule>>,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    match &d.step {
        DerivationStep::Rule { rule, premises } => {
            if rule == axiom && !discharged.iter().any(|s| s.contains(rule)) {
                out.push(path.clone());
            }
            for (i, (slot, sub)) in rule.premises().iter().zip(premises).enumerate() {
                discharged.push(&slot.discharges);
                path.push(i);
                axiom_paths(sub, axiom, discharged, path, out);
                path.pop();
                discharged.pop();
            }
        }
        DerivationStep::Explosion(sub) => {
            path.push(0);
            axiom_paths(sub, axiom, discharged, path, out);
            path.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitK {
    pub output: Construction,
    /// The atomic derivation `k₁` yields on the base plus the distinguished axiom.
    pub inner: AtomicDerivation,
    pub tag: Tag,
    /// Whether the distinguished axiom occurs in `inner`.
    pub used_axiom: bool,
}

/// The construction for the Split rule: feed `k1` the distinguished axiom
/// for its bound atom, read off the tagged derivation, and abstract the
/// axiom back out (a no-op when it is unused).
pub fn theorem2_k(k1: &Construction, c: &Base) -> Result<SplitK, ConstructionError> {
    let Construction::Lambda(p, _) = k1 else {
        return Err(ConstructionError::Malformed("input is not a lambda".into()));
    };
    let marked = AtomicRule::distinguished_axiom(p.clone());
    let scratch = c.with(marked.clone());
    let k2 = AtomicDerivation::axiom(marked.clone());
    let (tag, k3) = match k1.apply(&k2)? {
        Construction::Tagged(i, inner) => match *inner {
            Construction::Atomic(d) => (i, d),
            other => {
                return Err(ConstructionError::Malformed(format!(
                    "tagged part is not an atomic derivation: {other}"
                )))
            }
        },
        other => return Err(ConstructionError::Malformed(format!("applied input is not tagged: {other}"))),
    };
    if !check_derivation(&k3, &BTreeSet::new(), &scratch).map(|v| v.is_accept()).unwrap_or(false) {
        return Err(ConstructionError::Malformed(format!(
            "{} is not derived on the base plus the distinguished axiom",
            k3.conclusion
        )));
    }
    let used_axiom = k3.uses_open(&marked);
    let body = if used_axiom {
        OpenTerm::abstract_axiom(&k3, &marked)
    } else {
        OpenTerm::of_derivation(&k3)
    };
    Ok(SplitK {
        output: Construction::Tagged(tag, Box::new(Construction::Lambda(p.clone(), body))),
        inner: k3,
        tag,
        used_axiom,
    })
}

pub mod gen {
    //! Random valid inputs for the Split construction.

    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::*;
    use crate::formula::atom;

    /// A level-≤1 base over `p q r s` with at least one route to `q` or `r`.
    pub fn base(rng: &mut StdRng) -> Base {
        let atoms = ["p", "q", "r", "s"].map(atom);
        let mut b = Base::empty();
        for _ in 0..rng.gen_range(1..=4) {
            let concl = atoms[rng.gen_range(1..4)].clone();
            let n = rng.gen_range(0..=2);
            let prem: Vec<Atom> = (0..n).map(|_| atoms.choose(rng).expect("atoms").clone()).collect();
            b.insert(AtomicRule::simple(prem, concl));
        }
        b
    }

    /// Terms for `goal` over the rules of `c`, with `hole` available as a
    /// leaf.
    fn terms(goal: &Atom, hole: &Atom, c: &Base, height: usize, rng: &mut StdRng) -> Option<OpenTerm> {
        let mut options: Vec<OpenTerm> = Vec::new();
        if goal == hole {
            options.push(OpenTerm::Hole(hole.clone()));
        }
        if height > 0 {
            let mut rules: Vec<&AtomicRule> = c.rules().iter().filter(|r| r.conclusion() == goal).collect();
            rules.shuffle(rng);
            for r in rules {
                let premises: Option<Vec<OpenTerm>> = r
                    .premises()
                    .iter()
                    .map(|s| terms(&s.premise, hole, c, height - 1, rng))
                    .collect();
                if let Some(premises) = premises {
                    options.push(OpenTerm::Apply {
                        rule: r.clone(),
                        premises,
                    });
                    break;
                }
            }
        }
        options.choose(rng).cloned()
    }

    /// `λp.⟨i, t⟩` with `t` built from the base rules and the hole. `None`
    /// when neither disjunct can be reached on the sampled base.
    pub fn split_input(rng: &mut StdRng, c: &Base) -> Option<Construction> {
        let (p, q, r) = (atom("p"), atom("q"), atom("r"));
        let mut sides = [(Tag::First, q), (Tag::Second, r)];
        sides.shuffle(rng);
        for (tag, goal) in sides {
            if let Some(t) = terms(&goal, &p, c, 4, rng) {
                return Some(Construction::Lambda(p, OpenTerm::Tagged(tag, Box::new(t))));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bes::{make_pool, PoolParams};
    use crate::formula::{atom, parse_formula};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn checker(atoms: &[&str]) -> ConstructionChecker {
        let pool = make_pool(&atoms.iter().map(|a| atom(a)).collect(), PoolParams::default()).unwrap();
        ConstructionChecker::new(pool, ConstructionCaps::default())
    }

    fn ax(a: &str) -> AtomicDerivation {
        AtomicDerivation::axiom(AtomicRule::axiom(atom(a)))
    }

    #[test]
    fn atomic_and_tagged() {
        let b = Base::from_rules([AtomicRule::axiom(atom("p")), AtomicRule::axiom(atom("q"))]);
        let ch = checker(&["p", "q", "r"]);
        assert!(ch.is_construction(&Construction::Atomic(ax("p")), &f("p"), &b).unwrap().is_valid());
        let tagged = Construction::Tagged(Tag::First, Box::new(Construction::Atomic(ax("q"))));
        assert!(ch.is_construction(&tagged, &f("(or q r)"), &b).unwrap().is_valid());
        assert!(ch.is_construction(&tagged, &f("(or r q)"), &b).unwrap().is_invalid());
        assert!(ch
            .is_construction(&Construction::Atomic(ax("p")), &f("p"), &Base::empty())
            .unwrap()
            .is_invalid());
        assert!(matches!(
            ch.is_construction(&tagged, &f("(and q r)"), &b),
            Err(ConstructionError::Conjunction(_))
        ));
    }

    #[test]
    fn lambda_through_rule() {
        let pq = AtomicRule::simple([atom("p")], atom("q"));
        let b = Base::from_rules([pq.clone()]);
        let body = OpenTerm::Apply {
            rule: pq,
            premises: vec![OpenTerm::Hole(atom("p"))],
        };
        let k = Construction::Lambda(atom("p"), body);
        let ch = checker(&["p", "q"]);
        let v = ch.is_construction(&k, &f("(imp p q)"), &b).unwrap();
        let ConstructionVerdict::Valid { bounds: Some(bounds) } = v else { panic!("{v:?}") };
        assert!(bounds.inputs > 0);
        assert!(ch.is_construction(&k, &f("(imp p q)"), &Base::empty()).unwrap().is_invalid());
    }

    #[test]
    fn from_hypotheses() {
        let ch = checker(&["p", "q"]);
        let id = OpenTerm::Hole(atom("p"));
        assert!(ch.is_construction_from(&id, &[f("p")], &f("p"), &Base::empty()).unwrap().is_valid());

        // Certificate shape: p, (p => q) gives q once p is an axiom.
        let pq = AtomicRule::simple([atom("p")], atom("q"));
        let b = Base::from_rules([pq.clone()]);
        let k = OpenTerm::Apply {
            rule: pq,
            premises: vec![OpenTerm::Hole(atom("p"))],
        };
        assert!(ch.is_construction_from(&k, &[f("p")], &f("q"), &b).unwrap().is_valid());

        // Discards its input and uses an axiom for q that is not in the base.
        let k = OpenTerm::of_derivation(&ax("q"));
        let v = ch.is_construction_from(&k, &[f("p")], &f("q"), &Base::empty()).unwrap();
        let ConstructionVerdict::Invalid { extension, .. } = v else { panic!("{v:?}") };
        assert!(extension.is_some());
    }

    #[test]
    fn split_k_unused_axiom() {
        let c = Base::from_rules([AtomicRule::axiom(atom("q"))]);
        let k1 = Construction::Lambda(atom("p"), OpenTerm::Tagged(Tag::First, Box::new(OpenTerm::of_derivation(&ax("q")))));
        let out = theorem2_k(&k1, &c).unwrap();
        assert!(!out.used_axiom);
        assert_eq!(
            out.output,
            Construction::Tagged(Tag::First, Box::new(Construction::Lambda(atom("p"), OpenTerm::of_derivation(&ax("q")))))
        );
        // Both arms agree when the axiom is unused.
        assert_eq!(
            OpenTerm::abstract_axiom(&out.inner, &AtomicRule::distinguished_axiom(atom("p"))),
            OpenTerm::of_derivation(&out.inner)
        );
        let ch = checker(&["p", "q", "r"]);
        assert!(ch.is_construction(&out.output, &f("(or (imp p q) (imp p r))"), &c).unwrap().is_valid());
    }

    #[test]
    fn split_k_used_axiom() {
        let pq = AtomicRule::simple([atom("p")], atom("q"));
        let c = Base::from_rules([pq.clone()]);
        let body = OpenTerm::Apply {
            rule: pq.clone(),
            premises: vec![OpenTerm::Hole(atom("p"))],
        };
        let k1 = Construction::Lambda(atom("p"), OpenTerm::Tagged(Tag::First, Box::new(body.clone())));
        let out = theorem2_k(&k1, &c).unwrap();
        assert!(out.used_axiom);
        assert_eq!(
            out.output,
            Construction::Tagged(Tag::First, Box::new(Construction::Lambda(atom("p"), body)))
        );
        let ch = checker(&["p", "q", "r"]);
        assert!(ch.is_construction(&out.output, &f("(or (imp p q) (imp p r))"), &c).unwrap().is_valid());
    }

    #[test]
    fn split_k_rejects_non_tagged() {
        let k1 = Construction::Lambda(
            atom("p"),
            OpenTerm::Lambda(atom("q"), Box::new(OpenTerm::Hole(atom("q")))),
        );
        assert!(matches!(theorem2_k(&k1, &Base::empty()), Err(ConstructionError::Malformed(_))));
        assert!(matches!(
            theorem2_k(&Construction::Atomic(ax("p")), &Base::empty()),
            Err(ConstructionError::Malformed(_))
        ));
    }

    #[test]
    fn replace_axiom_counts_leaves() {
        let marked = AtomicRule::distinguished_axiom(atom("p"));
        let two = AtomicRule::simple([atom("p"), atom("p")], atom("q"));
        let d = AtomicDerivation::apply(
            two,
            vec![AtomicDerivation::axiom(marked.clone()), AtomicDerivation::axiom(marked.clone())],
        );
        let s = replace_axiom(&d, &marked).unwrap();
        let open: Vec<_> = s.positions().into_iter().filter(|p| s.at(p).unwrap().is_open_assumption()).collect();
        assert_eq!(open.len(), 2);
        let untouched = replace_axiom(&ax("q"), &marked).unwrap();
        assert!(untouched.is_closed());
        assert_eq!(untouched, ArgStructure::from_atomic(&ax("q")).unwrap());
    }

    #[test]
    fn abstract_then_fill_is_identity() {
        let marked = AtomicRule::distinguished_axiom(atom("p"));
        let d = AtomicDerivation::apply(
            AtomicRule::simple([atom("p")], atom("q")),
            vec![AtomicDerivation::axiom(marked.clone())],
        );
        let t = OpenTerm::abstract_axiom(&d, &marked);
        assert_eq!(t.fill(&atom("p"), &AtomicDerivation::axiom(marked)).close().unwrap(), Construction::Atomic(d));
    }

    #[test]
    fn term_text_round_trip() {
        let text = "(lambda p (tag 2 (apply (rule (p) => r) (hole p))))";
        let k = Construction::parse(text).unwrap();
        assert_eq!(Construction::parse(&k.to_string()).unwrap(), k);
        assert!(matches!(Construction::parse("(hole p)"), Err(ConstructionError::FreeHole(_))));
        assert!(Construction::parse("(tag 3 (hole p))").is_err());
    }
}
