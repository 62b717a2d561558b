//! Argument structures: formula-labelled trees with arbitrary inferences and
//! explicit discharge bookkeeping.
//!
//! A discharge is stored on the discharged item as the distance to its
//! binder, which is always a strict ancestor. Assumption leaves carry the
//! `f` map, axiom leaves the `h` map, and inference nodes the `g` map for
//! their edge group. Relative distances make moving a subtree cheap: only
//! bindings that leave the subtree (its *escapes*) need re-threading, and
//! derived equality is structural equality.
//!
//! Text form, one `node` per tree node:
//!
//! ```text
//! (node FORMULA)                       open assumption
//! (node FORMULA :assume L)             assumption discharged at binder L
//! (node ATOM :axiom [L])               axiom leaf, optionally discharged
//! (node FORMULA (CHILD+) [:bind L] [:rule L])
//! ```
//!
//! `:bind L` labels a node as binder `L`; `:rule L` discharges the node's
//! edge group at binder `L`. Labels are integers and must name an ancestor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::{check_derivation, AtomicDerivation, AtomicRule, Base, DerivationStep, PremiseSlot};
use crate::formula::{Atom, Formula};
use crate::sexp::{self, Sexp, SyntaxError};

/// Child indices from the root.
pub type Path = Vec<usize>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    /// `Some(k)`: discharged at the ancestor `k` levels up.
    Assumption(Option<u32>),
    Axiom(Option<u32>),
    Inference {
        premises: Vec<ArgStructure>,
        /// Discharge of this node's edge group.
        discharged_at: Option<u32>,
    },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArgStructure {
    formula: Formula,
    kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("binding at {0:?} points above the root")]
    Escaping(Path),
    #[error("binding at {0:?} has distance 0")]
    ZeroDistance(Path),
    #[error("discharged axiom leaf at {0:?} is not atomic")]
    AxiomNotAtomic(Path),
    #[error("discharged edge group at {0:?} is not atomic")]
    EdgeGroupNotAtomic(Path),
    #[error("rule discharge at {0:?} targets a binder that is not atomic with atomic children")]
    BinderNotAtomic(Path),
    #[error("node {0:?} discharges both assumptions and rules")]
    MixedBinder(Path),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArgError {
    #[error("no node at {0:?}")]
    NoSuchPath(Path),
    #[error("conclusion mismatch: expected {expected}, found {found}")]
    ConclusionMismatch { expected: Formula, found: Formula },
    #[error("replacement has a binding {escape} levels above its root, but the target is at depth {depth}")]
    DanglingBinder { escape: u32, depth: usize },
    #[error("no assignment for open assumption {0}")]
    MissingAssignment(Formula),
    #[error("assignment for {0} is not a closed structure concluding it")]
    BadAssignment(Formula),
    #[error("malformed discharge extension: {0}")]
    MalformedDelta(String),
    #[error("not an atomic derivation at {path:?}: {reason}")]
    NotAtomic { path: Path, reason: String },
    #[error("inference needs at least one premise")]
    EmptyInference,
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// One new discharge made by the final step of an inference: the node at
/// `path` inside premise `premise`. Its kind (assumption, axiom, edge group)
/// decides which discharge function is extended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discharge {
    pub premise: usize,
    pub path: Path,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inference {
    pub premises: Vec<ArgStructure>,
    pub conclusion: Formula,
    pub delta: Vec<Discharge>,
}

/// Images for the open assumption formulas.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SigmaAssignment {
    images: BTreeMap<Formula, ArgStructure>,
}

impl SigmaAssignment {
    pub fn new() -> Self {
        SigmaAssignment::default()
    }

    /// Fails unless `image` is closed and concludes `f`.
    pub fn insert(&mut self, f: Formula, image: ArgStructure) -> Result<(), ArgError> {
        if image.conclusion() != &f || !image.is_closed() {
            return Err(ArgError::BadAssignment(f));
        }
        self.images.insert(f, image);
        Ok(())
    }

    pub fn get(&self, f: &Formula) -> Option<&ArgStructure> {
        self.images.get(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Formula, &ArgStructure)> {
        self.images.iter()
    }
}

impl ArgStructure {
    pub fn assumption(formula: Formula) -> Self {
        ArgStructure {
            formula,
            kind: NodeKind::Assumption(None),
        }
    }

    pub fn axiom(a: Atom) -> Self {
        ArgStructure {
            formula: a.to_formula(),
            kind: NodeKind::Axiom(None),
        }
    }

    /// Assumption leaf discharged `k` levels up.
    pub(crate) fn bound_assumption(formula: Formula, k: u32) -> Self {
        ArgStructure {
            formula,
            kind: NodeKind::Assumption(Some(k)),
        }
    }

    /// Assumption leaf discharged exactly one level above `depth`, read from
    /// inside a subtree rooted `depth` levels down.
    pub(crate) fn is_bound_just_above(&self, depth: u32) -> bool {
        matches!(self.kind, NodeKind::Assumption(Some(k)) if k == depth + 1)
    }

    /// Inference with no new discharges.
    pub fn infer(premises: Vec<ArgStructure>, conclusion: Formula) -> Self {
        assert!(!premises.is_empty(), "an inference needs premises");
        ArgStructure {
            formula: conclusion,
            kind: NodeKind::Inference {
                premises,
                discharged_at: None,
            },
        }
    }

    /// `→I` discharging every open occurrence of `antecedent` in `body`.
    pub fn imp_intro(body: ArgStructure, antecedent: Formula) -> Self {
        let conclusion = Formula::imp(antecedent.clone(), body.formula.clone());
        let body = body.rewrite_leaves(&mut |leaf, _| match leaf.kind {
            NodeKind::Assumption(None) if leaf.formula == antecedent => Some(ArgStructure {
                formula: leaf.formula.clone(),
                kind: NodeKind::Assumption(Some(1)),
            }),
            _ => None,
        });
        ArgStructure::infer(vec![body], conclusion)
    }

    /// `→I` discharging nothing.
    pub fn imp_intro_vacuous(body: ArgStructure, antecedent: Formula) -> Self {
        let conclusion = Formula::imp(antecedent, body.formula.clone());
        ArgStructure::infer(vec![body], conclusion)
    }

    /// `→E`, major premise first. Panics unless `major` concludes an implication.
    pub fn imp_elim(major: ArgStructure, minor: ArgStructure) -> Self {
        let (_, consequent) = major.formula.as_impl().expect("major premise must be an implication");
        let consequent = consequent.clone();
        ArgStructure::infer(vec![major, minor], consequent)
    }

    pub fn and_intro(left: ArgStructure, right: ArgStructure) -> Self {
        let c = Formula::conj(left.formula.clone(), right.formula.clone());
        ArgStructure::infer(vec![left, right], c)
    }

    /// `∨I` putting `d`'s conclusion on the left of `other`.
    pub fn or_intro_left(d: ArgStructure, other: Formula) -> Self {
        let c = Formula::disj(d.formula.clone(), other);
        ArgStructure::infer(vec![d], c)
    }

    pub fn or_intro_right(other: Formula, d: ArgStructure) -> Self {
        let c = Formula::disj(other, d.formula.clone());
        ArgStructure::infer(vec![d], c)
    }

    pub fn conclusion(&self) -> &Formula {
        &self.formula
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn premises(&self) -> &[ArgStructure] {
        match &self.kind {
            NodeKind::Inference { premises, .. } => premises,
            _ => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self.kind, NodeKind::Inference { .. })
    }

    pub fn is_open_assumption(&self) -> bool {
        matches!(self.kind, NodeKind::Assumption(None))
    }

    pub fn size(&self) -> usize {
        1 + self.premises().iter().map(|p| p.size()).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premises().iter().map(|p| p.height()).max().unwrap_or(0)
    }

    pub fn at(&self, path: &[usize]) -> Option<&ArgStructure> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.premises().get(*i)?.at(rest),
        }
    }

    /// Every node position in preorder.
    pub fn positions(&self) -> Vec<Path> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut out);
        out
    }

    fn collect_positions(&self, cur: &mut Path, out: &mut Vec<Path>) {
        out.push(cur.clone());
        for (i, p) in self.premises().iter().enumerate() {
            cur.push(i);
            p.collect_positions(cur, out);
            cur.pop();
        }
    }

    pub(crate) fn binding(&self) -> Option<u32> {
        match self.kind {
            NodeKind::Assumption(b) | NodeKind::Axiom(b) => b,
            NodeKind::Inference { discharged_at, .. } => discharged_at,
        }
    }

    fn with_binding(&self, b: Option<u32>) -> ArgStructure {
        let kind = match &self.kind {
            NodeKind::Assumption(_) => NodeKind::Assumption(b),
            NodeKind::Axiom(_) => NodeKind::Axiom(b),
            NodeKind::Inference { premises, .. } => NodeKind::Inference {
                premises: premises.clone(),
                discharged_at: b,
            },
        };
        ArgStructure {
            formula: self.formula.clone(),
            kind,
        }
    }

    /// Largest number of levels above the root that some binding reaches;
    /// 0 for a standalone structure.
    pub fn max_escape(&self) -> u32 {
        self.max_escape_at(0)
    }

    fn max_escape_at(&self, depth: u32) -> u32 {
        let own = self.binding().map_or(0, |k| k.saturating_sub(depth));
        self.premises()
            .iter()
            .map(|p| p.max_escape_at(depth + 1))
            .fold(own, u32::max)
    }

    /// Rewrites every binding that leaves the structure. `f` receives the
    /// number of levels above the root it reaches and returns the new value,
    /// or `None` to drop the discharge.
    pub(crate) fn map_escapes(&self, f: &mut dyn FnMut(u32) -> Option<u32>) -> ArgStructure {
        self.map_escapes_at(0, f)
    }

    fn map_escapes_at(&self, depth: u32, f: &mut dyn FnMut(u32) -> Option<u32>) -> ArgStructure {
        let binding = match self.binding() {
            Some(k) if k > depth => f(k - depth).map(|e| e + depth),
            b => b,
        };
        let kind = match &self.kind {
            NodeKind::Assumption(_) => NodeKind::Assumption(binding),
            NodeKind::Axiom(_) => NodeKind::Axiom(binding),
            NodeKind::Inference { premises, .. } => NodeKind::Inference {
                premises: premises.iter().map(|p| p.map_escapes_at(depth + 1, f)).collect(),
                discharged_at: binding,
            },
        };
        ArgStructure {
            formula: self.formula.clone(),
            kind,
        }
    }

    /// Moves escapes by `delta` levels (the structure is re-rooted that much
    /// deeper when positive). Panics if an escape would reach the root or
    /// below.
    pub(crate) fn shift_escapes(&self, delta: i64) -> ArgStructure {
        self.map_escapes(&mut |e| {
            let moved = e as i64 + delta;
            assert!(moved >= 1, "escape shifted into the structure");
            Some(moved as u32)
        })
    }

    /// Replaces leaves by `f(leaf, depth)`; a replacement is written in the
    /// coordinates of this root and shifted to the leaf's depth here.
    pub(crate) fn rewrite_leaves(
        &self,
        f: &mut dyn FnMut(&ArgStructure, u32) -> Option<ArgStructure>,
    ) -> ArgStructure {
        self.rewrite_leaves_at(0, f)
    }

    fn rewrite_leaves_at(
        &self,
        depth: u32,
        f: &mut dyn FnMut(&ArgStructure, u32) -> Option<ArgStructure>,
    ) -> ArgStructure {
        match &self.kind {
            NodeKind::Inference {
                premises,
                discharged_at,
            } => ArgStructure {
                formula: self.formula.clone(),
                kind: NodeKind::Inference {
                    premises: premises.iter().map(|p| p.rewrite_leaves_at(depth + 1, f)).collect(),
                    discharged_at: *discharged_at,
                },
            },
            _ => match f(self, depth) {
                Some(r) => r.shift_escapes(depth as i64),
                None => self.clone(),
            },
        }
    }

    /// Nodes discharged at the root: `(path, kind)` in preorder.
    pub fn discharged_at_root(&self) -> Vec<(Path, &ArgStructure)> {
        let mut out = Vec::new();
        for (i, p) in self.premises().iter().enumerate() {
            p.collect_bound_at(1, &mut vec![i], &mut out);
        }
        out
    }

    fn collect_bound_at<'a>(&'a self, depth: u32, cur: &mut Path, out: &mut Vec<(Path, &'a ArgStructure)>) {
        if self.binding() == Some(depth) {
            out.push((cur.clone(), self));
        }
        for (i, p) in self.premises().iter().enumerate() {
            cur.push(i);
            p.collect_bound_at(depth + 1, cur, out);
            cur.pop();
        }
    }

    /// Formulas of undischarged assumption leaves. Escaping assumptions
    /// count as undischarged.
    pub fn assumption_formulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_open(0, &mut out);
        out
    }

    fn collect_open(&self, depth: u32, out: &mut BTreeSet<Formula>) {
        match &self.kind {
            NodeKind::Assumption(None) => {
                out.insert(self.formula.clone());
            }
            NodeKind::Assumption(Some(k)) if *k > depth => {
                out.insert(self.formula.clone());
            }
            _ => {}
        }
        for p in self.premises() {
            p.collect_open(depth + 1, out);
        }
    }

    pub fn is_closed(&self) -> bool {
        self.assumption_formulas().is_empty()
    }

    /// The sub-structure at `path` as a structure in its own right:
    /// discharges made above it are dropped, so leaves bound there become
    /// open (assumptions) or undischarged (axioms, edge groups).
    pub fn substructure(&self, path: &[usize]) -> Result<ArgStructure, ArgError> {
        let sub = self.at(path).ok_or_else(|| ArgError::NoSuchPath(path.to_vec()))?;
        Ok(sub.map_escapes(&mut |_| None))
    }

    /// Immediate sub-structures.
    pub fn immediate_substructures(&self) -> Vec<ArgStructure> {
        (0..self.premises().len())
            .map(|i| self.substructure(&[i]).expect("child exists"))
            .collect()
    }

    /// Replaces the node at `path` by `replacement`, whose escapes are read
    /// relative to the target position and must stay within its ancestors.
    pub(crate) fn replace_at(&self, path: &[usize], replacement: ArgStructure) -> Result<ArgStructure, ArgError> {
        let escape = replacement.max_escape();
        if escape as usize > path.len() {
            return Err(ArgError::DanglingBinder {
                escape,
                depth: path.len(),
            });
        }
        self.replace_unchecked(path, replacement)
    }

    fn replace_unchecked(&self, path: &[usize], replacement: ArgStructure) -> Result<ArgStructure, ArgError> {
        match path.split_first() {
            None => Ok(replacement),
            Some((i, rest)) => {
                let NodeKind::Inference {
                    premises,
                    discharged_at,
                } = &self.kind
                else {
                    return Err(ArgError::NoSuchPath(path.to_vec()));
                };
                let child = premises.get(*i).ok_or_else(|| ArgError::NoSuchPath(path.to_vec()))?;
                let mut premises = premises.clone();
                premises[*i] = child.replace_unchecked(rest, replacement)?;
                Ok(ArgStructure {
                    formula: self.formula.clone(),
                    kind: NodeKind::Inference {
                        premises,
                        discharged_at: *discharged_at,
                    },
                })
            }
        }
    }

    /// Checks the discharge constraints; a standalone structure also may
    /// not have escapes.
    pub fn audit(&self) -> Result<(), AuditError> {
        self.audit_inner(true)
    }

    /// Audit allowing bindings above the root (a sub-structure in place).
    pub fn audit_in_context(&self) -> Result<(), AuditError> {
        self.audit_inner(false)
    }

    fn audit_inner(&self, standalone: bool) -> Result<(), AuditError> {
        let mut ancestors: Vec<&ArgStructure> = Vec::new();
        let mut path = Vec::new();
        // binder depth -> (binds assumptions, binds rules)
        let mut roles: BTreeMap<Path, (bool, bool)> = BTreeMap::new();
        self.audit_node(standalone, &mut ancestors, &mut path, &mut roles)?;
        for (p, (assume, rule)) in roles {
            if assume && rule {
                return Err(AuditError::MixedBinder(p));
            }
        }
        Ok(())
    }

    fn audit_node<'a>(
        &'a self,
        standalone: bool,
        ancestors: &mut Vec<&'a ArgStructure>,
        path: &mut Path,
        roles: &mut BTreeMap<Path, (bool, bool)>,
    ) -> Result<(), AuditError> {
        if let Some(k) = self.binding() {
            if k == 0 {
                return Err(AuditError::ZeroDistance(path.clone()));
            }
            let depth = ancestors.len();
            if k as usize > depth {
                if standalone {
                    return Err(AuditError::Escaping(path.clone()));
                }
            } else {
                let binder = ancestors[depth - k as usize];
                let binder_path = path[..depth - k as usize].to_vec();
                let is_assumption = matches!(self.kind, NodeKind::Assumption(_));
                if !is_assumption {
                    if !self.formula.is_atomic() || self.premises().iter().any(|p| !p.formula.is_atomic()) {
                        return Err(match self.kind {
                            NodeKind::Axiom(_) => AuditError::AxiomNotAtomic(path.clone()),
                            _ => AuditError::EdgeGroupNotAtomic(path.clone()),
                        });
                    }
                    if !binder.formula.is_atomic() || binder.premises().iter().any(|p| !p.formula.is_atomic()) {
                        return Err(AuditError::BinderNotAtomic(path.clone()));
                    }
                }
                let entry = roles.entry(binder_path).or_default();
                if is_assumption {
                    entry.0 = true;
                } else {
                    entry.1 = true;
                }
            }
        }
        ancestors.push(self);
        for (i, p) in self.premises().iter().enumerate() {
            path.push(i);
            p.audit_node(standalone, ancestors, path, roles)?;
            path.pop();
        }
        ancestors.pop();
        Ok(())
    }

    /// All labels are atoms or `⊥`.
    pub fn is_all_atomic(&self) -> bool {
        self.formula.is_atomic() && self.premises().iter().all(|p| p.is_all_atomic())
    }

    /// Reads the structure as an atomic derivation: every label atomic, no
    /// assumption leaves, no escapes. The rule applied at a node has one
    /// slot per premise, discharging the axioms and edge groups of that
    /// premise bound at the node.
    pub fn to_atomic(&self) -> Result<AtomicDerivation, ArgError> {
        let mut path = Vec::new();
        self.to_atomic_at(0, &mut path)
    }

    fn to_atomic_at(&self, depth: u32, path: &mut Path) -> Result<AtomicDerivation, ArgError> {
        let not_atomic = |path: &Path, reason: &str| ArgError::NotAtomic {
            path: path.clone(),
            reason: reason.to_string(),
        };
        let conclusion = self
            .formula
            .as_atomic()
            .ok_or_else(|| not_atomic(path, "label is not atomic"))?;
        if let Some(k) = self.binding() {
            if k > depth {
                return Err(not_atomic(path, "discharged outside the structure"));
            }
        }
        match &self.kind {
            NodeKind::Assumption(_) => Err(not_atomic(path, "assumption leaf")),
            NodeKind::Axiom(_) => Ok(AtomicDerivation::axiom(AtomicRule::axiom(conclusion))),
            NodeKind::Inference { premises, .. } => {
                let mut subs = Vec::with_capacity(premises.len());
                let mut slots = Vec::with_capacity(premises.len());
                for (i, p) in premises.iter().enumerate() {
                    path.push(i);
                    subs.push(p.to_atomic_at(depth + 1, path)?);
                    path.pop();
                    let discharged = p.rules_bound_at(1);
                    let premise = p.formula.as_atomic().expect("checked by recursion");
                    slots.push(PremiseSlot::discharging(discharged, premise));
                }
                let plain = slots.iter().all(|s| s.discharges.is_empty());
                if plain && premises.len() == 1 && subs[0].conclusion.is_bottom() && self.binding().is_none() {
                    return Ok(AtomicDerivation::explode(conclusion, subs.pop().expect("one premise")));
                }
                Ok(AtomicDerivation::apply(AtomicRule::with_slots(slots, conclusion), subs))
            }
        }
    }

    /// Level-0 and level-1 rules discharged `up` levels above this node's
    /// subtree, as seen from its root.
    fn rules_bound_at(&self, up: u32) -> Vec<AtomicRule> {
        let mut out = Vec::new();
        self.collect_rules_bound(up, &mut out);
        out
    }

    fn collect_rules_bound(&self, up: u32, out: &mut Vec<AtomicRule>) {
        if self.binding() == Some(up) {
            match &self.kind {
                NodeKind::Axiom(_) => {
                    if let Some(a) = self.formula.as_atomic() {
                        out.push(AtomicRule::axiom(a));
                    }
                }
                NodeKind::Inference { premises, .. } => {
                    let atoms: Option<Vec<Atom>> = premises.iter().map(|p| p.formula.as_atomic()).collect();
                    if let (Some(atoms), Some(c)) = (atoms, self.formula.as_atomic()) {
                        out.push(AtomicRule::simple(atoms, c));
                    }
                }
                NodeKind::Assumption(_) => {}
            }
        }
        for p in self.premises() {
            p.collect_rules_bound(up + 1, out);
        }
    }

    /// Builds the structure of an atomic derivation. Discharged rules of
    /// level 0 become discharged axiom leaves, level 1 discharged edge
    /// groups; higher discharged rules have no representation.
    pub fn from_atomic(d: &AtomicDerivation) -> Result<ArgStructure, ArgError> {
        let mut slots: Vec<(u32, &BTreeSet<AtomicRule>)> = Vec::new();
        let mut path = Vec::new();
        from_atomic_at(d, 0, &mut slots, &mut path)
    }

    /// Whether the structure is an atomic derivation witnessing `⊢_B A`.
    pub fn witnesses(&self, b: &Base) -> bool {
        match self.to_atomic() {
            Ok(d) => matches!(check_derivation(&d, &BTreeSet::new(), b), Ok(v) if v.is_accept()),
            Err(_) => false,
        }
    }

    /// Parses the node format described in the module docs.
    pub fn parse(text: &str) -> Result<ArgStructure, ArgError> {
        let s = sexp::parse_one(text)?;
        let mut labels = Vec::new();
        let d = parse_node(&s, &mut labels)?;
        d.audit()?;
        Ok(d)
    }

    fn write_node(
        &self,
        f: &mut fmt::Formatter<'_>,
        indent: usize,
        labels: &mut Vec<Option<u32>>,
        next: &mut u32,
    ) -> fmt::Result {
        let pad = "  ".repeat(indent);
        write!(f, "{pad}(node {}", self.formula)?;
        let label_of = |labels: &Vec<Option<u32>>, k: u32| -> String {
            let depth = labels.len();
            if k as usize > depth {
                format!("^{}", k as usize - depth)
            } else {
                labels[depth - k as usize].map_or_else(|| "?".to_string(), |l| l.to_string())
            }
        };
        match &self.kind {
            NodeKind::Assumption(b) => {
                if let Some(k) = b {
                    write!(f, " :assume {}", label_of(labels, *k))?;
                }
                f.write_str(")")
            }
            NodeKind::Axiom(b) => {
                f.write_str(" :axiom")?;
                if let Some(k) = b {
                    write!(f, " {}", label_of(labels, *k))?;
                }
                f.write_str(")")
            }
            NodeKind::Inference {
                premises,
                discharged_at,
            } => {
                let own = if self.discharged_at_root().is_empty() {
                    None
                } else {
                    *next += 1;
                    Some(*next)
                };
                let rule = discharged_at.map(|k| label_of(labels, k));
                f.write_str(" (")?;
                labels.push(own);
                for p in premises {
                    f.write_str("\n")?;
                    p.write_node(f, indent + 2, labels, next)?;
                }
                labels.pop();
                f.write_str(")")?;
                if let Some(l) = own {
                    write!(f, " :bind {l}")?;
                }
                if let Some(r) = rule {
                    write!(f, " :rule {r}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn from_atomic_at<'a>(
    d: &'a AtomicDerivation,
    depth: u32,
    slots: &mut Vec<(u32, &'a BTreeSet<AtomicRule>)>,
    path: &mut Path,
) -> Result<ArgStructure, ArgError> {
    let formula = d.conclusion.to_formula();
    match &d.step {
        DerivationStep::Explosion(sub) => {
            path.push(0);
            let child = from_atomic_at(sub, depth + 1, slots, path)?;
            path.pop();
            Ok(ArgStructure::infer(vec![child], formula))
        }
        DerivationStep::Rule { rule, premises } => {
            let binder = slots.iter().rev().find(|(_, set)| set.contains(rule)).map(|(at, _)| depth - at);
            if binder.is_some() && rule.level() >= 2 {
                return Err(ArgError::NotAtomic {
                    path: path.clone(),
                    reason: format!("discharged rule of level {} has no tree form", rule.level()),
                });
            }
            if rule.is_axiom() {
                return Ok(ArgStructure {
                    formula,
                    kind: NodeKind::Axiom(binder),
                });
            }
            let mut children = Vec::with_capacity(premises.len());
            for (i, (slot, sub)) in rule.premises().iter().zip(premises).enumerate() {
                slots.push((depth, &slot.discharges));
                path.push(i);
                let child = from_atomic_at(sub, depth + 1, slots, path);
                path.pop();
                slots.pop();
                children.push(child?);
            }
            Ok(ArgStructure {
                formula,
                kind: NodeKind::Inference {
                    premises: children,
                    discharged_at: binder,
                },
            })
        }
    }
}

fn parse_node(s: &Sexp, labels: &mut Vec<Option<u32>>) -> Result<ArgStructure, ArgError> {
    let items = s
        .tagged("node")
        .ok_or_else(|| SyntaxError::new(s.pos(), "expected (node FORMULA ...)"))?;
    let (formula_s, rest) = items
        .split_first()
        .ok_or_else(|| SyntaxError::new(s.pos(), "node needs a formula"))?;
    let formula = Formula::parse_sexp(formula_s)?;
    let (children, attrs) = match rest.first() {
        Some(Sexp::List(items, _)) if items.first().is_none_or(|x| x.as_list().is_some()) => {
            (Some(items.as_slice()), &rest[1..])
        }
        _ => (None, rest),
    };
    let mut bind = None;
    let mut rule = None;
    let mut assume = None;
    let mut axiom = None;
    let mut i = 0;
    let label_value = |x: Option<&Sexp>, key: &str| -> Result<Option<(u32, usize)>, SyntaxError> {
        match x.and_then(|x| x.as_symbol().map(|t| (t, x.pos()))) {
            Some((t, pos)) if !t.starts_with(':') => t
                .parse::<u32>()
                .map(|v| Some((v, pos)))
                .map_err(|_| SyntaxError::new(pos, format!("{key} expects an integer label"))),
            _ => Ok(None),
        }
    };
    while i < attrs.len() {
        let key_s = &attrs[i];
        let key = key_s.expect_symbol("attribute")?;
        let value = label_value(attrs.get(i + 1), key)?;
        i += 1 + usize::from(value.is_some());
        let need = |v: Option<(u32, usize)>| {
            v.map(|(l, _)| l)
                .ok_or_else(|| SyntaxError::new(key_s.pos(), format!("{key} needs a label")))
        };
        match key {
            ":bind" => bind = Some(need(value)?),
            ":rule" => rule = Some(need(value)?),
            ":assume" => assume = Some(need(value)?),
            ":axiom" => axiom = Some(value.map(|(l, _)| l)),
            _ => return Err(SyntaxError::new(key_s.pos(), format!("unknown attribute '{key}'")).into()),
        }
    }
    let resolve = |labels: &Vec<Option<u32>>, l: u32| -> Result<u32, ArgError> {
        labels
            .iter()
            .rev()
            .position(|x| *x == Some(l))
            .map(|i| i as u32 + 1)
            .ok_or_else(|| SyntaxError::new(s.pos(), format!("label {l} is not bound by an ancestor")).into())
    };
    match children {
        Some([]) => Err(ArgError::EmptyInference),
        Some(children) => {
            if assume.is_some() || axiom.is_some() {
                return Err(SyntaxError::new(s.pos(), "inference nodes take :bind and :rule only").into());
            }
            let discharged_at = rule.map(|l| resolve(labels, l)).transpose()?;
            labels.push(bind);
            let premises = children.iter().map(|c| parse_node(c, labels)).collect::<Result<Vec<_>, _>>();
            labels.pop();
            Ok(ArgStructure {
                formula,
                kind: NodeKind::Inference {
                    premises: premises?,
                    discharged_at,
                },
            })
        }
        None => {
            if bind.is_some() || rule.is_some() {
                return Err(SyntaxError::new(s.pos(), "leaves take :assume or :axiom only").into());
            }
            match (assume, axiom) {
                (Some(_), Some(_)) => Err(SyntaxError::new(s.pos(), "a leaf is an assumption or an axiom").into()),
                (Some(l), None) => Ok(ArgStructure {
                    formula,
                    kind: NodeKind::Assumption(Some(resolve(labels, l)?)),
                }),
                (None, Some(l)) => {
                    if !formula.is_atomic() {
                        return Err(SyntaxError::new(s.pos(), "axiom leaves are atomic").into());
                    }
                    Ok(ArgStructure {
                        formula,
                        kind: NodeKind::Axiom(l.map(|l| resolve(labels, l)).transpose()?),
                    })
                }
                (None, None) => Ok(ArgStructure::assumption(formula)),
            }
        }
    }
}

impl fmt::Display for ArgStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut labels = Vec::new();
        let mut next = 0;
        self.write_node(f, 0, &mut labels, &mut next)
    }
}

impl fmt::Debug for ArgStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for ArgStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ArgStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ArgStructure::parse(&text).map_err(serde::de::Error::custom)
    }
}

pub fn is_closed(d: &ArgStructure) -> bool {
    d.is_closed()
}

/// `d[replacement / d|target]`. Discharges made inside the removed subtree
/// disappear; the replacement's own escapes are kept relative to the target
/// position.
pub fn substitute(d: &ArgStructure, target: &[usize], replacement: ArgStructure) -> Result<ArgStructure, ArgError> {
    let old = d.at(target).ok_or_else(|| ArgError::NoSuchPath(target.to_vec()))?;
    if old.formula != replacement.formula {
        return Err(ArgError::ConclusionMismatch {
            expected: old.formula.clone(),
            found: replacement.formula,
        });
    }
    let out = d.replace_at(target, replacement)?;
    out.audit_inner(d.max_escape() == 0)?;
    Ok(out)
}

/// Replaces every open assumption leaf by its image.
pub fn sigma_instance(d: &ArgStructure, s: &SigmaAssignment) -> Result<ArgStructure, ArgError> {
    for f in d.assumption_formulas() {
        if s.get(&f).is_none() {
            return Err(ArgError::MissingAssignment(f));
        }
    }
    Ok(d.rewrite_leaves(&mut |leaf, _| {
        if leaf.is_open_assumption() {
            s.get(&leaf.formula).cloned()
        } else {
            None
        }
    }))
}

/// Whether the last inference is an introduction: `∧I`, `∨I`, or `→I`
/// discharging only (possibly no) occurrences of the antecedent.
pub fn is_canonical(d: &ArgStructure) -> bool {
    let NodeKind::Inference { premises, .. } = &d.kind else {
        return false;
    };
    let bound = d.discharged_at_root();
    match (&d.formula, premises.as_slice()) {
        (Formula::Conj(a, b), [l, r]) => bound.is_empty() && &l.formula == a.as_ref() && &r.formula == b.as_ref(),
        (Formula::Disj(a, b), [x]) => bound.is_empty() && (&x.formula == a.as_ref() || &x.formula == b.as_ref()),
        (Formula::Impl(a, b), [x]) => {
            &x.formula == b.as_ref()
                && bound
                    .iter()
                    .all(|(_, n)| matches!(n.kind, NodeKind::Assumption(_)) && &n.formula == a.as_ref())
        }
        _ => false,
    }
}

/// The structure associated to an inference: premises joined under a new
/// root, with the discharges of `delta` added.
pub fn build_inference(inf: Inference) -> Result<ArgStructure, ArgError> {
    if inf.premises.is_empty() {
        return Err(ArgError::EmptyInference);
    }
    let mut premises = inf.premises;
    let mut seen = BTreeSet::new();
    for dis in &inf.delta {
        if !seen.insert((dis.premise, dis.path.clone())) {
            return Err(ArgError::MalformedDelta(format!("{:?} discharged twice", dis.path)));
        }
        let premise = premises
            .get(dis.premise)
            .ok_or_else(|| ArgError::MalformedDelta(format!("no premise {}", dis.premise)))?;
        let node = premise
            .at(&dis.path)
            .ok_or_else(|| ArgError::MalformedDelta(format!("no node {:?} in premise {}", dis.path, dis.premise)))?;
        if node.binding().is_some() {
            return Err(ArgError::MalformedDelta(format!("{:?} is already discharged", dis.path)));
        }
        if matches!(node.kind, NodeKind::Inference { .. }) && !node.formula.is_atomic() {
            return Err(ArgError::MalformedDelta("only atomic edge groups can be discharged".into()));
        }
        let rebound = node.with_binding(Some(dis.path.len() as u32 + 1));
        premises[dis.premise] = premises[dis.premise].replace_unchecked(&dis.path, rebound)?;
    }
    let d = ArgStructure {
        formula: inf.conclusion,
        kind: NodeKind::Inference {
            premises,
            discharged_at: None,
        },
    };
    d.audit_inner(false)?;
    Ok(d)
}
