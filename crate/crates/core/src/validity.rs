//! Validity of arguments (structure plus justification) on atomic bases.
//!
//! Closed structures are checked by reduction search. Open ones quantify
//! over extensions, closed instances and larger justifications; that
//! quantifier is finitized by an [`ExtensionPool`] for the extensions and a
//! [`ClosedArgCatalog`] for the instances, each entry contributing its own
//! justification. Affirmative open verdicts therefore carry their bounds.

use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::argstruct::{is_canonical, sigma_instance, ArgError, ArgStructure, SigmaAssignment};
use crate::atomic::{check_derivation, AtomicDerivation, AtomicRule, Base};
use crate::bes::{pool_extensions, BesError, ExtensionPool, PoolBounds};
use crate::formula::{Atom, Formula};
use crate::par;
use crate::reduction::{
    apply_at, catalog_entry, explore, search, Explored, Justification, Reduce, Reduction, ReductionError, SearchCaps,
    Trace,
};
use crate::sexp::{self, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidityError {
    #[error("structure is not closed")]
    NotClosed,
    #[error("structure is not all-atomic")]
    NotAtomic,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Bes(#[from] BesError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Arg(#[from] ArgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValidityCaps {
    /// Reduction steps searched per structure.
    pub steps: usize,
    /// Distinct structures visited per search.
    pub states: usize,
    /// σ-assignments tried per extension.
    pub assignments: usize,
    /// Nested validity checks (canonical sub-structures, catalog entries).
    pub nesting: usize,
}

impl Default for ValidityCaps {
    fn default() -> Self {
        ValidityCaps {
            steps: 6,
            states: 5_000,
            assignments: 64,
            nesting: 6,
        }
    }
}

impl ValidityCaps {
    fn search(&self) -> SearchCaps {
        SearchCaps {
            steps: self.steps,
            states: self.states,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub structure: ArgStructure,
    pub justification: Justification,
}

/// Closed arguments used as σ-images.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClosedArgCatalog {
    entries: Vec<CatalogEntry>,
}

impl ClosedArgCatalog {
    pub fn new() -> Self {
        ClosedArgCatalog::default()
    }

    pub fn push(&mut self, structure: ArgStructure, justification: Justification) -> Result<(), ValidityError> {
        if !structure.is_closed() || structure.max_escape() != 0 {
            return Err(ValidityError::NotClosed);
        }
        let entry = CatalogEntry {
            structure,
            justification,
        };
        if !self.entries.contains(&entry) {
            self.entries.push(entry);
        }
        Ok(())
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn for_formula<'a>(&'a self, f: &'a Formula) -> impl Iterator<Item = &'a CatalogEntry> + 'a {
        self.entries.iter().filter(move |e| e.structure.conclusion() == f)
    }

    pub fn extend(&mut self, other: &ClosedArgCatalog) {
        for e in &other.entries {
            if !self.entries.contains(e) {
                self.entries.push(e.clone());
            }
        }
    }

    /// For every atom of `b` and the pool: its axiom leaf, and one derivation
    /// of it on each pool extension of `b` where it is derivable.
    pub fn atomic_witnesses(b: &Base, pool: &ExtensionPool) -> Result<ClosedArgCatalog, ValidityError> {
        let mut atoms: BTreeSet<Atom> = b.atoms();
        for r in pool.rules() {
            atoms.extend(r.atoms());
        }
        let mut out = ClosedArgCatalog::new();
        for a in &atoms {
            out.push(ArgStructure::axiom(a.clone()), Justification::empty())?;
        }
        for c in pool_extensions(b, pool)? {
            for a in &atoms {
                if let Ok(Some(d)) = crate::atomic::derive(a, &BTreeSet::new(), &c, crate::atomic::DEFAULT_DEPTH_CAP) {
                    if let Ok(s) = ArgStructure::from_atomic(&d) {
                        out.push(s, Justification::empty())?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `(catalog (entry [:just (NAME*)] NODE)*)`.
    pub fn parse(text: &str) -> Result<ClosedArgCatalog, ValidityError> {
        let s = sexp::parse_one(text).map_err(ArgError::from)?;
        let items = s
            .tagged("catalog")
            .ok_or_else(|| ArgError::from(SyntaxError::new(s.pos(), "expected (catalog ...)")))?;
        let mut out = ClosedArgCatalog::new();
        for item in items {
            let parts = item
                .tagged("entry")
                .ok_or_else(|| ArgError::from(SyntaxError::new(item.pos(), "expected (entry ...)")))?;
            let (just, node) = match parts {
                [k, names, node] if k.as_symbol() == Some(":just") => {
                    let names = names.expect_list("reduction names").map_err(ArgError::from)?;
                    let mut j = Justification::empty();
                    for n in names {
                        let n = n.expect_symbol("reduction name").map_err(ArgError::from)?;
                        j.insert(catalog_entry(n).ok_or_else(|| ReductionError::Unknown(n.to_string()))?);
                    }
                    (j, node)
                }
                [node] => (Justification::empty(), node),
                _ => {
                    return Err(ArgError::from(SyntaxError::new(item.pos(), "expected (entry [:just (NAME*)] NODE)")).into())
                }
            };
            out.push(ArgStructure::parse(&node.to_string())?, just)?;
        }
        Ok(out)
    }
}

/// How much of the open clause was actually checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpenBounds {
    pub pool: PoolBounds,
    pub extensions: usize,
    pub catalog_entries: usize,
    /// σ-assignments checked, summed over extensions.
    pub assignments: usize,
    /// Assumption formulas with no known-valid catalog entry on some extension.
    pub uncovered: Vec<Formula>,
    /// Catalog entries whose own validity was inconclusive and were skipped.
    pub skipped_entries: usize,
    /// Whether the assignment cap cut off some extension.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// The trace ends in an atomic derivation accepted on the base.
    Derivation { trace: Trace },
    /// The trace ends in a canonical structure; one entry per immediate
    /// sub-structure.
    Canonical { trace: Trace, subs: Vec<Evidence> },
    /// All-atomic structure whose axiomized form is a derivation in the
    /// base extended by its assumptions as axioms; valid for every
    /// justification.
    Certificate {
        axiomized: AtomicDerivation,
        extended_base: Base,
    },
    /// The open clause held within the stated bounds.
    Bounded { bounds: OpenBounds },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Invalidity {
    pub reason: String,
    pub extension: Option<Base>,
    pub assignment: Vec<(Formula, ArgStructure)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ValidityVerdict {
    Valid { evidence: Evidence },
    Invalid { invalidity: Invalidity },
    Inconclusive { reason: String },
}

impl ValidityVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidityVerdict::Valid { .. })
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, ValidityVerdict::Invalid { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, ValidityVerdict::Inconclusive { .. })
    }

    pub fn evidence(&self) -> Option<&Evidence> {
        match self {
            ValidityVerdict::Valid { evidence } => Some(evidence),
            _ => None,
        }
    }

    fn valid(evidence: Evidence) -> Self {
        ValidityVerdict::Valid { evidence }
    }

    fn invalid(reason: impl Into<String>) -> Self {
        ValidityVerdict::Invalid {
            invalidity: Invalidity {
                reason: reason.into(),
                extension: None,
                assignment: Vec::new(),
            },
        }
    }

    fn inconclusive(reason: impl Into<String>) -> Self {
        ValidityVerdict::Inconclusive { reason: reason.into() }
    }
}

type MemoKey = (ArgStructure, Vec<String>, Base);

/// Validity checker over a fixed pool, catalog and caps.
pub struct Validator {
    pub catalog: ClosedArgCatalog,
    pub pool: ExtensionPool,
    pub caps: ValidityCaps,
    memo: Mutex<HashMap<MemoKey, ValidityVerdict>>,
}

enum OnExtension {
    Checked {
        assignments: usize,
        uncovered: Vec<Formula>,
        skipped: usize,
        truncated: bool,
        inconclusive: Option<String>,
    },
    Counterexample(Invalidity),
}

impl Validator {
    pub fn new(catalog: ClosedArgCatalog, pool: ExtensionPool, caps: ValidityCaps) -> Self {
        Validator {
            catalog,
            pool,
            caps,
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// Validity of a closed structure.
    pub fn valid_closed(&self, d: &ArgStructure, j: &Justification, b: &Base) -> Result<ValidityVerdict, ValidityError> {
        if !d.is_closed() || d.max_escape() != 0 {
            return Err(ValidityError::NotClosed);
        }
        self.closed_at(d, j, b, 0)
    }

    /// Validity of an open structure, bounded by pool, catalog and caps.
    pub fn valid_open_bounded(
        &self,
        d: &ArgStructure,
        j: &Justification,
        b: &Base,
    ) -> Result<ValidityVerdict, ValidityError> {
        if d.max_escape() != 0 {
            return Err(ValidityError::Precondition("structure has discharges above its root".into()));
        }
        self.open_at(d, j, b, 0)
    }

    /// Either clause, depending on whether `d` is closed.
    pub fn valid(&self, d: &ArgStructure, j: &Justification, b: &Base) -> Result<ValidityVerdict, ValidityError> {
        if d.is_closed() {
            self.valid_closed(d, j, b)
        } else {
            self.valid_open_bounded(d, j, b)
        }
    }

    /// Validity of the rule from `premises` to `conclusion` without
    /// discharges: every catalog-built instance whose premises are valid on
    /// an extension must be valid there too.
    pub fn rule_valid_bounded(
        &self,
        premises: &[Formula],
        conclusion: &Formula,
        j: &Justification,
        b: &Base,
    ) -> Result<ValidityVerdict, ValidityError> {
        let build = |images: &[ArgStructure]| Ok(ArgStructure::infer(images.to_vec(), conclusion.clone()));
        self.quantify(premises, &build, j, b, 0)
    }

    fn closed_at(
        &self,
        d: &ArgStructure,
        j: &Justification,
        b: &Base,
        depth: usize,
    ) -> Result<ValidityVerdict, ValidityError> {
        if depth > self.caps.nesting {
            return Ok(ValidityVerdict::inconclusive("nesting cap reached"));
        }
        let key = (d.clone(), j.names(), b.clone());
        if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(v.clone());
        }
        let verdict = if d.conclusion().is_atomic() {
            match search(d, j, self.caps.search(), |x| x.witnesses(b)) {
                Explored::Stopped(trace) => ValidityVerdict::valid(Evidence::Derivation { trace }),
                Explored::Exhausted => ValidityVerdict::invalid("no reduct is an atomic derivation in the base"),
                Explored::CapReached => ValidityVerdict::inconclusive("reduction search cap reached"),
            }
        } else {
            self.closed_canonical(d, j, b, depth)?
        };
        if !verdict.is_inconclusive() {
            self.memo.lock().expect("memo lock").insert(key, verdict.clone());
        }
        Ok(verdict)
    }

    fn closed_canonical(
        &self,
        d: &ArgStructure,
        j: &Justification,
        b: &Base,
        depth: usize,
    ) -> Result<ValidityVerdict, ValidityError> {
        let mut unsure: Option<String> = None;
        let mut failure: Option<ValidityError> = None;
        let outcome = explore(d, j, self.caps.search(), |trace| {
            let end = trace.end();
            if !is_canonical(end) {
                return ControlFlow::Continue(());
            }
            let mut subs = Vec::new();
            for sub in end.immediate_substructures() {
                let v = if sub.is_closed() {
                    self.closed_at(&sub, j, b, depth + 1)
                } else {
                    self.open_at(&sub, j, b, depth + 1)
                };
                match v {
                    Err(e) => {
                        failure = Some(e);
                        return ControlFlow::Break(None);
                    }
                    Ok(ValidityVerdict::Valid { evidence }) => subs.push(evidence),
                    Ok(ValidityVerdict::Invalid { .. }) => return ControlFlow::Continue(()),
                    Ok(ValidityVerdict::Inconclusive { reason }) => {
                        unsure.get_or_insert(reason);
                        return ControlFlow::Continue(());
                    }
                }
            }
            ControlFlow::Break(Some(Evidence::Canonical {
                trace: trace.clone(),
                subs,
            }))
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(match outcome {
            Explored::Stopped(Some(evidence)) => ValidityVerdict::valid(evidence),
            Explored::Stopped(None) => unreachable!("errors return early"),
            Explored::Exhausted => match unsure {
                Some(reason) => ValidityVerdict::inconclusive(reason),
                None => ValidityVerdict::invalid("no canonical reduct has valid immediate sub-structures"),
            },
            Explored::CapReached => ValidityVerdict::inconclusive("reduction search cap reached"),
        })
    }

    fn open_at(
        &self,
        d: &ArgStructure,
        j: &Justification,
        b: &Base,
        depth: usize,
    ) -> Result<ValidityVerdict, ValidityError> {
        let gamma: Vec<Formula> = d.assumption_formulas().into_iter().collect();
        if gamma.is_empty() {
            return self.closed_at(d, j, b, depth);
        }
        if d.is_all_atomic() {
            if let Some(evidence) = atomic_certificate(d, b) {
                return Ok(ValidityVerdict::valid(evidence));
            }
        }
        let build = |images: &[ArgStructure]| {
            let mut s = SigmaAssignment::new();
            for (f, img) in gamma.iter().zip(images) {
                s.insert(f.clone(), img.clone())?;
            }
            sigma_instance(d, &s)
        };
        self.quantify(&gamma, &build, j, b, depth)
    }

    /// For every pool extension `c` and every tuple of catalog entries valid
    /// on `c` (one per slot formula), `build(tuple)` must be valid on `c`
    /// relative to `j` plus the entries' justifications.
    fn quantify(
        &self,
        slots: &[Formula],
        build: &(dyn Fn(&[ArgStructure]) -> Result<ArgStructure, ArgError> + Sync),
        j: &Justification,
        b: &Base,
        depth: usize,
    ) -> Result<ValidityVerdict, ValidityError> {
        let extensions = pool_extensions(b, &self.pool)?;
        let results = par::map(&extensions, |c| self.on_extension(slots, build, j, c, depth));
        let mut bounds = OpenBounds {
            pool: self.pool.bounds(),
            extensions: extensions.len(),
            catalog_entries: self.catalog.len(),
            assignments: 0,
            uncovered: Vec::new(),
            skipped_entries: 0,
            truncated: false,
        };
        let mut unsure = None;
        for r in results {
            match r? {
                OnExtension::Counterexample(invalidity) => return Ok(ValidityVerdict::Invalid { invalidity }),
                OnExtension::Checked {
                    assignments,
                    uncovered,
                    skipped,
                    truncated,
                    inconclusive,
                } => {
                    bounds.assignments += assignments;
                    for f in uncovered {
                        if !bounds.uncovered.contains(&f) {
                            bounds.uncovered.push(f);
                        }
                    }
                    bounds.skipped_entries += skipped;
                    bounds.truncated |= truncated;
                    if unsure.is_none() {
                        unsure = inconclusive;
                    }
                }
            }
        }
        Ok(match unsure {
            Some(reason) => ValidityVerdict::inconclusive(reason),
            None => ValidityVerdict::valid(Evidence::Bounded { bounds }),
        })
    }

    fn on_extension(
        &self,
        slots: &[Formula],
        build: &(dyn Fn(&[ArgStructure]) -> Result<ArgStructure, ArgError> + Sync),
        j: &Justification,
        c: &Base,
        depth: usize,
    ) -> Result<OnExtension, ValidityError> {
        let mut skipped = 0;
        let mut uncovered = Vec::new();
        let mut candidates: Vec<Vec<&CatalogEntry>> = Vec::new();
        for f in slots {
            let mut valid = Vec::new();
            for e in self.catalog.for_formula(f) {
                match self.closed_at(&e.structure, &e.justification, c, depth + 1)? {
                    ValidityVerdict::Valid { .. } => valid.push(e),
                    ValidityVerdict::Invalid { .. } => {}
                    ValidityVerdict::Inconclusive { .. } => skipped += 1,
                }
            }
            if valid.is_empty() {
                uncovered.push(f.clone());
            }
            candidates.push(valid);
        }
        let mut checked = 0;
        let mut inconclusive = None;
        let mut truncated = false;
        if uncovered.is_empty() {
            let total: usize = candidates.iter().map(Vec::len).product();
            truncated = total > self.caps.assignments;
            for n in 0..total.min(self.caps.assignments) {
                let mut rest = n;
                let tuple: Vec<&CatalogEntry> = candidates
                    .iter()
                    .map(|cs| {
                        let e = cs[rest % cs.len()];
                        rest /= cs.len();
                        e
                    })
                    .collect();
                let images: Vec<ArgStructure> = tuple.iter().map(|e| e.structure.clone()).collect();
                let h = tuple.iter().fold(j.clone(), |acc, e| acc.union(&e.justification));
                let instance = build(&images)?;
                checked += 1;
                match self.closed_at(&instance, &h, c, depth + 1)? {
                    ValidityVerdict::Valid { .. } => {}
                    ValidityVerdict::Invalid { invalidity } => {
                        return Ok(OnExtension::Counterexample(Invalidity {
                            reason: format!("instance not valid on extension: {}", invalidity.reason),
                            extension: Some(c.clone()),
                            assignment: slots.iter().cloned().zip(images).collect(),
                        }))
                    }
                    ValidityVerdict::Inconclusive { reason } => {
                        inconclusive.get_or_insert(reason);
                    }
                }
            }
        }
        Ok(OnExtension::Checked {
            assignments: checked,
            uncovered,
            skipped,
            truncated,
            inconclusive,
        })
    }

    /// Re-checks evidence for `d`.
    pub fn replay(&self, d: &ArgStructure, j: &Justification, b: &Base, evidence: &Evidence) -> bool {
        match evidence {
            Evidence::Derivation { trace } => &trace.start == d && trace.replay(j) && trace.end().witnesses(b),
            Evidence::Canonical { trace, subs } => {
                if &trace.start != d || !trace.replay(j) || !is_canonical(trace.end()) {
                    return false;
                }
                let parts = trace.end().immediate_substructures();
                parts.len() == subs.len() && parts.iter().zip(subs).all(|(s, e)| self.replay(s, j, b, e))
            }
            Evidence::Certificate { .. } => atomic_certificate(d, b).as_ref() == Some(evidence),
            Evidence::Bounded { .. } => {
                matches!(self.open_at(d, j, b, 0), Ok(ValidityVerdict::Valid { evidence: e }) if &e == evidence)
            }
        }
    }
}

/// The open assumptions of an all-atomic structure turned into axioms.
fn axiomize(d: &ArgStructure) -> ArgStructure {
    d.rewrite_leaves(&mut |leaf, _| {
        if leaf.is_open_assumption() {
            leaf.conclusion().as_atomic().map(ArgStructure::axiom)
        } else {
            None
        }
    })
}

fn atomic_certificate(d: &ArgStructure, b: &Base) -> Option<Evidence> {
    if !d.is_all_atomic() || d.max_escape() != 0 {
        return None;
    }
    let extended_base = d
        .assumption_formulas()
        .iter()
        .filter_map(Formula::as_atomic)
        .fold(b.clone(), |acc, a| acc.with(AtomicRule::axiom(a)));
    let axiomized = axiomize(d).to_atomic().ok()?;
    let accepted = check_derivation(&axiomized, &BTreeSet::new(), &extended_base).ok()?.is_accept();
    accepted.then_some(Evidence::Certificate {
        axiomized,
        extended_base,
    })
}

/// Valid for every justification when the axiomized structure is a
/// derivation in `b` plus the assumptions as axioms; otherwise no verdict.
pub fn valid_by_prop13(d: &ArgStructure, b: &Base) -> Result<ValidityVerdict, ValidityError> {
    if !d.is_all_atomic() {
        return Err(ValidityError::NotAtomic);
    }
    Ok(match atomic_certificate(d, b) {
        Some(evidence) => ValidityVerdict::valid(evidence),
        None => ValidityVerdict::inconclusive("axiomized structure is not a derivation in the extended base"),
    })
}

/// The reduction replacing a one-step inference from `premises` to `d`'s
/// conclusion by `d` with the premise structures grafted onto its open
/// assumptions.
#[derive(Debug, Clone)]
pub struct Graft {
    name: String,
    body: ArgStructure,
    premises: Vec<Formula>,
}

impl Reduce for Graft {
    fn name(&self) -> &str {
        &self.name
    }

    fn reduce(&self, x: &ArgStructure) -> Result<ArgStructure, ReductionError> {
        let outside = || ReductionError::OutsideDomain { name: self.name.clone() };
        let ps = x.premises();
        if x.conclusion() != self.body.conclusion()
            || ps.len() != self.premises.len()
            || ps.iter().zip(&self.premises).any(|(p, f)| p.conclusion() != f)
            || !x.discharged_at_root().is_empty()
        {
            return Err(outside());
        }
        Ok(self.body.rewrite_leaves(&mut |leaf, _| {
            if !leaf.is_open_assumption() {
                return None;
            }
            let i = self.premises.iter().position(|f| f == leaf.conclusion())?;
            // Premises sit one level below the redex root.
            Some(ps[i].shift_escapes(-1))
        }))
    }
}

/// [`graft_reduction_for`] with the premises in formula order.
pub fn graft_reduction(d: &ArgStructure) -> Result<Reduction, ValidityError> {
    let premises: Vec<Formula> = d.assumption_formulas().into_iter().collect();
    graft_reduction_for(d, premises)
}

pub fn graft_reduction_for(d: &ArgStructure, premises: Vec<Formula>) -> Result<Reduction, ValidityError> {
    if d.max_escape() != 0 {
        return Err(ValidityError::Precondition("structure has discharges above its root".into()));
    }
    if let Some(f) = d.assumption_formulas().into_iter().find(|f| !premises.contains(f)) {
        return Err(ValidityError::Precondition(format!("open assumption {f} is not a premise")));
    }
    let name = format!("graft[{}]", d.to_string().split_whitespace().collect::<Vec<_>>().join(" "));
    Ok(Reduction::new(Graft {
        name,
        body: d.clone(),
        premises,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCase {
    /// The `→I` step discharges nothing.
    Vacuous,
    /// The `→I` body has open `p` assumptions.
    OpenBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitOutcome {
    pub case: SplitCase,
    /// The input with the Split step on top.
    pub input: ArgStructure,
    pub output: ArgStructure,
    /// From `input` to `output`, modulo the justification plus `phi1`, `phi2`.
    pub trace: Trace,
    pub justification: Justification,
    pub verdict: ValidityVerdict,
}

fn atomic_split_parts(f: &Formula) -> Option<(Atom, Atom, Atom)> {
    let (p, qr) = f.as_impl()?;
    let (q, r) = qr.as_disj()?;
    Some((p.as_atomic()?, q.as_atomic()?, r.as_atomic()?))
}

/// `∨I` whose premise is an atomic derivation accepted on `base`.
fn disjunct_witnessed(x: &ArgStructure, base: &Base) -> bool {
    matches!(x.premises(), [z] if is_canonical(x) && z.witnesses(base))
}

/// Splits a closed valid argument for `p → q₁ ∨ q₂` into one for
/// `(p → q₁) ∨ (p → q₂)`: Split is put on top, the inner derivation
/// reduced to `∨I` over an atomic derivation (on `c` plus axiom `p` when the
/// body uses `p`), and `phi1`/`phi2` do the rest.
pub fn split_transform(
    v: &Validator,
    d1: &ArgStructure,
    j: &Justification,
    c: &Base,
) -> Result<SplitOutcome, ValidityError> {
    let pre = |m: &str| ValidityError::Precondition(m.to_string());
    if !d1.is_closed() || d1.max_escape() != 0 {
        return Err(ValidityError::NotClosed);
    }
    let (p, q1, q2) = atomic_split_parts(d1.conclusion()).ok_or_else(|| pre("conclusion is not p -> (q1 or q2) over atoms"))?;
    let conclusion = Formula::disj(
        Formula::imp(p.to_formula(), q1.to_formula()),
        Formula::imp(p.to_formula(), q2.to_formula()),
    );
    let caps = v.caps.search();
    let to_canonical = match search(d1, j, caps, is_canonical) {
        Explored::Stopped(t) => t,
        _ => return Err(pre("input does not reduce to a canonical structure")),
    };
    let canonical = to_canonical.end().clone();
    if !v.valid_closed(&canonical, j, c)?.is_valid() {
        return Err(pre("input is not valid on the base"));
    }
    let h = j.union(&Justification::parse("phi1,phi2")?);
    let input = ArgStructure::infer(vec![d1.clone()], conclusion.clone());
    let mut trace = to_canonical
        .embed(&input, &[0])
        .ok_or_else(|| pre("canonical form does not embed"))?;

    let vacuous = canonical.discharged_at_root().is_empty();
    let (case, detour) = if vacuous {
        (SplitCase::Vacuous, c.clone())
    } else {
        let phi1 = catalog_entry("phi1").expect("catalog");
        let next = apply_at(trace.end(), &[], &phi1)?;
        trace.steps.push(crate::reduction::Step {
            reduction: "phi1".into(),
            path: Vec::new(),
            result: next,
        });
        // Scratch base: the reduction sequence is base-independent, the
        // extension only tells when to stop.
        (SplitCase::OpenBody, c.with(AtomicRule::axiom(p.clone())))
    };
    let inner = trace.end().at(&[0, 0]).expect("→I body").clone();
    let to_atomic = match search(&inner, j, caps, |x| disjunct_witnessed(x, &detour)) {
        Explored::Stopped(t) => t,
        Explored::Exhausted => return Err(pre("inner derivation does not reduce to a disjunct over an atomic derivation")),
        Explored::CapReached => return Err(ReductionError::CapExhausted(caps.steps).into()),
    };
    let lifted = to_atomic
        .embed(trace.end(), &[0, 0])
        .ok_or_else(|| pre("inner trace does not embed"))?;
    trace = trace.then(lifted).expect("traces join");
    let phi2 = catalog_entry("phi2").expect("catalog");
    let output = apply_at(trace.end(), &[], &phi2)?;
    trace.steps.push(crate::reduction::Step {
        reduction: "phi2".into(),
        path: Vec::new(),
        result: output.clone(),
    });
    debug_assert!(trace.replay(&h));
    let verdict = v.valid_closed(&output, &h, c)?;
    Ok(SplitOutcome {
        case,
        input,
        output,
        trace,
        justification: h,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bes::{make_pool, PoolParams};
    use crate::formula::{atom, parse_formula};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn base(text: &str) -> Base {
        Base::parse(text).unwrap()
    }

    fn validator(b: &Base, atoms: &[&str]) -> Validator {
        let pool = make_pool(&atoms.iter().map(|a| atom(a)).collect(), PoolParams::default()).unwrap();
        let catalog = ClosedArgCatalog::atomic_witnesses(b, &pool).unwrap();
        Validator::new(catalog, pool, ValidityCaps::default())
    }

    fn step(premises: Vec<ArgStructure>, c: &str) -> ArgStructure {
        ArgStructure::infer(premises, f(c))
    }

    #[test]
    fn atomic_derivation_is_valid_in_zero_steps() {
        let b = base("(base (rule => p) (rule (p) => q))");
        let d = step(vec![ArgStructure::axiom(atom("p"))], "q");
        let v = validator(&b, &["p", "q"]);
        let verdict = v.valid_closed(&d, &Justification::empty(), &b).unwrap();
        let Some(Evidence::Derivation { trace }) = verdict.evidence() else { panic!("{verdict:?}") };
        assert!(trace.is_empty());
        assert!(v.replay(&d, &Justification::empty(), &b, verdict.evidence().unwrap()));
    }

    #[test]
    fn one_step_without_rule_is_invalid() {
        let d = step(vec![ArgStructure::axiom(atom("p"))], "q");
        let v = validator(&Base::empty(), &["p", "q"]);
        assert!(v.valid_closed(&d, &Justification::empty(), &Base::empty()).unwrap().is_invalid());
    }

    #[test]
    fn imp_redex_is_valid_after_one_step() {
        let b = base("(base (rule => p) (rule (p) => q))");
        let body = step(vec![ArgStructure::assumption(f("p"))], "q");
        let d = ArgStructure::imp_elim(ArgStructure::imp_intro(body, f("p")), ArgStructure::axiom(atom("p")));
        let v = validator(&b, &["p", "q"]);
        let j = Justification::parse("phi_imp").unwrap();
        let verdict = v.valid_closed(&d, &j, &b).unwrap();
        let Some(Evidence::Derivation { trace }) = verdict.evidence() else { panic!("{verdict:?}") };
        assert_eq!(trace.len(), 1);
        assert!(v.replay(&d, &j, &b, verdict.evidence().unwrap()));
    }

    #[test]
    fn open_one_step_checks() {
        let id = step(vec![ArgStructure::assumption(f("p"))], "p");
        let v = validator(&Base::empty(), &["p", "q"]);
        // p from p by an arbitrary step: no rule (p) => p in any pool
        // extension, and the σ-search finds the instance with axiom p.
        let j = Justification::empty();
        assert!(v.valid_open_bounded(&id, &j, &Base::empty()).unwrap().is_invalid());

        let pq = step(vec![ArgStructure::assumption(f("p"))], "q");
        let b = base("(base (rule (p) => q))");
        let v = validator(&b, &["p", "q"]);
        assert!(v.valid_open_bounded(&pq, &j, &b).unwrap().is_valid());

        let v = validator(&Base::empty(), &["p", "q"]);
        let verdict = v.valid_open_bounded(&pq, &j, &Base::empty()).unwrap();
        let ValidityVerdict::Invalid { invalidity } = verdict else { panic!("{verdict:?}") };
        assert!(invalidity.extension.unwrap().contains(&AtomicRule::axiom(atom("p"))));
    }

    #[test]
    fn atomic_certificate_examples() {
        let b = base("(base (rule (p) => q))");
        let d = step(vec![ArgStructure::assumption(f("p"))], "q");
        assert!(valid_by_prop13(&d, &b).unwrap().is_valid());
        assert!(valid_by_prop13(&ArgStructure::assumption(f("p")), &Base::empty()).unwrap().is_valid());
        assert_eq!(
            valid_by_prop13(&ArgStructure::assumption(f("(or p q)")), &b),
            Err(ValidityError::NotAtomic)
        );
    }

    #[test]
    fn graft_reproduces_modus_ponens() {
        let mp = ArgStructure::imp_elim(ArgStructure::assumption(f("(imp p q)")), ArgStructure::assumption(f("p")));
        let phi = graft_reduction_for(&mp, vec![f("(imp p q)"), f("p")]).unwrap();
        let d1 = step(vec![ArgStructure::axiom(atom("r"))], "(imp p q)");
        let d2 = ArgStructure::axiom(atom("p"));
        let one_step = ArgStructure::infer(vec![d1.clone(), d2.clone()], f("q"));
        assert_eq!(phi.reduce(&one_step).unwrap(), ArgStructure::imp_elim(d1, d2));

        let id = graft_reduction(&ArgStructure::assumption(f("a"))).unwrap();
        let d = step(vec![ArgStructure::axiom(atom("p"))], "a");
        assert_eq!(id.reduce(&ArgStructure::infer(vec![d.clone()], f("a"))).unwrap(), d);
    }

    #[test]
    fn split_transform_open_body() {
        let c = base("(base (rule (p) => q))");
        let body = ArgStructure::or_intro_left(step(vec![ArgStructure::assumption(f("p"))], "q"), f("r"));
        let d1 = ArgStructure::imp_intro(body, f("p"));
        let v = validator(&c, &["p", "q", "r"]);
        let out = split_transform(&v, &d1, &Justification::empty(), &c).unwrap();
        assert_eq!(out.case, SplitCase::OpenBody);
        let expected = ArgStructure::or_intro_left(
            ArgStructure::imp_intro(step(vec![ArgStructure::assumption(f("p"))], "q"), f("p")),
            f("(imp p r)"),
        );
        assert_eq!(out.output, expected);
        assert!(out.verdict.is_valid(), "{:?}", out.verdict);
        assert!(out.trace.replay(&out.justification));
    }

    #[test]
    fn split_transform_vacuous() {
        let c = base("(base (rule => q))");
        let d1 = ArgStructure::imp_intro_vacuous(ArgStructure::or_intro_left(ArgStructure::axiom(atom("q")), f("r")), f("p"));
        let v = validator(&c, &["p", "q", "r"]);
        let out = split_transform(&v, &d1, &Justification::empty(), &c).unwrap();
        assert_eq!(out.case, SplitCase::Vacuous);
        assert_eq!(
            out.output,
            ArgStructure::or_intro_left(ArgStructure::imp_intro_vacuous(ArgStructure::axiom(atom("q")), f("p")), f("(imp p r)"))
        );
        assert!(out.verdict.is_valid());
    }

    #[test]
    fn split_transform_rejects_non_canonical() {
        let c = base("(base (rule => q))");
        let d1 = step(vec![ArgStructure::axiom(atom("q"))], "(imp p (or q r))");
        let v = validator(&c, &["p", "q", "r"]);
        assert!(matches!(
            split_transform(&v, &d1, &Justification::empty(), &c),
            Err(ValidityError::Precondition(_))
        ));
    }
}
