//! Reductions on argument structures, the rewrite relation they induce, and
//! the concrete catalog: `phi_imp`, `iota`, `phi1`, `phi2`, `split_to_s`,
//! `phi_s`.
//!
//! A reduction is a partial function given as a transform that refuses
//! inputs outside its domain. Catalog transforms see nothing but the input
//! structure, so they cannot depend on a base or on other reductions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;
use thiserror::Error;

use crate::argstruct::{build_inference, is_canonical, sigma_instance, ArgError, ArgStructure, Discharge, Inference, NodeKind, Path, SigmaAssignment};
use crate::formula::Formula;
use crate::par;
use crate::samples;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("{name} is not defined on this structure")]
    OutsideDomain { name: String },
    #[error("{name}: antecedent {antecedent} is not a Harrop formula")]
    NonHarrop { name: String, antecedent: Formula },
    #[error("unknown reduction '{0}'")]
    Unknown(String),
    #[error("no derivation found within {0} steps")]
    CapExhausted(usize),
    #[error(transparent)]
    Arg(#[from] ArgError),
}

pub trait Reduce: Send + Sync {
    fn name(&self) -> &str;

    /// The contractum, or an error outside the domain.
    fn reduce(&self, d: &ArgStructure) -> Result<ArgStructure, ReductionError>;

    fn in_domain(&self, d: &ArgStructure) -> bool {
        self.reduce(d).is_ok()
    }
}

/// Shared handle to a reduction; equality and order go by name.
#[derive(Clone)]
pub struct Reduction(Arc<dyn Reduce>);

impl Reduction {
    pub fn new(r: impl Reduce + 'static) -> Self {
        Reduction(Arc::new(r))
    }

    pub fn name(&self) -> &str {
        self.0.name()
    }

    pub fn reduce(&self, d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
        self.0.reduce(d)
    }

    pub fn in_domain(&self, d: &ArgStructure) -> bool {
        self.0.in_domain(d)
    }
}

impl fmt::Debug for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Reduction {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl Eq for Reduction {}

/// A finite set of reductions.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Justification {
    members: BTreeMap<String, Reduction>,
}

impl Serialize for Justification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.members.keys())
    }
}

impl Justification {
    pub fn empty() -> Self {
        Justification::default()
    }

    pub fn of<I: IntoIterator<Item = Reduction>>(rs: I) -> Self {
        Justification {
            members: rs.into_iter().map(|r| (r.name().to_string(), r)).collect(),
        }
    }

    /// Catalog reductions by name, comma separated.
    pub fn parse(names: &str) -> Result<Self, ReductionError> {
        names
            .split(',')
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .map(|n| catalog_entry(n).ok_or_else(|| ReductionError::Unknown(n.to_string())))
            .collect::<Result<Vec<_>, _>>()
            .map(Justification::of)
    }

    pub fn insert(&mut self, r: Reduction) {
        self.members.insert(r.name().to_string(), r);
    }

    pub fn union(&self, other: &Justification) -> Justification {
        let mut out = self.clone();
        for r in other.iter() {
            out.insert(r.clone());
        }
        out
    }

    pub fn is_superset_of(&self, other: &Justification) -> bool {
        other.members.keys().all(|k| self.members.contains_key(k))
    }

    pub fn get(&self, name: &str) -> Option<&Reduction> {
        self.members.get(name)
    }

    /// Members in name order.
    pub fn iter(&self) -> impl Iterator<Item = &Reduction> {
        self.members.values()
    }

    pub fn names(&self) -> Vec<String> {
        self.members.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl fmt::Debug for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.keys()).finish()
    }
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

struct Catalog {
    name: &'static str,
    transform: fn(&ArgStructure) -> Result<ArgStructure, ReductionError>,
}

impl Reduce for Catalog {
    fn name(&self) -> &str {
        self.name
    }

    fn reduce(&self, d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
        (self.transform)(d)
    }
}

pub const CATALOG: [&str; 6] = ["phi_imp", "iota", "phi1", "phi2", "split_to_s", "phi_s"];

pub fn catalog_entry(name: &str) -> Option<Reduction> {
    let transform: fn(&ArgStructure) -> Result<ArgStructure, ReductionError> = match name {
        "phi_imp" => phi_imp,
        "iota" => iota,
        "phi1" => phi1,
        "phi2" => phi2,
        "split_to_s" => split_to_s,
        "phi_s" => phi_s,
        _ => return None,
    };
    let name = CATALOG.iter().find(|n| **n == name).expect("listed above");
    Some(Reduction::new(Catalog { name, transform }))
}

pub fn catalog() -> Vec<Reduction> {
    CATALOG.iter().map(|n| catalog_entry(n).expect("catalog name")).collect()
}

fn outside(name: &str) -> ReductionError {
    ReductionError::OutsideDomain { name: name.to_string() }
}

fn no_root_discharges(d: &ArgStructure) -> bool {
    d.discharged_at_root().is_empty()
}

/// Every node discharged at the root is an assumption leaf satisfying `ok`,
/// which gets the premise index and the leaf's formula.
fn root_discharges_are(d: &ArgStructure, mut ok: impl FnMut(usize, &Formula) -> bool) -> bool {
    d.discharged_at_root()
        .iter()
        .all(|(path, n)| matches!(n.kind(), NodeKind::Assumption(_)) && ok(path[0], n.conclusion()))
}

/// `→E` whose major premise is `→I`: the minor premise is grafted onto the
/// assumptions the `→I` step discharged.
pub fn phi_imp(d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
    let err = || outside("phi_imp");
    let [major, minor] = d.premises() else { return Err(err()) };
    let (a, b) = major.conclusion().as_impl().ok_or_else(err)?;
    if minor.conclusion() != a || d.conclusion() != b || !no_root_discharges(d) {
        return Err(err());
    }
    let [body] = major.premises() else { return Err(err()) };
    if body.conclusion() != b || !root_discharges_are(major, |_, f| f == a) {
        return Err(err());
    }
    // The minor sits one level below the redex root, the body two.
    let graft = minor.shift_escapes(1);
    let out = body.rewrite_leaves(&mut |leaf, depth| leaf.is_bound_just_above(depth).then(|| graft.clone()));
    Ok(out.shift_escapes(-2))
}

/// From `A → (B → C)` to `B → (A → C)` by one step, expanded into `→E`
/// and `→I` steps.
pub fn iota(d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
    let err = || outside("iota");
    let [x] = d.premises() else { return Err(err()) };
    let (a, bc) = x.conclusion().as_impl().ok_or_else(err)?;
    let (b, c) = bc.as_impl().ok_or_else(err)?;
    let expected = Formula::imp(b.clone(), Formula::imp(a.clone(), c.clone()));
    if d.conclusion() != &expected || !no_root_discharges(d) {
        return Err(err());
    }
    let inner = ArgStructure::infer(
        vec![x.shift_escapes(3), ArgStructure::bound_assumption(a.clone(), 3)],
        bc.clone(),
    );
    let body = ArgStructure::infer(vec![inner, ArgStructure::bound_assumption(b.clone(), 3)], c.clone());
    let ac = ArgStructure::infer(vec![body], Formula::imp(a.clone(), c.clone()));
    Ok(ArgStructure::infer(vec![ac], expected))
}

/// `(A, B, C)` when `premise` is `A → B ∨ C` and `conclusion` is
/// `(A → B) ∨ (A → C)`.
pub fn split_shape(premise: &Formula, conclusion: &Formula) -> Option<(Formula, Formula, Formula)> {
    let (a, bc) = premise.as_impl()?;
    let (b, c) = bc.as_disj()?;
    let expected = Formula::disj(Formula::imp(a.clone(), b.clone()), Formula::imp(a.clone(), c.clone()));
    (conclusion == &expected).then(|| (a.clone(), b.clone(), c.clone()))
}

/// The `→I` premise of an atomic Split step on a closed structure.
fn atomic_split_premise(d: &ArgStructure) -> Option<(&ArgStructure, Formula, Formula, Formula)> {
    if d.max_escape() != 0 || !d.is_closed() || !no_root_discharges(d) {
        return None;
    }
    let [x] = d.premises() else { return None };
    let (p, q, r) = split_shape(x.conclusion(), d.conclusion())?;
    if !(p.is_atomic() && q.is_atomic() && r.is_atomic()) {
        return None;
    }
    let [_] = x.premises() else { return None };
    is_canonical(x).then_some((x, p, q, r))
}

/// Split over a closed `→I` whose body is open: the discharged `p`
/// assumptions become axioms and the `→I` step discharges nothing.
pub fn phi1(d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
    let err = || outside("phi1");
    let (x, p, _, _) = atomic_split_premise(d).ok_or_else(err)?;
    if x.discharged_at_root().is_empty() {
        return Err(err());
    }
    let p_atom = p.as_atomic().expect("atomic");
    let body = x.premises()[0].rewrite_leaves(&mut |leaf, depth| {
        leaf.is_bound_just_above(depth).then(|| ArgStructure::axiom(p_atom.clone()))
    });
    let x = ArgStructure::infer(vec![body], x.conclusion().clone());
    Ok(ArgStructure::infer(vec![x], d.conclusion().clone()))
}

/// Split over a vacuous `→I` over `∨I` over an atomic derivation: undischarged
/// axiom `p` leaves become assumptions, and `∨I` and `→I` swap with the
/// `→I` discharging them. When both disjuncts are equal the left one is
/// taken.
pub fn phi2(d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
    let err = || outside("phi2");
    let (x, p, q1, q2) = atomic_split_premise(d).ok_or_else(err)?;
    if !x.discharged_at_root().is_empty() {
        return Err(err());
    }
    let y = &x.premises()[0];
    let [z] = y.premises() else { return Err(err()) };
    if !is_canonical(y) || z.to_atomic().is_err() {
        return Err(err());
    }
    let q = z.conclusion().clone();
    let left = q == q1;
    if !left && q != q2 {
        return Err(err());
    }
    let body = z.rewrite_leaves(&mut |leaf, _| {
        (matches!(leaf.kind(), NodeKind::Axiom(None)) && leaf.conclusion() == &p)
            .then(|| ArgStructure::bound_assumption(p.clone(), 1))
    });
    let lam = ArgStructure::infer(vec![body], Formula::imp(p, q));
    Ok(ArgStructure::infer(vec![lam], d.conclusion().clone()))
}

/// Split* on a Harrop antecedent unfolded into the generalised elimination
/// `S` with two `∨I` minor branches.
pub fn split_to_s(d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
    let name = "split_to_s";
    let [x] = d.premises() else { return Err(outside(name)) };
    let (a, b, c) = split_shape(x.conclusion(), d.conclusion()).ok_or_else(|| outside(name))?;
    if !no_root_discharges(d) {
        return Err(outside(name));
    }
    if !a.is_harrop() {
        return Err(ReductionError::NonHarrop {
            name: name.to_string(),
            antecedent: a,
        });
    }
    let concl = d.conclusion().clone();
    let major = ArgStructure::infer(
        vec![x.shift_escapes(1), ArgStructure::bound_assumption(a.clone(), 2)],
        Formula::disj(b.clone(), c.clone()),
    );
    let left = ArgStructure::infer(vec![ArgStructure::bound_assumption(Formula::imp(a.clone(), b), 2)], concl.clone());
    let right = ArgStructure::infer(vec![ArgStructure::bound_assumption(Formula::imp(a, c), 2)], concl.clone());
    Ok(ArgStructure::infer(vec![major, left, right], concl))
}

/// Recognises an `S` step: returns the disjuncts of the major premise.
fn s_shape(d: &ArgStructure) -> Option<(Formula, Formula)> {
    let [major, m1, m2] = d.premises() else { return None };
    let (b1, b2) = major.conclusion().as_disj()?;
    if m1.conclusion() != d.conclusion() || m2.conclusion() != d.conclusion() {
        return None;
    }
    let mut antecedent: Option<Formula> = None;
    let mut consistent = true;
    let ok = root_discharges_are(d, |premise, f| {
        let a = match premise {
            0 => Some(f.clone()),
            1 => f.as_impl().filter(|(_, b)| *b == b1).map(|(a, _)| a.clone()),
            _ => f.as_impl().filter(|(_, b)| *b == b2).map(|(a, _)| a.clone()),
        };
        match (a, &antecedent) {
            (None, _) => false,
            (Some(a), None) => {
                antecedent = Some(a);
                true
            }
            (Some(a), Some(prev)) => {
                consistent &= &a == prev;
                true
            }
        }
    });
    (ok && consistent).then(|| (b1.clone(), b2.clone()))
}

/// `S` whose major premise ends with `∨I`: the major branch, abstracted by
/// `→I`, replaces the discharged `A → B_i` assumptions of the selected minor
/// branch. The left branch is selected when both disjuncts are equal.
pub fn phi_s(d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
    let err = || outside("phi_s");
    let (b1, b2) = s_shape(d).ok_or_else(err)?;
    let major = &d.premises()[0];
    let [inner] = major.premises() else { return Err(err()) };
    if !no_root_discharges(major) || major.binding().is_some() {
        return Err(err());
    }
    let minor = if inner.conclusion() == &b1 {
        &d.premises()[1]
    } else if inner.conclusion() == &b2 {
        &d.premises()[2]
    } else {
        return Err(err());
    };
    // The branch moves from depth 2 to depth 1 under the new →I; its
    // assumptions discharged at S now point at that →I.
    let lifted = inner.shift_escapes(-1);
    let out = minor.rewrite_leaves(&mut |leaf, depth| {
        leaf.is_bound_just_above(depth).then(|| {
            // Written in the coordinates of the minor's root, one level
            // below the redex root.
            ArgStructure::infer(vec![lifted.clone()], leaf.conclusion().clone()).shift_escapes(1)
        })
    });
    Ok(out.shift_escapes(-1))
}

/// One immediate reduction step at `path`.
pub fn apply_at(d: &ArgStructure, path: &[usize], phi: &Reduction) -> Result<ArgStructure, ReductionError> {
    let sub = d.at(path).ok_or_else(|| ArgError::NoSuchPath(path.to_vec()))?;
    let out = phi.reduce(sub)?;
    Ok(d.replace_at(path, out)?)
}

/// All immediate reducts, by position (preorder) then reduction name.
pub fn successors(d: &ArgStructure, j: &Justification) -> Vec<Step> {
    let mut out = Vec::new();
    for path in d.positions() {
        let sub = d.at(&path).expect("listed position");
        for phi in j.iter() {
            if let Ok(r) = phi.reduce(sub) {
                if let Ok(result) = d.replace_at(&path, r) {
                    out.push(Step {
                        reduction: phi.name().to_string(),
                        path: path.clone(),
                        result,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub reduction: String,
    pub path: Path,
    pub result: ArgStructure,
}

/// `start = d₀ → d₁ → … → dₖ`, each step an immediate reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub start: ArgStructure,
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn empty(start: ArgStructure) -> Self {
        Trace { start, steps: Vec::new() }
    }

    pub fn end(&self) -> &ArgStructure {
        self.steps.last().map_or(&self.start, |s| &s.result)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Concatenation; `None` unless `next` starts where this trace ends.
    pub fn then(mut self, next: Trace) -> Option<Trace> {
        if self.end() != &next.start {
            return None;
        }
        self.steps.extend(next.steps);
        Some(self)
    }

    /// Re-applies every step with the named reductions of `j`.
    pub fn replay(&self, j: &Justification) -> bool {
        let mut cur = self.start.clone();
        for s in &self.steps {
            let Some(phi) = j.get(&s.reduction) else { return false };
            match apply_at(&cur, &s.path, phi) {
                Ok(next) if next == s.result => cur = next,
                _ => return false,
            }
        }
        true
    }

    /// The same steps performed on the sub-structure at `prefix` of
    /// `outer`, which must coincide with this trace's start and have no
    /// discharges reaching above it.
    pub fn embed(&self, outer: &ArgStructure, prefix: &[usize]) -> Option<Trace> {
        if outer.at(prefix)? != &self.start || self.start.max_escape() != 0 {
            return None;
        }
        let mut cur = outer.clone();
        let mut steps = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            cur = cur.replace_at(prefix, s.result.clone()).ok()?;
            steps.push(Step {
                reduction: s.reduction.clone(),
                path: prefix.iter().chain(&s.path).copied().collect(),
                result: cur.clone(),
            });
        }
        Some(Trace {
            start: outer.clone(),
            steps,
        })
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "0: {}", self.start)?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "{}: {} at {:?}", i + 1, s.reduction, s.path)?;
            writeln!(f, "{}", s.result)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchCaps {
    /// Longest trace explored.
    pub steps: usize,
    /// Most distinct structures visited.
    pub states: usize,
}

impl SearchCaps {
    pub fn steps(steps: usize) -> Self {
        SearchCaps { steps, states: 20_000 }
    }
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps::steps(8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Explored<T> {
    Stopped(T),
    /// Every reachable structure was visited.
    Exhausted,
    /// A cap was hit with structures left unexplored.
    CapReached,
}

/// Breadth-first walk of everything `d` reduces to modulo `j`, in canonical
/// order (level, then position, then reduction name), each structure once.
/// `visit` sees each structure with a trace reaching it.
pub fn explore<T>(
    d: &ArgStructure,
    j: &Justification,
    caps: SearchCaps,
    mut visit: impl FnMut(&Trace) -> ControlFlow<T>,
) -> Explored<T> {
    struct Node {
        parent: Option<(usize, String, Path)>,
        state: ArgStructure,
    }
    let trace_to = |nodes: &Vec<Node>, mut i: usize| {
        let mut steps = Vec::new();
        while let Some((p, name, path)) = &nodes[i].parent {
            steps.push(Step {
                reduction: name.clone(),
                path: path.clone(),
                result: nodes[i].state.clone(),
            });
            i = *p;
        }
        steps.reverse();
        Trace {
            start: nodes[0].state.clone(),
            steps,
        }
    };
    let mut nodes = vec![Node {
        parent: None,
        state: d.clone(),
    }];
    let mut seen: HashMap<ArgStructure, usize> = HashMap::from([(d.clone(), 0)]);
    if let ControlFlow::Break(t) = visit(&Trace::empty(d.clone())) {
        return Explored::Stopped(t);
    }
    let mut frontier: Vec<usize> = vec![0];
    let mut level = 0;
    while !frontier.is_empty() {
        let expanded = par::map(&frontier, |&i| successors(&nodes[i].state, j));
        if level == caps.steps {
            return if expanded.iter().any(|s| s.iter().any(|s| !seen.contains_key(&s.result))) {
                Explored::CapReached
            } else {
                Explored::Exhausted
            };
        }
        let mut next = Vec::new();
        for (&parent, steps) in frontier.iter().zip(expanded) {
            for s in steps {
                if seen.contains_key(&s.result) {
                    continue;
                }
                if nodes.len() >= caps.states {
                    return Explored::CapReached;
                }
                let i = nodes.len();
                seen.insert(s.result.clone(), i);
                nodes.push(Node {
                    parent: Some((parent, s.reduction, s.path)),
                    state: s.result,
                });
                if let ControlFlow::Break(t) = visit(&trace_to(&nodes, i)) {
                    return Explored::Stopped(t);
                }
                next.push(i);
            }
        }
        frontier = next;
        level += 1;
    }
    Explored::Exhausted
}

/// Shortest trace to a structure satisfying `goal`.
pub fn search(
    d: &ArgStructure,
    j: &Justification,
    caps: SearchCaps,
    goal: impl Fn(&ArgStructure) -> bool,
) -> Explored<Trace> {
    explore(d, j, caps, |t| {
        if goal(t.end()) {
            ControlFlow::Break(t.clone())
        } else {
            ControlFlow::Continue(())
        }
    })
}

/// `Ok(Some(trace))` if `d` reduces to `target` within `step_cap` steps,
/// `Ok(None)` if the whole reduction space was searched without reaching it.
pub fn reduces_to(
    d: &ArgStructure,
    target: &ArgStructure,
    j: &Justification,
    step_cap: usize,
) -> Result<Option<Trace>, ReductionError> {
    match search(d, j, SearchCaps::steps(step_cap), |x| x == target) {
        Explored::Stopped(t) => Ok(Some(t)),
        Explored::Exhausted => Ok(None),
        Explored::CapReached => Err(ReductionError::CapExhausted(step_cap)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LawViolation {
    /// The generator produced something outside the domain.
    NotInDomain,
    /// Law 1: the output is not a well-formed structure.
    Malformed(String),
    /// Law 2: a σ-instance left the domain.
    DomainNotClosed,
    /// Law 3: conclusion changed or new assumptions appeared.
    AssumptionsGrew { new: Vec<Formula> },
    ConclusionChanged,
    /// Law 4: reduction does not commute with σ.
    NotCommuting,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub law: u8,
    pub violation: LawViolation,
    pub input: ArgStructure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LawReport {
    pub reduction: String,
    pub samples: usize,
    pub counterexample: Option<Counterexample>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Checks laws 1–4 on `sample_count` inputs from `generate`, each with a
/// random σ. Stops at the first counterexample.
pub fn check_laws_with(
    phi: &Reduction,
    generate: &dyn Fn(&mut StdRng) -> ArgStructure,
    sample_count: usize,
    seed: u64,
) -> LawReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut found = None;
    for _ in 0..sample_count {
        let d = generate(&mut rng);
        let sigma = samples::random_sigma(&d, &mut rng);
        if let Some((law, violation)) = check_one(phi, &d, &sigma) {
            found = Some(Counterexample { law, violation, input: d });
            break;
        }
    }
    LawReport {
        reduction: phi.name().to_string(),
        samples: sample_count,
        counterexample: found,
    }
}

fn check_one(
    phi: &Reduction,
    d: &ArgStructure,
    sigma: &SigmaAssignment,
) -> Option<(u8, LawViolation)> {
    let Ok(out) = phi.reduce(d) else {
        return Some((2, LawViolation::NotInDomain));
    };
    if let Err(e) = out.audit() {
        return Some((1, LawViolation::Malformed(e.to_string())));
    }
    if out.conclusion() != d.conclusion() {
        return Some((3, LawViolation::ConclusionChanged));
    }
    let before = d.assumption_formulas();
    let new: Vec<Formula> = out.assumption_formulas().difference(&before).cloned().collect();
    if !new.is_empty() {
        return Some((3, LawViolation::AssumptionsGrew { new }));
    }
    let d_sigma = sigma_instance(d, sigma).expect("σ covers the sample");
    let Ok(out_of_instance) = phi.reduce(&d_sigma) else {
        return Some((2, LawViolation::DomainNotClosed));
    };
    match sigma_instance(&out, sigma) {
        Ok(instance_of_out) if instance_of_out == out_of_instance => None,
        _ => Some((4, LawViolation::NotCommuting)),
    }
}

/// Law check for a catalog reduction with its own sample generator.
pub fn check_reduction_laws(phi: &Reduction, sample_count: usize, seed: u64) -> Option<LawReport> {
    let generate = samples::generator_for(phi.name())?;
    Some(check_laws_with(phi, &generate, sample_count, seed))
}

/// `phi_imp` with a seeded defect: it returns the `→I` body with the
/// discharged assumptions left open.
pub fn broken_phi_imp() -> Reduction {
    struct Broken;
    impl Reduce for Broken {
        fn name(&self) -> &str {
            "phi_imp_broken"
        }
        fn reduce(&self, d: &ArgStructure) -> Result<ArgStructure, ReductionError> {
            phi_imp(d)?;
            let body = d.premises()[0].premises()[0].clone();
            Ok(body
                .rewrite_leaves(&mut |leaf, depth| {
                    leaf.is_bound_just_above(depth)
                        .then(|| ArgStructure::assumption(leaf.conclusion().clone()))
                })
                .shift_escapes(-2))
        }
    }
    Reduction::new(Broken)
}

/// The `→I` step over `body` discharging every open `a`, as an inference.
pub fn abstract_over(body: ArgStructure, a: &Formula) -> Result<ArgStructure, ArgError> {
    let delta = body
        .positions()
        .into_iter()
        .filter(|p| body.at(p).is_some_and(|n| n.is_open_assumption() && n.conclusion() == a))
        .map(|path| Discharge { premise: 0, path })
        .collect();
    let conclusion = Formula::imp(a.clone(), body.conclusion().clone());
    build_inference(Inference {
        premises: vec![body],
        conclusion,
        delta,
    })
}
