//! Base-extension consequence over a finite pool of candidate rules.
//!
//! The universal quantifier over extensions `C ⊇ B` is read over the
//! extensions `B ∪ S` with `S` a subset of the pool. Every such extension is
//! a world identified by a bitmask over the pool rules that are not already
//! in `B`. A refutation names the extension where a clause fails and can be
//! replayed; an affirmation only means no pool extension refutes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::{AtomicRule, Base, Derivable, DeriveError, Deriver, PremiseSlot, DEFAULT_DEPTH_CAP};
use crate::formula::{apply_substitution, Atom, AtomSubstitution, Formula};
use crate::par;
use crate::sexp::{self, SyntaxError};

/// Largest number of pool rules outside the base that one evaluation accepts.
pub const MAX_POOL_RULES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BesError {
    #[error("extension pool needs a nonempty atom universe")]
    EmptyUniverse,
    #[error("pool level {0} unsupported (at most 2)")]
    LevelUnsupported(usize),
    #[error("pool has {size} rules outside the base, more than the budget of {cap}")]
    PoolBudget { size: usize, cap: usize },
    #[error(transparent)]
    Derive(#[from] DeriveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolParams {
    pub max_level: usize,
    pub max_premises: usize,
    pub max_size: usize,
}

impl Default for PoolParams {
    fn default() -> Self {
        PoolParams {
            max_level: 1,
            max_premises: 1,
            max_size: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionPool {
    rules: Vec<AtomicRule>,
    atoms: BTreeSet<Atom>,
    params: Option<PoolParams>,
}

/// Deterministic pool: axioms, then level-1 rules from sets of distinct
/// premises, then (level 2) rules with one premise discharging one axiom;
/// each group in rule order, the whole truncated to `max_size`.
pub fn make_pool(atoms: &BTreeSet<Atom>, params: PoolParams) -> Result<ExtensionPool, BesError> {
    if atoms.is_empty() {
        return Err(BesError::EmptyUniverse);
    }
    if params.max_level > 2 {
        return Err(BesError::LevelUnsupported(params.max_level));
    }
    let universe: Vec<Atom> = atoms.iter().cloned().collect();
    let mut rules: Vec<AtomicRule> = universe.iter().cloned().map(AtomicRule::axiom).collect();
    if params.max_level >= 1 {
        let mut level1 = Vec::new();
        for k in 1..=params.max_premises.min(universe.len()) {
            for premises in universe.iter().combinations(k) {
                for c in &universe {
                    level1.push(AtomicRule::simple(premises.iter().map(|a| (*a).clone()), c.clone()));
                }
            }
        }
        level1.sort();
        rules.extend(level1);
    }
    if params.max_level >= 2 {
        let mut level2 = Vec::new();
        for discharged in &universe {
            for premise in &universe {
                for c in &universe {
                    level2.push(AtomicRule::with_slots(
                        vec![PremiseSlot::discharging([AtomicRule::axiom(discharged.clone())], premise.clone())],
                        c.clone(),
                    ));
                }
            }
        }
        level2.sort();
        rules.extend(level2);
    }
    rules.truncate(params.max_size);
    Ok(ExtensionPool {
        rules,
        atoms: atoms.clone(),
        params: Some(params),
    })
}

impl ExtensionPool {
    /// A hand-picked pool; order is kept as given, duplicates dropped.
    pub fn from_rules<I: IntoIterator<Item = AtomicRule>>(rules: I) -> Self {
        let mut seen = BTreeSet::new();
        let rules: Vec<AtomicRule> = rules.into_iter().filter(|r| seen.insert(r.clone())).collect();
        let atoms = rules.iter().flat_map(|r| r.atoms()).collect();
        ExtensionPool {
            rules,
            atoms,
            params: None,
        }
    }

    pub fn empty() -> Self {
        ExtensionPool::from_rules([])
    }

    /// `(pool <rule>*)`, order kept.
    pub fn parse(text: &str) -> Result<ExtensionPool, SyntaxError> {
        let s = sexp::parse_one(text)?;
        let items = s
            .tagged("pool")
            .ok_or_else(|| SyntaxError::new(s.pos(), "expected (pool <rule>*)"))?;
        let rules = items.iter().map(AtomicRule::from_sexp).collect::<Result<Vec<_>, _>>()?;
        Ok(ExtensionPool::from_rules(rules))
    }

    pub fn rules(&self) -> &[AtomicRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn is_subpool_of(&self, other: &ExtensionPool) -> bool {
        self.rules.iter().all(|r| other.rules.contains(r))
    }

    pub fn union(&self, other: &ExtensionPool) -> ExtensionPool {
        ExtensionPool::from_rules(self.rules.iter().chain(other.rules.iter()).cloned())
    }

    pub fn bounds(&self) -> PoolBounds {
        PoolBounds {
            pool_rules: self.rules.len(),
            max_level: self.rules.iter().map(|r| r.level()).max().unwrap_or(0),
            atoms: self.atoms.iter().map(|a| a.name().to_string()).collect(),
            params: self.params,
        }
    }
}

impl fmt::Display for ExtensionPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(pool")?;
        for r in &self.rules {
            write!(f, " {r}")?;
        }
        f.write_str(")")
    }
}

/// What an affirmation is relative to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolBounds {
    pub pool_rules: usize,
    pub max_level: usize,
    pub atoms: Vec<String>,
    pub params: Option<PoolParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Why a formula fails at a world. `Consequence` moves to an extension where
/// every antecedent holds and the succedent fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Refutation {
    Underivable {
        atom: Atom,
    },
    Conj {
        side: Side,
        inner: Box<Refutation>,
    },
    Disj {
        left: Box<Refutation>,
        right: Box<Refutation>,
    },
    Consequence {
        extension: Base,
        antecedents: Vec<Formula>,
        succedent: Box<Refutation>,
    },
}

impl Refutation {
    /// True when no antecedent used contains an implication. Holding of an
    /// implication-free formula at a fixed base does not depend on the pool,
    /// so such a certificate refutes the unrestricted consequence as well.
    pub fn is_unconditional(&self) -> bool {
        match self {
            Refutation::Underivable { .. } => true,
            Refutation::Conj { inner, .. } => inner.is_unconditional(),
            Refutation::Disj { left, right } => left.is_unconditional() && right.is_unconditional(),
            Refutation::Consequence {
                antecedents,
                succedent,
                ..
            } => antecedents.iter().all(|a| !has_implication(a)) && succedent.is_unconditional(),
        }
    }
}

fn has_implication(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) | Formula::Bottom => false,
        Formula::Impl(..) => true,
        Formula::Conj(a, b) | Formula::Disj(a, b) => has_implication(a) || has_implication(b),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequentVerdict {
    HoldsWithinPool { bounds: PoolBounds },
    RefutedBy { extension: Base, trace: Refutation },
}

impl SequentVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SequentVerdict::HoldsWithinPool { .. })
    }

    pub fn extension(&self) -> Option<&Base> {
        match self {
            SequentVerdict::RefutedBy { extension, .. } => Some(extension),
            SequentVerdict::HoldsWithinPool { .. } => None,
        }
    }

    /// Re-evaluates every clause named by a refutation certificate. An
    /// affirmation replays iff a fresh evaluation also affirms.
    pub fn replay(
        &self,
        gamma: &[Formula],
        a: &Formula,
        b: &Base,
        pool: &ExtensionPool,
    ) -> Result<bool, BesError> {
        let ev = Evaluator::new(b, pool)?;
        match self {
            SequentVerdict::HoldsWithinPool { .. } => Ok(ev.sequent(gamma, a)?.holds()),
            SequentVerdict::RefutedBy { extension, trace } => {
                let gamma = normalize(gamma);
                let ok = if gamma.is_empty() {
                    ev.replay_formula(trace, a, 0)?
                } else {
                    ev.replay_consequence(trace, &gamma, a, 0)?
                };
                Ok(ok && top_extension(trace, b) == *extension)
            }
        }
    }
}

fn top_extension(trace: &Refutation, b: &Base) -> Base {
    match trace {
        Refutation::Consequence { extension, .. } => extension.clone(),
        _ => b.clone(),
    }
}

fn normalize(gamma: &[Formula]) -> Vec<Formula> {
    let set: BTreeSet<Formula> = gamma.iter().cloned().collect();
    set.into_iter().collect()
}

type Mask = u32;
type SeqKey = (Mask, Vec<Formula>, Formula);

/// Memoized evaluator over the worlds `B ∪ S`, `S ⊆ pool`.
pub struct Evaluator<'a> {
    base: &'a Base,
    extra: Vec<AtomicRule>,
    derivs: Vec<OnceLock<Result<Arc<Derivable>, DeriveError>>>,
    holds_memo: Mutex<HashMap<(Mask, Formula), bool>>,
    above_memo: Mutex<HashMap<SeqKey, bool>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(base: &'a Base, pool: &ExtensionPool) -> Result<Self, BesError> {
        let extra: Vec<AtomicRule> = pool.rules.iter().filter(|r| !base.contains(r)).cloned().collect();
        if extra.len() > MAX_POOL_RULES {
            return Err(BesError::PoolBudget {
                size: extra.len(),
                cap: MAX_POOL_RULES,
            });
        }
        let worlds = 1usize << extra.len();
        Ok(Evaluator {
            base,
            extra,
            derivs: (0..worlds).map(|_| OnceLock::new()).collect(),
            holds_memo: Mutex::new(HashMap::new()),
            above_memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn world_count(&self) -> usize {
        self.derivs.len()
    }

    /// Base of a world.
    pub fn world(&self, mask: Mask) -> Base {
        let mut out = self.base.clone();
        for (i, r) in self.extra.iter().enumerate() {
            if mask & (1 << i) != 0 {
                out.insert(r.clone());
            }
        }
        out
    }

    /// Inverse of [`Evaluator::world`].
    pub fn mask_of(&self, c: &Base) -> Option<Mask> {
        if !crate::atomic::extends(c, self.base) {
            return None;
        }
        let mut mask = 0;
        for r in c.rules() {
            if self.base.contains(r) {
                continue;
            }
            let i = self.extra.iter().position(|x| x == r)?;
            mask |= 1 << i;
        }
        Some(mask)
    }

    /// Worlds above `mask`, by number of added rules and then
    /// lexicographically by rule index.
    pub fn worlds_above(&self, mask: Mask) -> Vec<Mask> {
        let free: Vec<usize> = (0..self.extra.len()).filter(|i| mask & (1 << i) == 0).collect();
        let mut out = Vec::with_capacity(1 << free.len());
        for k in 0..=free.len() {
            for combo in free.iter().combinations(k) {
                out.push(combo.into_iter().fold(mask, |m, i| m | (1 << i)));
            }
        }
        out
    }

    pub fn derivable(&self, mask: Mask) -> Result<Arc<Derivable>, BesError> {
        let slot = &self.derivs[mask as usize];
        let res = slot.get_or_init(|| {
            let ctx: BTreeSet<AtomicRule> = self.world(mask).rules().clone();
            Deriver::new(DEFAULT_DEPTH_CAP).derivable(&ctx)
        });
        res.clone().map_err(BesError::from)
    }

    /// `⊩_C A` with nothing assumed, at world `mask`.
    pub fn holds(&self, mask: Mask, f: &Formula) -> Result<bool, BesError> {
        if let Some(&v) = self.holds_memo.lock().unwrap().get(&(mask, f.clone())) {
            return Ok(v);
        }
        let v = match f {
            Formula::Atom(a) => self.derivable(mask)?.contains(a),
            Formula::Bottom => self.derivable(mask)?.is_explosive(),
            Formula::Conj(l, r) => self.holds(mask, l)? && self.holds(mask, r)?,
            Formula::Disj(l, r) => self.holds(mask, l)? || self.holds(mask, r)?,
            Formula::Impl(l, r) => self.holds_above(mask, std::slice::from_ref(l), r)?,
        };
        self.holds_memo.lock().unwrap().insert((mask, f.clone()), v);
        Ok(v)
    }

    /// Every world above `mask` where all of `gamma` hold also has `a`.
    fn holds_above(&self, mask: Mask, gamma: &[Formula], a: &Formula) -> Result<bool, BesError> {
        let key = (mask, gamma.to_vec(), a.clone());
        if let Some(&v) = self.above_memo.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let v = self.local(mask, gamma, a)? && {
            let next: Vec<Mask> = (0..self.extra.len())
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| mask | (1 << i))
                .collect();
            par::try_all(&next, |&m| self.holds_above(m, gamma, a))?
        };
        self.above_memo.lock().unwrap().insert(key, v);
        Ok(v)
    }

    fn local(&self, mask: Mask, gamma: &[Formula], a: &Formula) -> Result<bool, BesError> {
        for g in gamma {
            if !self.holds(mask, g)? {
                return Ok(true);
            }
        }
        self.holds(mask, a)
    }

    /// Certificate for a formula known to fail at `mask`.
    fn refute(&self, mask: Mask, f: &Formula) -> Result<Refutation, BesError> {
        Ok(match f {
            Formula::Atom(a) => Refutation::Underivable { atom: a.clone() },
            Formula::Bottom => Refutation::Underivable { atom: Atom::bottom() },
            Formula::Conj(l, r) => {
                let (side, part) = if !self.holds(mask, l)? {
                    (Side::Left, l)
                } else {
                    (Side::Right, r)
                };
                Refutation::Conj {
                    side,
                    inner: Box::new(self.refute(mask, part)?),
                }
            }
            Formula::Disj(l, r) => Refutation::Disj {
                left: Box::new(self.refute(mask, l)?),
                right: Box::new(self.refute(mask, r)?),
            },
            Formula::Impl(l, r) => self.refute_consequence(mask, std::slice::from_ref(l), r)?,
        })
    }

    fn refute_consequence(&self, mask: Mask, gamma: &[Formula], a: &Formula) -> Result<Refutation, BesError> {
        let candidates = self.worlds_above(mask);
        let found = par::find_map_first(&candidates, |&m| match self.local(m, gamma, a) {
            Ok(true) => None,
            Ok(false) => Some(Ok(m)),
            Err(e) => Some(Err(e)),
        });
        let m = found.expect("refutation requested for a holding consequence")?;
        Ok(Refutation::Consequence {
            extension: self.world(m),
            antecedents: gamma.to_vec(),
            succedent: Box::new(self.refute(m, a)?),
        })
    }

    /// Full sequent verdict at the root world.
    pub fn sequent(&self, gamma: &[Formula], a: &Formula) -> Result<SequentVerdict, BesError> {
        self.sequent_at(0, gamma, a)
    }

    pub fn sequent_at(&self, mask: Mask, gamma: &[Formula], a: &Formula) -> Result<SequentVerdict, BesError> {
        let gamma = normalize(gamma);
        let holds = if gamma.is_empty() {
            self.holds(mask, a)?
        } else {
            self.holds_above(mask, &gamma, a)?
        };
        if holds {
            return Ok(SequentVerdict::HoldsWithinPool {
                bounds: self.bounds(),
            });
        }
        let trace = if gamma.is_empty() {
            self.refute(mask, a)?
        } else {
            self.refute_consequence(mask, &gamma, a)?
        };
        Ok(SequentVerdict::RefutedBy {
            extension: top_extension(&trace, &self.world(mask)),
            trace,
        })
    }

    fn bounds(&self) -> PoolBounds {
        ExtensionPool::from_rules(self.extra.iter().cloned()).bounds()
    }

    fn replay_formula(&self, tr: &Refutation, f: &Formula, mask: Mask) -> Result<bool, BesError> {
        Ok(match (tr, f) {
            (Refutation::Underivable { atom }, Formula::Atom(a)) => {
                atom == a && !self.derivable(mask)?.contains(a)
            }
            (Refutation::Underivable { atom }, Formula::Bottom) => {
                atom.is_bottom() && !self.derivable(mask)?.is_explosive()
            }
            (Refutation::Conj { side, inner }, Formula::Conj(l, r)) => {
                let part = if *side == Side::Left { l } else { r };
                self.replay_formula(inner, part, mask)?
            }
            (Refutation::Disj { left, right }, Formula::Disj(l, r)) => {
                self.replay_formula(left, l, mask)? && self.replay_formula(right, r, mask)?
            }
            (Refutation::Consequence { .. }, Formula::Impl(l, r)) => {
                self.replay_consequence(tr, std::slice::from_ref(l), r, mask)?
            }
            _ => false,
        })
    }

    fn replay_consequence(
        &self,
        tr: &Refutation,
        gamma: &[Formula],
        a: &Formula,
        mask: Mask,
    ) -> Result<bool, BesError> {
        let Refutation::Consequence {
            extension,
            antecedents,
            succedent,
        } = tr
        else {
            return Ok(false);
        };
        let Some(m) = self.mask_of(extension) else {
            return Ok(false);
        };
        if m & mask != mask || antecedents.as_slice() != gamma {
            return Ok(false);
        }
        for g in gamma {
            if !self.holds(m, g)? {
                return Ok(false);
            }
        }
        self.replay_formula(succedent, a, m)
    }
}

/// `Γ ⊩_B A` relative to the pool.
pub fn bes_holds(
    gamma: &[Formula],
    a: &Formula,
    b: &Base,
    pool: &ExtensionPool,
) -> Result<SequentVerdict, BesError> {
    Evaluator::new(b, pool)?.sequent(gamma, a)
}

/// Logical consequence: evaluation at the empty base.
pub fn bes_logical(gamma: &[Formula], a: &Formula, pool: &ExtensionPool) -> Result<SequentVerdict, BesError> {
    bes_holds(gamma, a, &Base::empty(), pool)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionRefutation {
    pub substitution: AtomSubstitution,
    pub gamma: Vec<Formula>,
    pub succedent: Formula,
    pub extension: Base,
    pub trace: Refutation,
}

impl SubstitutionRefutation {
    pub fn replay(&self, pool: &ExtensionPool) -> Result<bool, BesError> {
        let verdict = SequentVerdict::RefutedBy {
            extension: self.extension.clone(),
            trace: self.trace.clone(),
        };
        verdict.replay(&self.gamma, &self.succedent, &Base::empty(), pool)
    }
}

/// First substitution (in list order) whose instance is logically refuted
/// within the pool.
pub fn refute_substitution_closure(
    gamma: &[Formula],
    a: &Formula,
    subs: &[AtomSubstitution],
    pool: &ExtensionPool,
) -> Result<Option<SubstitutionRefutation>, BesError> {
    for s in subs {
        let g: Vec<Formula> = gamma.iter().map(|f| apply_substitution(s, f)).collect();
        let sa = apply_substitution(s, a);
        if let SequentVerdict::RefutedBy { extension, trace } = bes_logical(&g, &sa, pool)? {
            return Ok(Some(SubstitutionRefutation {
                substitution: s.clone(),
                gamma: normalize(&g),
                succedent: sa,
                extension,
                trace,
            }));
        }
    }
    Ok(None)
}

/// All pool extensions of `b` in canonical order, `b` itself first.
pub fn pool_extensions(b: &Base, pool: &ExtensionPool) -> Result<Vec<Base>, BesError> {
    let ev = Evaluator::new(b, pool)?;
    Ok(ev.worlds_above(0).into_iter().map(|m| ev.world(m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{atom, parse_formula};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn atoms(names: &[&str]) -> BTreeSet<Atom> {
        names.iter().map(|n| atom(n)).collect()
    }

    #[test]
    fn pool_text_round_trips() {
        let pool = make_pool(&atoms(&["p", "q"]), params(1, 1)).unwrap();
        let back = ExtensionPool::parse(&pool.to_string()).unwrap();
        assert_eq!(back.rules(), pool.rules());
        assert!(ExtensionPool::parse("(base)").is_err());
        assert!(ExtensionPool::parse("(pool)").unwrap().is_empty());
    }

    fn params(level: usize, premises: usize) -> PoolParams {
        PoolParams {
            max_level: level,
            max_premises: premises,
            max_size: 64,
        }
    }

    #[test]
    fn pool_enumeration_examples() {
        let p0 = make_pool(&atoms(&["p", "q"]), params(0, 2)).unwrap();
        assert_eq!(p0.rules(), &[AtomicRule::axiom(atom("p")), AtomicRule::axiom(atom("q"))]);
        let p1 = make_pool(&atoms(&["p"]), params(1, 1)).unwrap();
        assert_eq!(
            p1.rules(),
            &[AtomicRule::axiom(atom("p")), AtomicRule::simple([atom("p")], atom("p"))]
        );
        // 2 axioms + 3 nonempty premise sets × 2 conclusions.
        assert_eq!(make_pool(&atoms(&["p", "q"]), params(1, 2)).unwrap().len(), 8);
        assert_eq!(make_pool(&BTreeSet::new(), params(0, 0)), Err(BesError::EmptyUniverse));
        let capped = make_pool(&atoms(&["p", "q"]), PoolParams { max_size: 3, ..params(1, 2) }).unwrap();
        assert_eq!(capped.len(), 3);
    }

    #[test]
    fn identity_holds_and_atoms_refute() {
        let pool = make_pool(&atoms(&["p", "q"]), params(1, 1)).unwrap();
        assert!(bes_logical(&[], &f("(imp p p)"), &pool).unwrap().holds());

        let pool = ExtensionPool::from_rules([AtomicRule::axiom(atom("p"))]);
        let v = bes_logical(&[f("p")], &f("q"), &pool).unwrap();
        assert_eq!(v.extension(), Some(&Base::from_rules([AtomicRule::axiom(atom("p"))])));
        assert!(v.replay(&[f("p")], &f("q"), &Base::empty(), &pool).unwrap());

        let b = Base::from_rules([AtomicRule::axiom(atom("p"))]);
        assert!(bes_holds(&[], &f("p"), &b, &pool).unwrap().holds());
    }

    #[test]
    fn bottom_is_refuted_at_the_empty_base() {
        let v = bes_logical(&[], &Formula::Bottom, &ExtensionPool::empty()).unwrap();
        assert_eq!(v.extension(), Some(&Base::empty()));
    }

    #[test]
    fn disjunction_of_implications_is_refuted() {
        let pool = ExtensionPool::from_rules([AtomicRule::axiom(atom("p")), AtomicRule::axiom(atom("q"))]);
        let a = f("(or (imp (or p q) p) (imp (or p q) q))");
        let v = bes_logical(&[], &a, &pool).unwrap();
        let SequentVerdict::RefutedBy { trace, .. } = &v else {
            panic!("expected refutation")
        };
        let Refutation::Disj { left, .. } = trace else {
            panic!("expected disjunction trace")
        };
        let Refutation::Consequence { extension, .. } = left.as_ref() else {
            panic!("expected consequence trace")
        };
        assert_eq!(extension, &Base::from_rules([AtomicRule::axiom(atom("q"))]));
        assert!(v.replay(&[], &a, &Base::empty(), &pool).unwrap());
    }

    #[test]
    fn tampered_certificates_do_not_replay() {
        let pool = ExtensionPool::from_rules([AtomicRule::axiom(atom("p")), AtomicRule::axiom(atom("q"))]);
        let v = bes_logical(&[f("p")], &f("q"), &pool).unwrap();
        let SequentVerdict::RefutedBy { trace, .. } = v else {
            panic!()
        };
        let forged = SequentVerdict::RefutedBy {
            extension: Base::from_rules([AtomicRule::axiom(atom("q"))]),
            trace: Refutation::Consequence {
                extension: Base::from_rules([AtomicRule::axiom(atom("q"))]),
                antecedents: vec![f("p")],
                succedent: Box::new(Refutation::Underivable { atom: atom("q") }),
            },
        };
        assert!(!forged.replay(&[f("p")], &f("q"), &Base::empty(), &pool).unwrap());
        assert!(trace.is_unconditional());
    }

    #[test]
    fn split_instance_is_refuted_after_substitution() {
        let pool = ExtensionPool::from_rules([AtomicRule::axiom(atom("p")), AtomicRule::axiom(atom("q"))]);
        let gamma = [f("(imp p (or q r))")];
        let a = f("(or (imp p q) (imp p r))");
        let star = AtomSubstitution::parse("p=(or p q); q=p; r=q").unwrap();
        let found = refute_substitution_closure(&gamma, &a, std::slice::from_ref(&star), &pool).unwrap().unwrap();
        assert_eq!(found.substitution, star);
        assert!(found.replay(&pool).unwrap());
        assert!(refute_substitution_closure(&gamma, &a, &[], &pool).unwrap().is_none());
        let id = AtomSubstitution::identity();
        assert!(refute_substitution_closure(&[f("p")], &f("p"), &[id], &pool).unwrap().is_none());
    }

    #[test]
    fn budget_is_enforced() {
        let many: Vec<AtomicRule> = (0..MAX_POOL_RULES + 1)
            .map(|i| AtomicRule::axiom(atom(&format!("a{i}"))))
            .collect();
        let pool = ExtensionPool::from_rules(many);
        assert!(matches!(
            bes_logical(&[], &f("p"), &pool),
            Err(BesError::PoolBudget { .. })
        ));
    }

    #[test]
    fn canonical_world_order() {
        let pool = make_pool(&atoms(&["p", "q", "r"]), params(0, 0)).unwrap();
        let ext = pool_extensions(&Base::empty(), &pool).unwrap();
        let sizes: Vec<usize> = ext.iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![0, 1, 1, 1, 2, 2, 2, 3]);
        assert_eq!(ext[1], Base::from_rules([AtomicRule::axiom(atom("p"))]));
        assert_eq!(
            ext[4],
            Base::from_rules([AtomicRule::axiom(atom("p")), AtomicRule::axiom(atom("q"))])
        );
    }
}
