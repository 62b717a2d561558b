//! Higher-level atomic rules, bases and atomic derivations.
//!
//! A rule concludes an atom from premise slots; each slot names the premise
//! atom and the set of lower-level rules discharged above it. Bases are
//! finite rule sets. Atomic explosion (`⊥` yields any atom) belongs to every
//! base implicitly and is never stored.
//!
//! Text forms:
//!
//! ```text
//! (rule => p)                      axiom
//! (rule (p) (q) => r)              level 1
//! (rule (((rule => p)) q) => r)    from q, discharging axiom p, infer r
//! (rule :fresh => p)               distinguished axiom (construction layer)
//! (base <rule>*)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Atom;
use crate::sexp::{self, Sexp, SyntaxError};

/// Provenance of a rule. The distinguished mark singles out the axiom that
/// the construction for the Split rule adds to a base, so "is it used" is a
/// syntactic test rather than a question of atom freshness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleMark {
    Plain,
    Distinguished,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PremiseSlot {
    pub discharges: BTreeSet<AtomicRule>,
    pub premise: Atom,
}

impl PremiseSlot {
    pub fn plain(premise: Atom) -> Self {
        PremiseSlot {
            discharges: BTreeSet::new(),
            premise,
        }
    }

    pub fn discharging<I: IntoIterator<Item = AtomicRule>>(rules: I, premise: Atom) -> Self {
        PremiseSlot {
            discharges: rules.into_iter().collect(),
            premise,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicRule {
    premises: Vec<PremiseSlot>,
    conclusion: Atom,
    mark: RuleMark,
}

impl AtomicRule {
    pub fn axiom(conclusion: Atom) -> Self {
        AtomicRule {
            premises: Vec::new(),
            conclusion,
            mark: RuleMark::Plain,
        }
    }

    pub fn distinguished_axiom(conclusion: Atom) -> Self {
        AtomicRule {
            premises: Vec::new(),
            conclusion,
            mark: RuleMark::Distinguished,
        }
    }

    /// Level-1 rule: no discharges.
    pub fn simple<I: IntoIterator<Item = Atom>>(premises: I, conclusion: Atom) -> Self {
        AtomicRule {
            premises: premises.into_iter().map(PremiseSlot::plain).collect(),
            conclusion,
            mark: RuleMark::Plain,
        }
    }

    pub fn with_slots(premises: Vec<PremiseSlot>, conclusion: Atom) -> Self {
        AtomicRule {
            premises,
            conclusion,
            mark: RuleMark::Plain,
        }
    }

    pub fn premises(&self) -> &[PremiseSlot] {
        &self.premises
    }

    pub fn conclusion(&self) -> &Atom {
        &self.conclusion
    }

    pub fn mark(&self) -> RuleMark {
        self.mark
    }

    pub fn is_axiom(&self) -> bool {
        self.premises.is_empty()
    }

    pub fn level(&self) -> usize {
        rule_level(self)
    }

    /// Every atom mentioned, including nested discharged rules.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        out.insert(self.conclusion.clone());
        for slot in &self.premises {
            out.insert(slot.premise.clone());
            for r in &slot.discharges {
                r.collect_atoms(out);
            }
        }
    }

    pub fn parse(text: &str) -> Result<AtomicRule, SyntaxError> {
        AtomicRule::from_sexp(&sexp::parse_one(text)?)
    }

    pub(crate) fn from_sexp(s: &Sexp) -> Result<AtomicRule, SyntaxError> {
        let items = s
            .tagged("rule")
            .ok_or_else(|| SyntaxError::new(s.pos(), "expected (rule ...)"))?;
        let arrow = items
            .iter()
            .position(|x| x.as_symbol() == Some("=>"))
            .ok_or_else(|| SyntaxError::new(s.pos(), "rule is missing '=>'"))?;
        let (before, after) = (&items[..arrow], &items[arrow + 1..]);
        let conclusion = match after {
            [c] => Atom::parse_atomic(c.expect_symbol("conclusion atom")?)
                .map_err(|e| SyntaxError::new(c.pos(), e.message))?,
            _ => return Err(SyntaxError::new(s.pos(), "expected one conclusion after '=>'")),
        };
        let mut mark = RuleMark::Plain;
        let mut premises = Vec::new();
        for item in before {
            match item {
                Sexp::Symbol(k, _) if k == ":fresh" => mark = RuleMark::Distinguished,
                Sexp::Symbol(k, pos) => {
                    return Err(SyntaxError::new(*pos, format!("unexpected '{k}' in rule")))
                }
                Sexp::List(slot, pos) => premises.push(parse_slot(slot, *pos)?),
            }
        }
        if mark == RuleMark::Distinguished && !premises.is_empty() {
            return Err(SyntaxError::new(s.pos(), ":fresh only marks axioms"));
        }
        Ok(AtomicRule {
            premises,
            conclusion,
            mark,
        })
    }
}

fn parse_slot(items: &[Sexp], pos: usize) -> Result<PremiseSlot, SyntaxError> {
    let parse_atom = |s: &Sexp| {
        Atom::parse_atomic(s.expect_symbol("premise atom")?)
            .map_err(|e| SyntaxError::new(s.pos(), e.message))
    };
    match items {
        [a] => Ok(PremiseSlot::plain(parse_atom(a)?)),
        [rules, a] => {
            let rules = rules.expect_list("list of discharged rules")?;
            let discharges = rules
                .iter()
                .map(AtomicRule::from_sexp)
                .collect::<Result<BTreeSet<_>, _>>()?;
            Ok(PremiseSlot {
                discharges,
                premise: parse_atom(a)?,
            })
        }
        _ => Err(SyntaxError::new(pos, "premise slot is (atom) or ((rule*) atom)")),
    }
}

impl fmt::Display for AtomicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(rule")?;
        if self.mark == RuleMark::Distinguished {
            f.write_str(" :fresh")?;
        }
        for slot in &self.premises {
            if slot.discharges.is_empty() {
                write!(f, " ({})", slot.premise)?;
            } else {
                f.write_str(" ((")?;
                for (i, r) in slot.discharges.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{r}")?;
                }
                write!(f, ") {})", slot.premise)?;
            }
        }
        write!(f, " => {})", self.conclusion)
    }
}

impl fmt::Debug for AtomicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for AtomicRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AtomicRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        AtomicRule::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Level 0 for axioms, 1 when no slot discharges anything, otherwise two
/// above the highest level among discharged rules.
pub fn rule_level(r: &AtomicRule) -> usize {
    if r.premises.is_empty() {
        return 0;
    }
    let nested = r
        .premises
        .iter()
        .flat_map(|s| s.discharges.iter())
        .map(rule_level)
        .max();
    match nested {
        None => 1,
        Some(k) => k + 2,
    }
}

#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Base {
    rules: BTreeSet<AtomicRule>,
}

impl Base {
    /// The empty base: only the implicit explosion rules.
    pub fn empty() -> Self {
        Base::default()
    }

    pub fn from_rules<I: IntoIterator<Item = AtomicRule>>(rules: I) -> Self {
        Base {
            rules: rules.into_iter().collect(),
        }
    }

    pub fn rules(&self) -> &BTreeSet<AtomicRule> {
        &self.rules
    }

    pub fn contains(&self, r: &AtomicRule) -> bool {
        self.rules.contains(r)
    }

    pub fn insert(&mut self, r: AtomicRule) -> bool {
        self.rules.insert(r)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn with(&self, r: AtomicRule) -> Base {
        let mut out = self.clone();
        out.insert(r);
        out
    }

    pub fn union(&self, other: &Base) -> Base {
        Base {
            rules: self.rules.union(&other.rules).cloned().collect(),
        }
    }

    /// Maximal stored rule level; explosion does not count.
    pub fn level(&self) -> usize {
        self.rules.iter().map(rule_level).max().unwrap_or(0)
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.rules.iter().flat_map(|r| r.atoms()).collect()
    }

    pub fn parse(text: &str) -> Result<Base, SyntaxError> {
        let s = sexp::parse_one(text)?;
        let items = s
            .tagged("base")
            .ok_or_else(|| SyntaxError::new(s.pos(), "expected (base <rule>*)"))?;
        items
            .iter()
            .map(AtomicRule::from_sexp)
            .collect::<Result<BTreeSet<_>, _>>()
            .map(|rules| Base { rules })
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(base")?;
        for r in &self.rules {
            write!(f, "\n  {r}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.rules.iter()).finish()
    }
}

/// `c` extends `b` iff it contains every rule of `b`.
pub fn extends(c: &Base, b: &Base) -> bool {
    b.rules.is_subset(&c.rules)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DerivationStep {
    /// Application of a rule; one sub-derivation per premise slot. The
    /// slot's dischargeable rules are discharged above it.
    Rule {
        rule: AtomicRule,
        premises: Vec<AtomicDerivation>,
    },
    /// Implicit atomic explosion from a derivation of `⊥`.
    Explosion(Box<AtomicDerivation>),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicDerivation {
    pub conclusion: Atom,
    pub step: DerivationStep,
}

impl AtomicDerivation {
    /// One-node derivation applying an axiom.
    pub fn axiom(rule: AtomicRule) -> Self {
        AtomicDerivation {
            conclusion: rule.conclusion.clone(),
            step: DerivationStep::Rule {
                rule,
                premises: Vec::new(),
            },
        }
    }

    pub fn apply(rule: AtomicRule, premises: Vec<AtomicDerivation>) -> Self {
        AtomicDerivation {
            conclusion: rule.conclusion.clone(),
            step: DerivationStep::Rule { rule, premises },
        }
    }

    pub fn explode(conclusion: Atom, from_bottom: AtomicDerivation) -> Self {
        AtomicDerivation {
            conclusion,
            step: DerivationStep::Explosion(Box::new(from_bottom)),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> &[AtomicDerivation] {
        match &self.step {
            DerivationStep::Rule { premises, .. } => premises,
            DerivationStep::Explosion(d) => std::slice::from_ref(d.as_ref()),
        }
    }

    /// Rules applied and not discharged.
    pub fn open_rules(&self) -> BTreeSet<AtomicRule> {
        let mut out = BTreeSet::new();
        let mut discharged = Vec::new();
        self.collect_open(&mut discharged, &mut out);
        out
    }

    fn collect_open<'a>(
        &'a self,
        discharged: &mut Vec<&'a BTreeSet<AtomicRule>>,
        out: &mut BTreeSet<AtomicRule>,
    ) {
        match &self.step {
            DerivationStep::Rule { rule, premises } => {
                if !discharged.iter().any(|d| d.contains(rule)) {
                    out.insert(rule.clone());
                }
                for (slot, sub) in rule.premises.iter().zip(premises) {
                    discharged.push(&slot.discharges);
                    sub.collect_open(discharged, out);
                    discharged.pop();
                }
            }
            DerivationStep::Explosion(d) => d.collect_open(discharged, out),
        }
    }

    /// Whether `rule` is applied undischarged somewhere.
    pub fn uses_open(&self, rule: &AtomicRule) -> bool {
        self.open_rules().contains(rule)
    }

    pub fn parse(text: &str) -> Result<AtomicDerivation, SyntaxError> {
        AtomicDerivation::from_sexp(&sexp::parse_one(text)?)
    }

    pub(crate) fn from_sexp(s: &Sexp) -> Result<AtomicDerivation, SyntaxError> {
        if let Some(items) = s.tagged("apply") {
            let (rule, subs) = items
                .split_first()
                .ok_or_else(|| SyntaxError::new(s.pos(), "apply needs a rule"))?;
            let rule = AtomicRule::from_sexp(rule)?;
            let premises = subs
                .iter()
                .map(AtomicDerivation::from_sexp)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(AtomicDerivation::apply(rule, premises))
        } else if let Some(items) = s.tagged("explode") {
            match items {
                [a, d] => Ok(AtomicDerivation::explode(
                    Atom::parse_atomic(a.expect_symbol("atom")?)
                        .map_err(|e| SyntaxError::new(a.pos(), e.message))?,
                    AtomicDerivation::from_sexp(d)?,
                )),
                _ => Err(SyntaxError::new(s.pos(), "expected (explode atom derivation)")),
            }
        } else {
            Err(SyntaxError::new(s.pos(), "expected (apply ...) or (explode ...)"))
        }
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let pad = "  ".repeat(indent);
        match &self.step {
            DerivationStep::Rule { rule, premises } => {
                write!(f, "{pad}(apply {rule}")?;
                for p in premises {
                    f.write_str("\n")?;
                    p.write_indented(f, indent + 1)?;
                }
                f.write_str(")")
            }
            DerivationStep::Explosion(d) => {
                writeln!(f, "{pad}(explode {}", self.conclusion)?;
                d.write_indented(f, indent + 1)?;
                f.write_str(")")
            }
        }
    }
}

impl Serialize for AtomicDerivation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for AtomicDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

impl fmt::Debug for AtomicDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed derivation at node {path:?}: {reason}")]
pub struct MalformedDerivation {
    pub path: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivationVerdict {
    Accept,
    Reject {
        path: Vec<usize>,
        rule: AtomicRule,
    },
}

impl DerivationVerdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, DerivationVerdict::Accept)
    }
}

/// Accepts iff every rule applied and undischarged in `d` belongs to
/// `assumed ∪ b` (explosion is always available).
pub fn check_derivation(
    d: &AtomicDerivation,
    assumed: &BTreeSet<AtomicRule>,
    b: &Base,
) -> Result<DerivationVerdict, MalformedDerivation> {
    let mut path = Vec::new();
    let mut discharged = Vec::new();
    check_node(d, assumed, b, &mut discharged, &mut path)
}

fn check_node<'a>(
    d: &'a AtomicDerivation,
    assumed: &BTreeSet<AtomicRule>,
    b: &Base,
    discharged: &mut Vec<&'a BTreeSet<AtomicRule>>,
    path: &mut Vec<usize>,
) -> Result<DerivationVerdict, MalformedDerivation> {
    let malformed = |path: &Vec<usize>, reason: String| MalformedDerivation {
        path: path.clone(),
        reason,
    };
    match &d.step {
        DerivationStep::Explosion(sub) => {
            if !sub.conclusion.is_bottom() {
                return Err(malformed(path, "explosion premise must conclude bot".into()));
            }
            path.push(0);
            let v = check_node(sub, assumed, b, discharged, path)?;
            path.pop();
            Ok(v)
        }
        DerivationStep::Rule { rule, premises } => {
            if rule.conclusion != d.conclusion {
                return Err(malformed(
                    path,
                    format!("node concludes {} but rule concludes {}", d.conclusion, rule.conclusion),
                ));
            }
            if rule.premises.len() != premises.len() {
                return Err(malformed(
                    path,
                    format!(
                        "rule has {} premises but node has {} children",
                        rule.premises.len(),
                        premises.len()
                    ),
                ));
            }
            for (i, (slot, sub)) in rule.premises.iter().zip(premises).enumerate() {
                if slot.premise != sub.conclusion {
                    path.push(i);
                    let err = malformed(
                        path,
                        format!("expected {} but child concludes {}", slot.premise, sub.conclusion),
                    );
                    return Err(err);
                }
            }
            let licensed = discharged.iter().any(|s| s.contains(rule))
                || assumed.contains(rule)
                || b.contains(rule);
            if !licensed {
                return Ok(DerivationVerdict::Reject {
                    path: path.clone(),
                    rule: rule.clone(),
                });
            }
            for (i, (slot, sub)) in rule.premises.iter().zip(premises).enumerate() {
                discharged.push(&slot.discharges);
                path.push(i);
                let v = check_node(sub, assumed, b, discharged, path)?;
                path.pop();
                discharged.pop();
                if !v.is_accept() {
                    return Ok(v);
                }
            }
            Ok(DerivationVerdict::Accept)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeriveError {
    #[error("derivability search exceeded the nesting cap of {0}")]
    CapExhausted(usize),
}

/// Default nesting cap for [`derive`]; memoization already guarantees
/// termination, this only bounds pathological rule nesting.
pub const DEFAULT_DEPTH_CAP: usize = 64;

/// Atoms derivable in a context, each with a witness.
#[derive(Debug, Clone, Default)]
pub struct Derivable {
    witnesses: BTreeMap<Atom, AtomicDerivation>,
}

impl Derivable {
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.witnesses.keys()
    }

    /// `⊥` derivable: every atom is, by explosion.
    pub fn is_explosive(&self) -> bool {
        self.witnesses.contains_key(&Atom::bottom())
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.witnesses.contains_key(a) || self.is_explosive()
    }

    pub fn witness(&self, a: &Atom) -> Option<AtomicDerivation> {
        if let Some(d) = self.witnesses.get(a) {
            return Some(d.clone());
        }
        self.witnesses
            .get(&Atom::bottom())
            .map(|bot| AtomicDerivation::explode(a.clone(), bot.clone()))
    }
}

/// Backward-chaining derivability over contexts of available rules. Entering
/// a premise slot extends the context with the slot's dischargeable rules;
/// results are memoized per context, and within one context a least
/// fixpoint is computed, so the search terminates on any finite rule set.
#[derive(Debug)]
pub struct Deriver {
    depth_cap: usize,
    memo: HashMap<BTreeSet<AtomicRule>, Arc<Derivable>>,
}

impl Deriver {
    pub fn new(depth_cap: usize) -> Self {
        Deriver {
            depth_cap: depth_cap.max(1),
            memo: HashMap::new(),
        }
    }

    /// Everything derivable from `context` (assumed rules plus base).
    pub fn derivable(&mut self, context: &BTreeSet<AtomicRule>) -> Result<Arc<Derivable>, DeriveError> {
        self.closure(context, 0)
    }

    fn closure(
        &mut self,
        ctx: &BTreeSet<AtomicRule>,
        depth: usize,
    ) -> Result<Arc<Derivable>, DeriveError> {
        if let Some(hit) = self.memo.get(ctx) {
            return Ok(hit.clone());
        }
        if depth >= self.depth_cap {
            return Err(DeriveError::CapExhausted(self.depth_cap));
        }
        let mut known = Derivable::default();
        loop {
            let mut changed = false;
            for rule in ctx {
                if known.witnesses.contains_key(&rule.conclusion) {
                    continue;
                }
                let mut subs = Vec::with_capacity(rule.premises.len());
                for slot in &rule.premises {
                    let witness = if slot.discharges.is_subset(ctx) {
                        known.witness(&slot.premise)
                    } else {
                        let inner: BTreeSet<AtomicRule> =
                            ctx.union(&slot.discharges).cloned().collect();
                        self.closure(&inner, depth + 1)?.witness(&slot.premise)
                    };
                    match witness {
                        Some(w) => subs.push(w),
                        None => break,
                    }
                }
                if subs.len() == rule.premises.len() {
                    known
                        .witnesses
                        .insert(rule.conclusion.clone(), AtomicDerivation::apply(rule.clone(), subs));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let known = Arc::new(known);
        self.memo.insert(ctx.clone(), known.clone());
        Ok(known)
    }
}

/// Derivation of `goal` from `assumed` in `b`, or `None` when the search
/// space is exhausted without one.
pub fn derive(
    goal: &Atom,
    assumed: &BTreeSet<AtomicRule>,
    b: &Base,
    depth_cap: usize,
) -> Result<Option<AtomicDerivation>, DeriveError> {
    let ctx: BTreeSet<AtomicRule> = assumed.union(&b.rules).cloned().collect();
    Ok(Deriver::new(depth_cap).derivable(&ctx)?.witness(goal))
}

/// `⊢_B a` with nothing assumed.
pub fn derivable_in(goal: &Atom, b: &Base) -> bool {
    matches!(derive(goal, &BTreeSet::new(), b, DEFAULT_DEPTH_CAP), Ok(Some(_)))
}

/// Derivable atoms of a base (with no assumed rules).
pub fn derivable_set(b: &Base) -> Result<Arc<Derivable>, DeriveError> {
    Deriver::new(DEFAULT_DEPTH_CAP).derivable(&b.rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::atom;

    fn ax(a: &str) -> AtomicRule {
        AtomicRule::axiom(atom(a))
    }

    fn rule(premises: &[&str], c: &str) -> AtomicRule {
        AtomicRule::simple(premises.iter().map(|a| atom(a)), atom(c))
    }

    fn set(rules: &[AtomicRule]) -> BTreeSet<AtomicRule> {
        rules.iter().cloned().collect()
    }

    #[test]
    fn levels_follow_the_three_cases() {
        assert_eq!(rule_level(&ax("p")), 0);
        assert_eq!(rule_level(&rule(&["p", "q"], "r")), 1);
        let l2 = AtomicRule::with_slots(
            vec![PremiseSlot::discharging([ax("p")], atom("q1"))],
            atom("q"),
        );
        assert_eq!(rule_level(&l2), 2);
        let l3 = AtomicRule::with_slots(
            vec![PremiseSlot::discharging([rule(&["p"], "q")], atom("r"))],
            atom("s"),
        );
        assert_eq!(rule_level(&l3), 3);
        let l4 = AtomicRule::with_slots(vec![PremiseSlot::discharging([l2], atom("r"))], atom("s"));
        assert_eq!(rule_level(&l4), 4);
        assert_eq!(Base::from_rules([ax("p"), l3]).level(), 3);
        assert_eq!(Base::empty().level(), 0);
    }

    #[test]
    fn rule_text_round_trips() {
        for text in [
            "(rule => p)",
            "(rule (p) (q) => r)",
            "(rule (((rule => p)) q) => r)",
            "(rule :fresh => p)",
            "(rule (bot) => p)",
        ] {
            let r = AtomicRule::parse(text).unwrap();
            assert_eq!(r.to_string(), text);
        }
        let b = Base::parse("(base (rule => p)\n (rule (p) => q))").unwrap();
        assert_eq!(Base::parse(&b.to_string()).unwrap(), b);
        assert!(AtomicRule::parse("(rule p => q)").is_err());
        assert!(AtomicRule::parse("(rule (p) q)").is_err());
    }

    #[test]
    fn extension_is_superset() {
        let b = Base::from_rules([ax("q")]);
        assert!(extends(&b, &b));
        assert!(extends(&b.with(ax("p")), &b));
        assert!(!extends(&Base::empty(), &Base::empty().with(ax("p"))));
    }

    fn worked_derivation() -> AtomicDerivation {
        let r = rule(&["p", "q"], "r");
        AtomicDerivation::apply(r, vec![AtomicDerivation::axiom(ax("p")), AtomicDerivation::axiom(ax("q"))])
    }

    #[test]
    fn check_worked_example() {
        let d = worked_derivation();
        let b = Base::from_rules([ax("p")]);
        let assumed = set(&[ax("q"), rule(&["p", "q"], "r")]);
        assert!(check_derivation(&d, &assumed, &b).unwrap().is_accept());
        let v = check_derivation(&d, &BTreeSet::new(), &b).unwrap();
        assert!(matches!(v, DerivationVerdict::Reject { .. }));
    }

    #[test]
    fn explosion_is_always_available() {
        let bot_axiom = AtomicRule::axiom(Atom::bottom());
        let d = AtomicDerivation::explode(atom("z"), AtomicDerivation::axiom(bot_axiom.clone()));
        let b = Base::from_rules([bot_axiom]);
        assert!(check_derivation(&d, &BTreeSet::new(), &b).unwrap().is_accept());
    }

    #[test]
    fn malformed_arity_is_an_error() {
        let d = AtomicDerivation::apply(rule(&["p", "q"], "r"), vec![AtomicDerivation::axiom(ax("p"))]);
        assert!(check_derivation(&d, &BTreeSet::new(), &Base::empty()).is_err());
        let wrong = AtomicDerivation::apply(rule(&["p"], "r"), vec![AtomicDerivation::axiom(ax("q"))]);
        assert!(check_derivation(&wrong, &BTreeSet::new(), &Base::empty()).is_err());
    }

    #[test]
    fn derive_examples() {
        let r = rule(&["p", "q"], "r");
        let b = Base::from_rules([ax("p")]);
        let found = derive(&atom("r"), &set(&[ax("q"), r]), &b, 8).unwrap();
        assert!(found.is_some());

        let axiom_only = derive(&atom("p"), &BTreeSet::new(), &b, 8).unwrap().unwrap();
        assert_eq!(axiom_only, AtomicDerivation::axiom(ax("p")));
    }

    #[test]
    fn derive_enters_discharging_slot() {
        // from q (discharging axiom p) infer r; p ⇒ q.
        let l2 = AtomicRule::with_slots(vec![PremiseSlot::discharging([ax("p")], atom("q"))], atom("r"));
        let b = Base::from_rules([l2.clone(), rule(&["p"], "q")]);
        let d = derive(&atom("r"), &BTreeSet::new(), &b, 8).unwrap().unwrap();
        // Hand-expanded search tree: r ← l2 ← [ctx + axiom p] q ← (p ⇒ q) ← axiom p (discharged).
        let expected = AtomicDerivation::apply(
            l2,
            vec![AtomicDerivation::apply(rule(&["p"], "q"), vec![AtomicDerivation::axiom(ax("p"))])],
        );
        assert_eq!(d, expected);
        assert!(check_derivation(&d, &BTreeSet::new(), &b).unwrap().is_accept());
        assert!(d.open_rules().iter().all(|r| b.contains(r)));
        // Without the slot, p is not available.
        assert!(derive(&atom("p"), &BTreeSet::new(), &b, 8).unwrap().is_none());
    }

    #[test]
    fn empty_base_derives_nothing() {
        for a in ["p", "q", "bot"] {
            assert!(derive(&atom(a), &BTreeSet::new(), &Base::empty(), 4).unwrap().is_none());
        }
    }

    #[test]
    fn explosion_from_assumed_bottom() {
        let assumed = set(&[AtomicRule::axiom(Atom::bottom())]);
        for a in ["p", "q", "zz"] {
            let d = derive(&atom(a), &assumed, &Base::empty(), 4).unwrap().unwrap();
            assert!(check_derivation(&d, &assumed, &Base::empty()).unwrap().is_accept());
        }
    }

    #[test]
    fn cyclic_rules_terminate() {
        let b = Base::from_rules([rule(&["p"], "q"), rule(&["q"], "p")]);
        assert!(derive(&atom("p"), &BTreeSet::new(), &b, 4).unwrap().is_none());
        let b = b.with(ax("q"));
        assert!(derive(&atom("p"), &BTreeSet::new(), &b, 4).unwrap().is_some());
    }

    #[test]
    fn nesting_cap_is_reported() {
        // g_i is inferred from g_{i-1} while discharging a fresh axiom a_i, so
        // each step opens a new context.
        let chain: Vec<AtomicRule> = (1..6)
            .map(|i| {
                AtomicRule::with_slots(
                    vec![PremiseSlot::discharging(
                        [ax(&format!("a{i}"))],
                        atom(&format!("g{}", i - 1)),
                    )],
                    atom(&format!("g{i}")),
                )
            })
            .chain([ax("g0")])
            .collect();
        let b = Base::from_rules(chain);
        let res = derive(&atom("g5"), &BTreeSet::new(), &b, 2);
        assert_eq!(res, Err(DeriveError::CapExhausted(2)));
        assert!(derive(&atom("g5"), &BTreeSet::new(), &b, 16).unwrap().is_some());
    }
}
