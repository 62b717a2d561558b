//! Propositional formulas over atoms, `⊥`, `∧`, `∨` and `→`.
//!
//! Negation is not a constructor: `¬A` is `A → ⊥`. The textual form is fully
//! parenthesized prefix notation:
//!
//! ```text
//! formula := atom | "bot" | "(and" formula formula ")"
//!          | "(or" formula formula ")" | "(imp" formula formula ")"
//! ```
//!
//! Atoms match `[a-z][a-zA-Z0-9_]*` and may not be `bot`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::sexp::{self, Sexp, SyntaxError};

/// Reserved token for absurdity.
pub const BOTTOM_TOKEN: &str = "bot";

/// An atomic symbol. At the formula level `⊥` is its own variant, but the
/// atomic layer (rules, derivations) treats `⊥` as an atom, so `Atom` can
/// also carry the reserved bottom token via [`Atom::bottom`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Atom(Arc<str>);

impl Atom {
    /// Builds a propositional atom. Fails on malformed names and on `bot`.
    pub fn new(name: &str) -> Result<Atom, SyntaxError> {
        if name == BOTTOM_TOKEN {
            return Err(SyntaxError::new(0, "'bot' is reserved for absurdity"));
        }
        if !is_atom_name(name) {
            return Err(SyntaxError::new(0, format!("malformed atom name '{name}'")));
        }
        Ok(Atom(Arc::from(name)))
    }

    /// Parses an atom of the atomic layer, where `bot` denotes `⊥`.
    pub fn parse_atomic(name: &str) -> Result<Atom, SyntaxError> {
        if name == BOTTOM_TOKEN {
            Ok(Atom::bottom())
        } else {
            Atom::new(name)
        }
    }

    pub fn bottom() -> Atom {
        Atom(Arc::from(BOTTOM_TOKEN))
    }

    pub fn is_bottom(&self) -> bool {
        &*self.0 == BOTTOM_TOKEN
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// The formula denoted by this atom (`Bottom` for the reserved token).
    pub fn to_formula(&self) -> Formula {
        if self.is_bottom() {
            Formula::Bottom
        } else {
            Formula::Atom(self.clone())
        }
    }
}

/// Shorthand for tests and fixtures; panics on malformed names.
pub fn atom(name: &str) -> Atom {
    Atom::parse_atomic(name).unwrap_or_else(|e| panic!("{e}"))
}

fn is_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Atom {
    type Error = SyntaxError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Atom::parse_atomic(&s)
    }
}

impl From<Atom> for String {
    fn from(a: Atom) -> String {
        a.0.to_string()
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(Atom),
    Bottom,
    Conj(Box<Formula>, Box<Formula>),
    Disj(Box<Formula>, Box<Formula>),
    Impl(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Atom by name; `bot` yields `Bottom`. Panics on malformed names.
    pub fn atom(name: &str) -> Formula {
        atom(name).to_formula()
    }

    pub fn conj(a: Formula, b: Formula) -> Formula {
        Formula::Conj(Box::new(a), Box::new(b))
    }

    pub fn disj(a: Formula, b: Formula) -> Formula {
        Formula::Disj(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Impl(Box::new(a), Box::new(b))
    }

    pub fn negation(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bottom)
    }

    /// `Atom` or `Bottom`.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(_) | Formula::Bottom)
    }

    /// The atomic-layer symbol of an atomic formula.
    pub fn as_atomic(&self) -> Option<Atom> {
        match self {
            Formula::Atom(a) => Some(a.clone()),
            Formula::Bottom => Some(Atom::bottom()),
            _ => None,
        }
    }

    pub fn as_impl(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::Impl(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_disj(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::Disj(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_conj(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::Conj(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Propositional atoms occurring in the formula (`⊥` excluded).
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Bottom => {}
            Formula::Conj(a, b) | Formula::Disj(a, b) | Formula::Impl(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Bottom => 0,
            Formula::Conj(a, b) | Formula::Disj(a, b) | Formula::Impl(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// No disjunction in strictly positive position: atoms and `⊥` are
    /// Harrop, `A ∧ B` iff both are, `A → B` iff `B` is, `A ∨ B` never.
    pub fn is_harrop(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Bottom => true,
            Formula::Conj(a, b) => a.is_harrop() && b.is_harrop(),
            Formula::Impl(_, b) => b.is_harrop(),
            Formula::Disj(..) => false,
        }
    }

    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            out.push(f);
            match f {
                Formula::Conj(a, b) | Formula::Disj(a, b) | Formula::Impl(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                _ => {}
            }
        }
        out
    }

    fn from_sexp(s: &Sexp) -> Result<Formula, SyntaxError> {
        match s {
            Sexp::Symbol(name, pos) => {
                if name == BOTTOM_TOKEN {
                    Ok(Formula::Bottom)
                } else if is_atom_name(name) {
                    Ok(Formula::Atom(Atom(Arc::from(name.as_str()))))
                } else {
                    Err(SyntaxError::new(*pos, format!("malformed atom '{name}'")))
                }
            }
            Sexp::List(items, pos) => {
                let (head, args) = match items.split_first() {
                    Some((Sexp::Symbol(h, _), args)) => (h.as_str(), args),
                    _ => return Err(SyntaxError::new(*pos, "expected connective")),
                };
                let ctor: fn(Formula, Formula) -> Formula = match head {
                    "and" => Formula::conj,
                    "or" => Formula::disj,
                    "imp" => Formula::imp,
                    other => {
                        return Err(SyntaxError::new(
                            *pos,
                            format!("unknown connective '{other}'"),
                        ))
                    }
                };
                match args {
                    [a, b] => Ok(ctor(Formula::from_sexp(a)?, Formula::from_sexp(b)?)),
                    _ => Err(SyntaxError::new(
                        *pos,
                        format!("'{head}' takes exactly two arguments"),
                    )),
                }
            }
        }
    }

    pub(crate) fn parse_sexp(s: &Sexp) -> Result<Formula, SyntaxError> {
        Formula::from_sexp(s)
    }
}

/// Parses a formula in canonical prefix syntax.
pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    Formula::from_sexp(&sexp::parse_one(text)?)
}

/// `A1 , A2 ==> B`; the left side may be empty.
pub fn parse_sequent(text: &str) -> Result<(Vec<Formula>, Formula), SyntaxError> {
    let arrow = text
        .find("==>")
        .ok_or_else(|| SyntaxError::new(0, "sequent is missing '==>'"))?;
    let (left, right) = (&text[..arrow], &text[arrow + 3..]);
    let mut gamma = Vec::new();
    let mut offset = 0;
    for part in left.split(',') {
        if !part.trim().is_empty() {
            gamma.push(parse_formula(part).map_err(|e| SyntaxError::new(e.pos + offset, e.message))?);
        } else if left.contains(',') {
            return Err(SyntaxError::new(offset, "empty formula in sequent"));
        }
        offset += part.len() + 1;
    }
    let a = parse_formula(right).map_err(|e| SyntaxError::new(e.pos + arrow + 3, e.message))?;
    Ok((gamma, a))
}

/// Canonical fully parenthesized prefix text.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

impl FromStr for Formula {
    type Err = SyntaxError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Bottom => f.write_str(BOTTOM_TOKEN),
            Formula::Conj(a, b) => write!(f, "(and {a} {b})"),
            Formula::Disj(a, b) => write!(f, "(or {a} {b})"),
            Formula::Impl(a, b) => write!(f, "(imp {a} {b})"),
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_formula(&text).map_err(serde::de::Error::custom)
    }
}

/// Map from atoms to formulas; atoms outside the map are fixed.
/// Application is simultaneous and single-pass, and never touches `⊥`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomSubstitution {
    mapping: BTreeMap<Atom, Formula>,
}

impl AtomSubstitution {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Atom, Formula)>>(pairs: I) -> Self {
        AtomSubstitution {
            mapping: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, a: Atom, f: Formula) {
        self.mapping.insert(a, f);
    }

    pub fn get(&self, a: &Atom) -> Option<&Formula> {
        self.mapping.get(a)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, &Formula)> {
        self.mapping.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn apply(&self, f: &Formula) -> Formula {
        apply_substitution(self, f)
    }

    /// Parses `p=(or p q); q=p; r=q`.
    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        let mut out = AtomSubstitution::identity();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (lhs, rhs) = part
                .split_once('=')
                .ok_or_else(|| SyntaxError::new(0, format!("expected 'atom=formula' in '{part}'")))?;
            out.insert(Atom::new(lhs.trim())?, parse_formula(rhs.trim())?);
        }
        Ok(out)
    }
}

impl fmt::Display for AtomSubstitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.mapping.iter().map(|(a, g)| format!("{a}={g}")).collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn apply_substitution(s: &AtomSubstitution, f: &Formula) -> Formula {
    match f {
        Formula::Atom(a) => s.mapping.get(a).cloned().unwrap_or_else(|| f.clone()),
        Formula::Bottom => Formula::Bottom,
        Formula::Conj(a, b) => Formula::conj(apply_substitution(s, a), apply_substitution(s, b)),
        Formula::Disj(a, b) => Formula::disj(apply_substitution(s, a), apply_substitution(s, b)),
        Formula::Impl(a, b) => Formula::imp(apply_substitution(s, a), apply_substitution(s, b)),
    }
}

pub fn is_harrop(f: &Formula) -> bool {
    f.is_harrop()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> Formula {
        Formula::atom("p")
    }
    fn q() -> Formula {
        Formula::atom("q")
    }
    fn r() -> Formula {
        Formula::atom("r")
    }

    #[test]
    fn sequent_text() {
        let (g, a) = parse_sequent("p , (imp p q) ==> q").unwrap();
        assert_eq!(g, vec![Formula::atom("p"), parse_formula("(imp p q)").unwrap()]);
        assert_eq!(a, Formula::atom("q"));
        let (g, a) = parse_sequent("==> bot").unwrap();
        assert!(g.is_empty());
        assert_eq!(a, Formula::Bottom);
        assert!(parse_sequent("p , , q ==> q").is_err());
        assert!(parse_sequent("p q").is_err());
    }

    #[test]
    fn parses_examples() {
        assert_eq!(
            parse_formula("(imp p (or q r))").unwrap(),
            Formula::imp(p(), Formula::disj(q(), r()))
        );
        assert_eq!(parse_formula("bot").unwrap(), Formula::Bottom);
        assert_eq!(
            parse_formula("(imp (or p q) (or p q))").unwrap(),
            Formula::imp(Formula::disj(p(), q()), Formula::disj(p(), q()))
        );
    }

    #[test]
    fn prints_examples() {
        assert_eq!(
            print_formula(&Formula::imp(p(), Formula::disj(q(), r()))),
            "(imp p (or q r))"
        );
        assert_eq!(print_formula(&Formula::Bottom), "bot");
        assert_eq!(print_formula(&Formula::negation(p())), "(imp p bot)");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_formula("(imp p (xor q r))").unwrap_err();
        assert_eq!(err.pos, 7);
        assert!(parse_formula("(and p)").is_err());
        assert!(parse_formula("P").is_err());
        assert!(parse_formula("").is_err());
        assert!(Atom::new("bot").is_err());
    }

    #[test]
    fn substitution_examples() {
        let f = Formula::imp(p(), Formula::disj(q(), r()));
        assert_eq!(AtomSubstitution::identity().apply(&f), f);

        let s = AtomSubstitution::from_pairs([
            (atom("p"), Formula::disj(p(), q())),
            (atom("q"), p()),
            (atom("r"), q()),
        ]);
        assert_eq!(
            s.apply(&f),
            Formula::imp(Formula::disj(p(), q()), Formula::disj(p(), q()))
        );

        let to_bot = AtomSubstitution::from_pairs([(atom("p"), Formula::Bottom)]);
        assert_eq!(
            to_bot.apply(&Formula::imp(p(), p())),
            Formula::imp(Formula::Bottom, Formula::Bottom)
        );
    }

    #[test]
    fn substitution_text_form() {
        let s = AtomSubstitution::parse("p=(or p q); q=p; r=q").unwrap();
        assert_eq!(s.get(&atom("p")), Some(&Formula::disj(p(), q())));
        assert_eq!(AtomSubstitution::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn harrop_examples() {
        assert!(p().is_harrop());
        assert!(!Formula::disj(p(), q()).is_harrop());
        assert!(Formula::imp(Formula::disj(p(), q()), r()).is_harrop());
    }

    pub(crate) fn arb_formula(depth: u32) -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            4 => prop::sample::select(vec!["p", "q", "r", "s"]).prop_map(Formula::atom),
            1 => Just(Formula::Bottom),
        ];
        leaf.prop_recursive(depth, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::conj(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::disj(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::imp(a, b)),
            ]
        })
    }

    /// Brute force: enumerate every occurrence with its access path and
    /// flag a `∨` whose path never enters an implication antecedent.
    fn positive_disjunction_scan(f: &Formula) -> bool {
        // (occurrence, went through an antecedent)
        let mut all: Vec<(&Formula, Vec<bool>)> = vec![(f, vec![])];
        let mut i = 0;
        while i < all.len() {
            let (g, path) = all[i].clone();
            match g {
                Formula::Conj(a, b) | Formula::Disj(a, b) => {
                    all.push((a, [path.clone(), vec![false]].concat()));
                    all.push((b, [path, vec![false]].concat()));
                }
                Formula::Impl(a, b) => {
                    all.push((a, [path.clone(), vec![true]].concat()));
                    all.push((b, [path, vec![false]].concat()));
                }
                _ => {}
            }
            i += 1;
        }
        all.iter()
            .any(|(g, path)| matches!(g, Formula::Disj(..)) && path.iter().all(|neg| !neg))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_round_trip(f in arb_formula(6)) {
            prop_assert_eq!(parse_formula(&print_formula(&f)).unwrap(), f);
        }

        #[test]
        fn identity_substitution_is_identity(f in arb_formula(6)) {
            prop_assert_eq!(AtomSubstitution::identity().apply(&f), f);
        }

        #[test]
        fn substitution_never_touches_bottom(f in arb_formula(6)) {
            let s = AtomSubstitution::from_pairs([
                (atom("p"), Formula::disj(Formula::atom("q"), Formula::atom("r"))),
                (atom("q"), Formula::Bottom),
            ]);
            let bottoms = |g: &Formula| g.subformulas().iter().filter(|x| ***x == Formula::Bottom).count();
            let out = s.apply(&f);
            // Every original ⊥ survives; new ones only come from q ↦ ⊥.
            let q_count = f.subformulas().iter().filter(|x| ***x == Formula::atom("q")).count();
            prop_assert_eq!(bottoms(&out), bottoms(&f) + q_count);
        }

        #[test]
        fn harrop_matches_scan(f in arb_formula(6)) {
            prop_assert_eq!(f.is_harrop(), !positive_disjunction_scan(&f));
        }
    }
}
