//! Random argument structures for property checks: members of each catalog
//! reduction's domain and closed σ-assignments.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::argstruct::{build_inference, ArgStructure, Discharge, Inference, SigmaAssignment};
use crate::formula::{atom, Formula};

const ATOMS: [&str; 4] = ["p", "q", "r", "s"];

fn random_atom(rng: &mut StdRng) -> Formula {
    Formula::atom(ATOMS.choose(rng).expect("non-empty"))
}

pub fn random_formula(rng: &mut StdRng, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        return if rng.gen_bool(0.05) { Formula::Bottom } else { random_atom(rng) };
    }
    let a = random_formula(rng, depth - 1);
    let b = random_formula(rng, depth - 1);
    match rng.gen_range(0..3) {
        0 => Formula::conj(a, b),
        1 => Formula::disj(a, b),
        _ => Formula::imp(a, b),
    }
}

pub fn random_harrop(rng: &mut StdRng, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        return random_atom(rng);
    }
    match rng.gen_range(0..2) {
        0 => Formula::conj(random_harrop(rng, depth - 1), random_harrop(rng, depth - 1)),
        _ => Formula::imp(random_formula(rng, depth - 1), random_harrop(rng, depth - 1)),
    }
}

/// A structure for `concl` whose open assumptions are drawn mostly from
/// `hyps`; it may also use `concl` itself as an open assumption. Includes
/// `→I` steps so that discharges cross subtrees.
pub fn open_tree(rng: &mut StdRng, concl: &Formula, hyps: &[Formula], depth: u32) -> ArgStructure {
    if depth == 0 || rng.gen_bool(0.3) {
        if hyps.contains(concl) && rng.gen_bool(0.8) {
            return ArgStructure::assumption(concl.clone());
        }
        if let Some(a) = concl.as_atomic() {
            if rng.gen_bool(0.5) {
                return ArgStructure::axiom(a);
            }
        }
        if depth == 0 {
            return ArgStructure::assumption(concl.clone());
        }
    }
    if let Some((a, b)) = concl.as_impl() {
        if rng.gen_bool(0.5) {
            let mut inner = hyps.to_vec();
            inner.push(a.clone());
            let body = open_tree(rng, b, &inner, depth - 1);
            return ArgStructure::imp_intro(body, a.clone());
        }
    }
    let n = rng.gen_range(1..=2);
    let premises = (0..n)
        .map(|_| {
            let f = match hyps.choose(rng) {
                Some(h) if rng.gen_bool(0.6) => h.clone(),
                _ => random_formula(rng, 1),
            };
            open_tree(rng, &f, hyps, depth - 1)
        })
        .collect();
    ArgStructure::infer(premises, concl.clone())
}

/// A closed structure for `f`.
pub fn closed_tree(rng: &mut StdRng, f: &Formula, depth: u32) -> ArgStructure {
    let t = open_tree(rng, f, &[], depth);
    // Close any remaining open leaves with one-step inferences from axioms.
    let t = t.rewrite_leaves(&mut |leaf, _| {
        leaf.is_open_assumption().then(|| {
            let a = ATOMS[leaf.conclusion().depth() % ATOMS.len()];
            ArgStructure::infer(vec![ArgStructure::axiom(atom(a))], leaf.conclusion().clone())
        })
    });
    debug_assert!(t.is_closed());
    t
}

pub fn random_sigma(d: &ArgStructure, rng: &mut StdRng) -> SigmaAssignment {
    let mut s = SigmaAssignment::new();
    for f in d.assumption_formulas() {
        let image = closed_tree(rng, &f, 2);
        s.insert(f, image).expect("closed image for its formula");
    }
    s
}

/// An all-atomic closed structure for the atom `c` built from axiom leaves
/// over `atoms` by arbitrary steps.
pub fn atomic_tree(rng: &mut StdRng, c: &Formula, atoms: &[Formula], depth: u32) -> ArgStructure {
    if depth == 0 || rng.gen_bool(0.35) {
        return ArgStructure::axiom(c.as_atomic().expect("atomic conclusion"));
    }
    let n = rng.gen_range(1..=2);
    let premises = (0..n)
        .map(|_| {
            let a = atoms.choose(rng).expect("non-empty").clone();
            atomic_tree(rng, &a, atoms, depth - 1)
        })
        .collect();
    ArgStructure::infer(premises, c.clone())
}

fn context(rng: &mut StdRng) -> Vec<Formula> {
    (0..rng.gen_range(0..3)).map(|_| random_formula(rng, 1)).collect()
}

pub fn phi_imp_sample(rng: &mut StdRng) -> ArgStructure {
    let a = random_formula(rng, 2);
    let b = random_formula(rng, 2);
    let hyps = context(rng);
    let mut inner = hyps.clone();
    inner.push(a.clone());
    let body = open_tree(rng, &b, &inner, 3);
    let minor = open_tree(rng, &a, &hyps, 3);
    let major = if rng.gen_bool(0.1) {
        ArgStructure::imp_intro_vacuous(body, a)
    } else {
        ArgStructure::imp_intro(body, a)
    };
    ArgStructure::imp_elim(major, minor)
}

pub fn iota_sample(rng: &mut StdRng) -> ArgStructure {
    let (a, b, c) = (random_formula(rng, 1), random_formula(rng, 1), random_formula(rng, 1));
    let abc = Formula::imp(a.clone(), Formula::imp(b.clone(), c.clone()));
    let hyps = context(rng);
    let d = open_tree(rng, &abc, &hyps, 3);
    ArgStructure::infer(vec![d], Formula::imp(b, Formula::imp(a, c)))
}

fn atomic_split_atoms(rng: &mut StdRng) -> (Formula, Formula, Formula) {
    (random_atom(rng), random_atom(rng), random_atom(rng))
}

fn split_conclusion(a: &Formula, b: &Formula, c: &Formula) -> Formula {
    Formula::disj(Formula::imp(a.clone(), b.clone()), Formula::imp(a.clone(), c.clone()))
}

pub fn phi1_sample(rng: &mut StdRng) -> ArgStructure {
    let (p, q, r) = atomic_split_atoms(rng);
    let qr = Formula::disj(q.clone(), r.clone());
    loop {
        let body = closed_except(rng, &qr, &p);
        let lam = ArgStructure::imp_intro(body, p.clone());
        if !lam.discharged_at_root().is_empty() {
            return ArgStructure::infer(vec![lam], split_conclusion(&p, &q, &r));
        }
    }
}

/// A structure for `f` whose only open assumptions are `p`.
fn closed_except(rng: &mut StdRng, f: &Formula, p: &Formula) -> ArgStructure {
    let t = open_tree(rng, f, std::slice::from_ref(p), 3);
    t.rewrite_leaves(&mut |leaf, _| {
        (leaf.is_open_assumption() && leaf.conclusion() != p).then(|| {
            ArgStructure::infer(vec![ArgStructure::assumption(p.clone())], leaf.conclusion().clone())
        })
    })
}

pub fn phi2_sample(rng: &mut StdRng) -> ArgStructure {
    let (p, q1, q2) = atomic_split_atoms(rng);
    let left = rng.gen_bool(0.5);
    let q = if left { q1.clone() } else { q2.clone() };
    let atoms = [p.clone(), random_atom(rng), random_atom(rng)];
    let z = atomic_tree(rng, &q, &atoms, 3);
    let y = ArgStructure::infer(vec![z], Formula::disj(q1.clone(), q2.clone()));
    let lam = ArgStructure::imp_intro_vacuous(y, p.clone());
    ArgStructure::infer(vec![lam], split_conclusion(&p, &q1, &q2))
}

pub fn split_to_s_sample(rng: &mut StdRng) -> ArgStructure {
    let a = random_harrop(rng, 2);
    let (b, c) = (random_formula(rng, 1), random_formula(rng, 1));
    let prem = Formula::imp(a.clone(), Formula::disj(b.clone(), c.clone()));
    let hyps = context(rng);
    let d = open_tree(rng, &prem, &hyps, 3);
    ArgStructure::infer(vec![d], split_conclusion(&a, &b, &c))
}

pub fn phi_s_sample(rng: &mut StdRng) -> ArgStructure {
    let a = random_formula(rng, 1);
    let (b1, b2) = (random_formula(rng, 1), random_formula(rng, 1));
    let goal = random_formula(rng, 2);
    let hyps = context(rng);
    let with = |extra: &Formula| {
        let mut h = hyps.clone();
        h.push(extra.clone());
        h
    };
    let left = rng.gen_bool(0.5);
    let bi = if left { &b1 } else { &b2 };
    let d1 = open_tree(rng, bi, &with(&a), 3);
    let major = ArgStructure::infer(vec![d1], Formula::disj(b1.clone(), b2.clone()));
    let ab1 = Formula::imp(a.clone(), b1.clone());
    let ab2 = Formula::imp(a.clone(), b2.clone());
    let m1 = open_tree(rng, &goal, &with(&ab1), 3);
    let m2 = open_tree(rng, &goal, &with(&ab2), 3);
    let premises = vec![major, m1, m2];
    let targets = [a, ab1, ab2];
    let mut delta = Vec::new();
    for (i, (prem, target)) in premises.iter().zip(&targets).enumerate() {
        for path in prem.positions() {
            let n = prem.at(&path).expect("listed position");
            if n.is_open_assumption() && n.conclusion() == target {
                delta.push(Discharge { premise: i, path });
            }
        }
    }
    build_inference(Inference {
        premises,
        conclusion: goal,
        delta,
    })
    .expect("well-formed S step")
}

pub fn generator_for(name: &str) -> Option<fn(&mut StdRng) -> ArgStructure> {
    Some(match name {
        "phi_imp" => phi_imp_sample,
        "iota" => iota_sample,
        "phi1" => phi1_sample,
        "phi2" => phi2_sample,
        "split_to_s" => split_to_s_sample,
        "phi_s" => phi_s_sample,
        _ => return None,
    })
}
