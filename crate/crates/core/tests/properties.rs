use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use ptv_core::argstruct::{sigma_instance, ArgStructure};
use ptv_core::atomic::{check_derivation, derive, AtomicDerivation, AtomicRule, Base, DEFAULT_DEPTH_CAP};
use ptv_core::bes::{bes_holds, make_pool, PoolParams};
use ptv_core::constructions::{gen, ConstructionCaps, ConstructionChecker, OpenTerm};
use ptv_core::formula::{atom, parse_formula, Atom, Formula};
use ptv_core::reduction::{catalog, check_laws_with, search, successors, Explored, Justification, SearchCaps};
use ptv_core::samples;
use ptv_core::validity::{ClosedArgCatalog, Validator, ValidityCaps};

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn small_base(r: &mut StdRng) -> Base {
    let atoms = ["p", "q", "r"].map(atom);
    Base::from_rules((0..r.gen_range(0..4)).map(|_| {
        let concl = atoms.choose(r).unwrap().clone();
        let n = r.gen_range(0..2);
        AtomicRule::simple((0..n).map(|_| atoms.choose(r).unwrap().clone()), concl)
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_text_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let name = ["phi_imp", "iota", "phi1", "phi2", "split_to_s", "phi_s"].choose(&mut r).unwrap();
        let d = samples::generator_for(name).unwrap()(&mut r);
        prop_assert_eq!(ArgStructure::parse(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn sigma_instances_close_and_keep_conclusion(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = samples::phi_imp_sample(&mut r);
        let s = samples::random_sigma(&d, &mut r);
        let inst = sigma_instance(&d, &s).unwrap();
        prop_assert!(inst.is_closed());
        prop_assert_eq!(inst.conclusion(), d.conclusion());
    }

    #[test]
    fn successor_traces_replay(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = samples::split_to_s_sample(&mut r);
        let j = Justification::of(catalog());
        for step in successors(&d, &j) {
            prop_assert!(step.result.audit().is_ok());
            prop_assert_eq!(step.result.conclusion(), d.conclusion());
        }
        if let Explored::Stopped(t) = search(&d, &j, SearchCaps::steps(3), |x| x != &d) {
            prop_assert!(t.replay(&j));
        }
    }

    #[test]
    fn derive_output_checks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let b = small_base(&mut r);
        for a in ["p", "q", "r"].map(atom) {
            if let Some(d) = derive(&a, &BTreeSet::new(), &b, DEFAULT_DEPTH_CAP).unwrap() {
                prop_assert!(check_derivation(&d, &BTreeSet::new(), &b).unwrap().is_accept());
                // And it survives the trip through argument structures.
                let s = ArgStructure::from_atomic(&d).unwrap();
                prop_assert!(s.witnesses(&b));
            }
        }
    }

    #[test]
    fn bes_verdicts_replay(seed in any::<u64>()) {
        let mut r = rng(seed);
        let b = small_base(&mut r);
        let pool = make_pool(&["p", "q", "r"].map(atom).into_iter().collect(), PoolParams::default()).unwrap();
        let a = samples::random_formula(&mut r, 2);
        let gamma = vec![samples::random_formula(&mut r, 1)];
        let v = bes_holds(&gamma, &a, &b, &pool).unwrap();
        prop_assert!(v.replay(&gamma, &a, &b, &pool).unwrap());
    }

    #[test]
    fn valid_verdicts_replay(seed in any::<u64>()) {
        let mut r = rng(seed);
        let b = small_base(&mut r);
        let pool = make_pool(&["p", "q"].map(atom).into_iter().collect(), PoolParams { max_level: 1, max_premises: 1, max_size: 3 }).unwrap();
        let v = Validator::new(ClosedArgCatalog::atomic_witnesses(&b, &pool).unwrap(), pool, ValidityCaps::default());
        let j = Justification::parse("phi_imp").unwrap();
        let f = samples::random_formula(&mut r, 1);
        let d = samples::closed_tree(&mut r, &f, 3);
        if let Some(ev) = v.valid_closed(&d, &j, &b).unwrap().evidence() {
            prop_assert!(v.replay(&d, &j, &b, ev));
        }
    }

    #[test]
    fn abstracting_the_distinguished_axiom_inverts_filling(seed in any::<u64>()) {
        let mut r = rng(seed);
        let marked = AtomicRule::distinguished_axiom(atom("p"));
        let b = small_base(&mut r).with(marked.clone());
        for a in ["q", "r"].map(atom) {
            if let Some(d) = derive(&a, &BTreeSet::new(), &b, DEFAULT_DEPTH_CAP).unwrap() {
                let t = OpenTerm::abstract_axiom(&d, &marked);
                let back = t.fill(&atom("p"), &AtomicDerivation::axiom(marked.clone())).close().unwrap();
                prop_assert_eq!(back.to_term(), OpenTerm::of_derivation(&d));
                prop_assert_eq!(t.free_holes().is_empty(), !d.uses_open(&marked));
            }
        }
    }

    #[test]
    fn constructions_persist_under_extension(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pool = make_pool(&["p", "q", "r"].map(atom).into_iter().collect(), PoolParams { max_level: 1, max_premises: 1, max_size: 5 }).unwrap();
        let checker = ConstructionChecker::new(pool.clone(), ConstructionCaps::default());
        let c = gen::base(&mut r);
        if let Some(k) = gen::split_input(&mut r, &c) {
            let premise = parse_formula("(imp p (or q r))").unwrap();
            prop_assert!(checker.is_construction(&k, &premise, &c).unwrap().is_valid());
            let extra: Vec<AtomicRule> = pool.rules().iter().filter(|_| r.gen_bool(0.5)).cloned().collect();
            let bigger = c.union(&Base::from_rules(extra));
            prop_assert!(checker.is_construction(&k, &premise, &bigger).unwrap().is_valid());
        }
    }
}

#[test]
fn split_samples_never_share_domains() {
    let phi1 = ptv_core::reduction::catalog_entry("phi1").unwrap();
    let phi2 = ptv_core::reduction::catalog_entry("phi2").unwrap();
    let mut r = rng(11);
    for _ in 0..500 {
        let d = if r.gen_bool(0.5) { samples::phi1_sample(&mut r) } else { samples::phi2_sample(&mut r) };
        assert!(phi1.in_domain(&d) != phi2.in_domain(&d), "{d}");
    }
}

#[test]
fn catalog_laws_hold_sequentially_and_in_parallel() {
    for sequential in [false, true] {
        ptv_core::par::set_sequential(sequential);
        for phi in catalog() {
            let gen = samples::generator_for(phi.name()).unwrap();
            assert!(check_laws_with(&phi, &gen, 100, 3).passed(), "{}", phi.name());
        }
    }
    ptv_core::par::set_sequential(false);
}

#[test]
fn atoms_of_generated_formulas_stay_small() {
    let mut r = rng(5);
    let allowed: BTreeSet<Atom> = ["p", "q", "r", "s"].map(atom).into_iter().chain([Atom::bottom()]).collect();
    for _ in 0..200 {
        let f: Formula = samples::random_formula(&mut r, 3);
        assert!(f.atoms().is_subset(&allowed));
    }
}
