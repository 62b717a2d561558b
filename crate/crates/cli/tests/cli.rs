use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

use ptv_cli::{Outcome, Report, SCHEMA};
use ptv_core::argstruct::ArgStructure;
use ptv_core::atomic::Base;
use ptv_core::bes::ExtensionPool;
use ptv_core::constructions::OpenTerm;
use ptv_core::formula::parse_sequent;
use ptv_core::validity::ClosedArgCatalog;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fx(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn ptv(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ptv")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(args: &[&str]) -> (i32, Report, Value) {
    let mut args = args.to_vec();
    args.push("--json");
    let (code, out, err) = ptv(&args);
    let raw: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}{err}"));
    let r: Report = serde_json::from_value(raw.clone()).unwrap();
    (code, r, raw)
}

#[test]
fn derive_example() {
    let (code, out, _) = ptv(&[
        "derive",
        "--base",
        &fx("p_rule.base"),
        "--goal",
        "r",
        "--assume",
        "(rule (p)(q) => r)",
        "--assume",
        "(rule => q)",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("(apply (rule (p) (q) => r)"), "{out}");

    let (code, _, _) = ptv(&["derive", "--base", &fx("p_rule.base"), "--goal", "r"]);
    assert_eq!(code, 1);
}

#[test]
fn split_transform_example_writes_a_valid_argument() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.arg");
    let (code, stdout, _) = ptv(&[
        "split",
        "transform",
        "--arg",
        &fx("split_case2.arg"),
        "--base",
        &fx("p_to_q.base"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("output valid"), "{stdout}");
    let written = ArgStructure::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(written.is_closed());
    assert_eq!(written.conclusion().to_string(), "(or (imp p q) (imp p r))");

    // The written file checks on its own.
    let (code, _, _) = ptv(&[
        "arg",
        "check-valid",
        "--arg",
        out.to_str().unwrap(),
        "--just",
        "phi1,phi2",
        "--base",
        &fx("p_to_q.base"),
    ]);
    assert_eq!(code, 0);
}

#[test]
fn bottom_fails_at_the_empty_base() {
    assert_eq!(ptv(&["bes", "check", "--sequent", "==> bot"]).0, 1);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(ptv(&["bes", "check"]).0, 2);
    assert_eq!(ptv(&["bes", "check", "--sequent", "p ==> q", "--frobnicate"]).0, 2);
    assert_eq!(ptv(&["nonsense"]).0, 2);
    let (code, _, err) = ptv(&["bes", "check", "--sequent", "(imp p ==> q"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
    assert_eq!(ptv(&["derive", "--base", "/no/such/file", "--goal", "p"]).0, 2);
    assert_eq!(ptv(&["--help"]).0, 0);
}

#[test]
fn hitting_the_step_cap_is_inconclusive() {
    let args = ["arg", "reduce", "--arg", &fx("split_redex.arg"), "--just", "phi_imp"];
    assert_eq!(ptv(&args).0, 0);
    let capped: Vec<&str> = args.iter().copied().chain(["--steps", "0"]).collect();
    let (code, r, _) = report(&capped);
    assert_eq!((code, r.outcome), (3, Outcome::Inconclusive));
}

#[test]
fn every_fixture_parses() {
    let mut seen = 0;
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let name = path.display();
        match path.extension().and_then(|e| e.to_str()) {
            Some("base") => drop(Base::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))),
            Some("arg") => drop(ArgStructure::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))),
            Some("term") => drop(OpenTerm::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))),
            Some("pool") => drop(ExtensionPool::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))),
            Some("catalog") => drop(ClosedArgCatalog::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))),
            Some("txt") => {
                for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
                    parse_sequent(line).unwrap_or_else(|e| panic!("{name}: {line}: {e}"));
                }
            }
            _ => panic!("unrecognised fixture {name}"),
        }
        seen += 1;
    }
    assert!(seen >= 20);
}

/// Recorded verdicts for every fixture, through the binary.
#[test]
fn golden_verdicts() {
    let split = [
        ("split_case2.arg", "p_to_q.base", ""),
        ("split_vacuous.arg", "axiom_q.base", ""),
        ("split_redex.arg", "s_to_r.base", "phi_imp"),
        ("split_level2.arg", "level2.base", ""),
        ("split_two_leaves.arg", "p_twice.base", ""),
        ("split_right.arg", "p_to_r.base", ""),
    ];
    for (arg, base, just) in split {
        let (code, r, _) = report(&["split", "transform", "--arg", &fx(arg), "--base", &fx(base), "--just", just]);
        assert_eq!((code, r.outcome), (0, Outcome::Valid), "{arg}: {:?}", r.result);
        assert_eq!(r.result["replayed"], Value::Bool(true), "{arg}");

        let (code, r, _) = report(&["arg", "check-valid", "--arg", &fx(arg), "--base", &fx(base), "--just", just]);
        assert_eq!((code, r.outcome), (0, Outcome::Valid), "{arg}");
        assert_eq!(r.result["replayed"], Value::Bool(true), "{arg}");
    }
    // Not valid on the empty base: nothing derives q there.
    let (code, r, _) = report(&["arg", "check-valid", "--arg", &fx("split_case2.arg")]);
    assert_eq!((code, r.outcome), (1, Outcome::Invalid));

    let terms = [
        ("split_left.term", "p_to_q.base", 0, true),
        ("split_vacuous.term", "axiom_q.base", 0, false),
        ("wrong_tag.term", "p_to_q.base", 1, true),
    ];
    for (term, base, expected, uses_axiom) in terms {
        let (code, _, _) = report(&[
            "construct",
            "check",
            "--term",
            &fx(term),
            "--formula",
            "(imp p (or q r))",
            "--base",
            &fx(base),
        ]);
        assert_eq!(code, expected, "{term}");

        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("k.term");
        let (code, r, _) = report(&["construct", "split-k", "--term", &fx(term), "--base", &fx(base), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{term}");
        assert_eq!(r.result["split"]["used_axiom"], Value::Bool(uses_axiom), "{term}");
        // Valid inputs give valid outputs; the mistagged one stays invalid.
        let (code, _, _) = report(&[
            "construct",
            "check",
            "--term",
            out.to_str().unwrap(),
            "--formula",
            "(or (imp p q) (imp p r))",
            "--base",
            &fx(base),
        ]);
        assert_eq!(code, expected, "{term} output");
    }
    let step = ["construct", "check", "--term", &fx("step_q.term"), "--from", "p", "--formula", "q"];
    let base = fx("p_to_q.base");
    let with_rule: Vec<&str> = step.iter().copied().chain(["--base", base.as_str()]).collect();
    assert_eq!(report(&with_rule).0, 0);
    assert_eq!(report(&step).0, 1);

    let (code, r, _) = report(&["bes", "check", "--sequent", "p ==> q", "--pool", &fx("pq_axioms.pool")]);
    assert_eq!((code, r.outcome), (1, Outcome::Refuted));
    assert_eq!(r.bounds["pool_rules"], 2);

    let (code, r, _) = report(&[
        "arg",
        "check-valid",
        "--arg",
        &fx("split_vacuous.arg"),
        "--base",
        &fx("axiom_q.base"),
        "--catalog",
        &fx("split_inputs.catalog"),
    ]);
    assert_eq!((code, r.outcome), (0, Outcome::Valid));
    assert!(r.bounds["catalog_entries"].as_u64().unwrap() >= 2);
}

#[test]
fn il_fixture_holds_through_the_cli() {
    let text = std::fs::read_to_string(fixtures().join("il_sequents.txt")).unwrap();
    for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).take(10) {
        let (code, r, _) = report(&["bes", "check", "--sequent", line]);
        assert_eq!((code, r.outcome), (0, Outcome::Holds), "{line}");
    }
}

#[test]
fn substitution_refutation_replays() {
    let (code, r, _) = report(&[
        "bes",
        "refute-subst",
        "--sequent",
        "(imp p (or q r)) ==> (or (imp p q) (imp p r))",
        "--subst",
        "p=q; q=r",
        "--subst",
        "p=(or p q); q=p; r=q",
        "--pool",
        &fx("pq_axioms.pool"),
    ]);
    assert_eq!((code, r.outcome), (1, Outcome::Refuted));
    assert_eq!(r.result["replayed"], Value::Bool(true));
    let mapping = &r.result["refutation"]["substitution"]["mapping"];
    assert_eq!((&mapping["p"], &mapping["q"], &mapping["r"]), (&"(or p q)".into(), &"p".into(), &"q".into()));
}

#[test]
fn json_reports_round_trip() {
    let cases: Vec<Vec<String>> = vec![
        vec!["bes".into(), "check".into(), "--sequent".into(), "==> bot".into()],
        vec!["derive".into(), "--base".into(), fx("p_rule.base"), "--goal".into(), "p".into()],
        vec!["split".into(), "transform".into(), "--arg".into(), fx("split_vacuous.arg"), "--base".into(), fx("axiom_q.base")],
        vec!["construct".into(), "split-k".into(), "--term".into(), fx("split_left.term"), "--base".into(), fx("p_to_q.base")],
        vec!["bes".into(), "check".into(), "--sequent".into(), "(".into()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, r, raw) = report(&args);
        assert_eq!(r.schema, SCHEMA);
        assert_eq!(r.exit_code, code);
        assert_eq!(r.outcome.exit_code(), code);
        assert_eq!(serde_json::to_value(&r).unwrap(), raw, "{args:?}");
    }
}

#[test]
fn in_process_run_matches_the_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = ptv_cli::run(["ptv", "bes", "check", "--sequent", "p ==> p"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), ptv(&["bes", "check", "--sequent", "p ==> p"]).1);
}
