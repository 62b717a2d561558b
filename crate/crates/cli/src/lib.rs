//! `ptv`: derivability, base-extension semantics, argument reduction and
//! validity, and constructions, from the command line.
//!
//! Exit codes: 0 success or holds, 1 refuted or invalid, 2 usage or parse
//! error, 3 inconclusive within the caps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ptv_core::argstruct::ArgStructure;
use ptv_core::atomic::{check_derivation, derive, AtomicRule, Base, DEFAULT_DEPTH_CAP};
use ptv_core::bes::{bes_holds, make_pool, refute_substitution_closure, ExtensionPool, PoolParams, SequentVerdict};
use ptv_core::constructions::{theorem2_k, Construction, ConstructionCaps, ConstructionChecker, ConstructionVerdict, OpenTerm};
use ptv_core::formula::{parse_formula, parse_sequent, Atom, AtomSubstitution, Formula};
use ptv_core::reduction::{apply_at, reduces_to, search, successors, Explored, Justification, ReductionError, SearchCaps};
use ptv_core::sexp;
use ptv_core::validity::{split_transform, ClosedArgCatalog, Validator, ValidityCaps, ValidityError, ValidityVerdict};

/// Version tag carried by every `--json` report.
pub const SCHEMA: &str = "ptv-verdict/1";

const WIDTH: usize = 88;

#[derive(Parser, Debug)]
#[command(name = "ptv", version, about = "Bounded checks for base-extension semantics and proof-theoretic validity")]
struct Cli {
    /// Print one JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Extra detail (traces, bounds) in text output.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Search for an atomic derivation of GOAL from assumed rules in a base.
    Derive(DeriveArgs),
    #[command(subcommand)]
    Bes(BesCmd),
    #[command(subcommand)]
    Arg(ArgCmd),
    #[command(subcommand)]
    Split(SplitCmd),
    #[command(subcommand)]
    Construct(ConstructCmd),
}

#[derive(Args, Debug)]
struct DeriveArgs {
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    goal: String,
    /// An assumed rule, e.g. "(rule (p)(q) => r)". Repeatable.
    #[arg(long)]
    assume: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_DEPTH_CAP)]
    depth: usize,
}

#[derive(Subcommand, Debug)]
enum BesCmd {
    /// Evaluate a sequent at a base, quantifying over a pool of extensions.
    Check {
        /// "A1 , A2 ==> B" with prefix formulas, e.g. "(imp p q) , p ==> q".
        #[arg(long)]
        sequent: String,
        #[arg(long)]
        base: Option<PathBuf>,
        #[command(flatten)]
        pool: PoolOpts,
    },
    /// Look for a substitution instance of a sequent that fails logically.
    RefuteSubst {
        #[arg(long)]
        sequent: String,
        /// "p=(or p q); q=p". Repeatable; tried in order.
        #[arg(long, required = true)]
        subst: Vec<String>,
        #[command(flatten)]
        pool: PoolOpts,
    },
}

#[derive(Subcommand, Debug)]
enum ArgCmd {
    /// Reduce an argument structure: one named step, towards a target, or
    /// to a structure with no further reductions.
    Reduce {
        #[arg(long)]
        arg: PathBuf,
        /// Comma-separated reduction names.
        #[arg(long, default_value = "")]
        just: String,
        #[arg(long, requires = "at", conflicts_with = "target")]
        reduction: Option<String>,
        /// Position as child indices, e.g. "0.1"; "" is the root.
        #[arg(long, requires = "reduction")]
        at: Option<String>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        /// Print the numbered trace.
        #[arg(long)]
        trace: bool,
    },
    /// Validity of an argument structure relative to a justification and base.
    CheckValid {
        #[arg(long)]
        arg: PathBuf,
        #[arg(long, default_value = "")]
        just: String,
        #[arg(long)]
        base: Option<PathBuf>,
        /// Closed arguments to quantify over besides atomic witnesses.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[command(flatten)]
        pool: PoolOpts,
        #[command(flatten)]
        caps: CapOpts,
    },
}

#[derive(Subcommand, Debug)]
enum SplitCmd {
    /// Turn a closed valid argument for p -> (q or r) into one for
    /// (p -> q) or (p -> r).
    Transform {
        #[arg(long)]
        arg: PathBuf,
        #[arg(long, default_value = "")]
        just: String,
        #[arg(long)]
        base: Option<PathBuf>,
        /// Where to write the output argument.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        pool: PoolOpts,
        #[command(flatten)]
        caps: CapOpts,
    },
}

#[derive(Subcommand, Debug)]
enum ConstructCmd {
    /// Is the term a construction of the formula on the base?
    Check {
        #[arg(long)]
        term: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        base: Option<PathBuf>,
        /// Atomic hypothesis filling the term's holes. Repeatable.
        #[arg(long)]
        from: Vec<String>,
        #[command(flatten)]
        pool: PoolOpts,
        #[command(flatten)]
        caps: ConstructionCapOpts,
    },
    /// The Split construction for a lambda term.
    SplitK {
        #[arg(long)]
        term: PathBuf,
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct PoolOpts {
    /// Pool file "(pool RULE*)"; overrides the generated pool.
    #[arg(long, conflicts_with_all = ["pool_atoms", "pool_level", "pool_premises", "pool_size"])]
    pool: Option<PathBuf>,
    /// Atoms of the generated pool; defaults to those of the inputs.
    #[arg(long, value_delimiter = ',')]
    pool_atoms: Option<Vec<String>>,
    #[arg(long)]
    pool_level: Option<usize>,
    #[arg(long)]
    pool_premises: Option<usize>,
    #[arg(long)]
    pool_size: Option<usize>,
}

impl PoolOpts {
    fn resolve(&self, default_atoms: BTreeSet<Atom>) -> Result<ExtensionPool> {
        if let Some(path) = &self.pool {
            return ExtensionPool::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()));
        }
        let atoms = match &self.pool_atoms {
            Some(names) => names
                .iter()
                .filter(|n| !n.is_empty())
                .map(|n| Atom::parse_atomic(n.trim()))
                .collect::<Result<BTreeSet<_>, _>>()?,
            None => default_atoms,
        };
        if atoms.is_empty() {
            return Ok(ExtensionPool::empty());
        }
        let d = PoolParams::default();
        let params = PoolParams {
            max_level: self.pool_level.unwrap_or(d.max_level),
            max_premises: self.pool_premises.unwrap_or(d.max_premises),
            max_size: self.pool_size.unwrap_or(d.max_size),
        };
        Ok(make_pool(&atoms, params)?)
    }
}

#[derive(Args, Debug)]
struct CapOpts {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    assignments: Option<usize>,
    #[arg(long)]
    nesting: Option<usize>,
}

impl CapOpts {
    fn resolve(&self) -> ValidityCaps {
        let d = ValidityCaps::default();
        ValidityCaps {
            steps: self.steps.unwrap_or(d.steps),
            states: self.states.unwrap_or(d.states),
            assignments: self.assignments.unwrap_or(d.assignments),
            nesting: self.nesting.unwrap_or(d.nesting),
        }
    }
}

#[derive(Args, Debug)]
struct ConstructionCapOpts {
    #[arg(long)]
    inputs: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    nesting: Option<usize>,
}

impl ConstructionCapOpts {
    fn resolve(&self) -> ConstructionCaps {
        let d = ConstructionCaps::default();
        ConstructionCaps {
            nesting: self.nesting.unwrap_or(d.nesting),
            inputs: self.inputs.unwrap_or(d.inputs),
            height: self.height.unwrap_or(d.height),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    Holds,
    Refuted,
    Valid,
    Invalid,
    Inconclusive,
    Error,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success | Outcome::Holds | Outcome::Valid => 0,
            Outcome::Failure | Outcome::Refuted | Outcome::Invalid => 1,
            Outcome::Error => 2,
            Outcome::Inconclusive => 3,
        }
    }
}

/// The `--json` report. `bounds` says what an affirmation is relative to
/// (pool, caps); `result` is command specific.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub outcome: Outcome,
    pub exit_code: i32,
    pub bounds: Value,
    pub result: Value,
}

struct Done {
    outcome: Outcome,
    bounds: Value,
    result: Value,
    text: String,
}

impl Done {
    fn new(outcome: Outcome, bounds: Value, result: Value, text: String) -> Self {
        Done { outcome, bounds, result, text }
    }
}

/// Runs one invocation, writing the report to `out` (usage text from clap
/// goes to `err`). Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let command = command_name(&cli.cmd);
    let done = dispatch(&cli.cmd, cli.verbose).unwrap_or_else(|e| {
        Done::new(
            Outcome::Error,
            Value::Null,
            json!({ "message": format!("{e:#}") }),
            format!("error: {e:#}\n"),
        )
    });
    let code = done.outcome.exit_code();
    let written = if cli.json {
        let report = Report {
            schema: SCHEMA.to_string(),
            command: command.to_string(),
            outcome: done.outcome,
            exit_code: code,
            bounds: done.bounds,
            result: done.result,
        };
        serde_json::to_string_pretty(&report).map_err(std::io::Error::other).and_then(|s| writeln!(out, "{s}"))
    } else if done.outcome == Outcome::Error {
        write!(err, "{}", done.text)
    } else {
        write!(out, "{}", done.text)
    };
    if written.is_err() {
        return 2;
    }
    code
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Derive(_) => "derive",
        Cmd::Bes(BesCmd::Check { .. }) => "bes check",
        Cmd::Bes(BesCmd::RefuteSubst { .. }) => "bes refute-subst",
        Cmd::Arg(ArgCmd::Reduce { .. }) => "arg reduce",
        Cmd::Arg(ArgCmd::CheckValid { .. }) => "arg check-valid",
        Cmd::Split(SplitCmd::Transform { .. }) => "split transform",
        Cmd::Construct(ConstructCmd::Check { .. }) => "construct check",
        Cmd::Construct(ConstructCmd::SplitK { .. }) => "construct split-k",
    }
}

fn dispatch(cmd: &Cmd, verbose: bool) -> Result<Done> {
    match cmd {
        Cmd::Derive(a) => run_derive(a),
        Cmd::Bes(BesCmd::Check { sequent, base, pool }) => bes_check(sequent, base.as_deref(), pool, verbose),
        Cmd::Bes(BesCmd::RefuteSubst { sequent, subst, pool }) => refute_subst(sequent, subst, pool),
        Cmd::Arg(ArgCmd::Reduce { arg, just, reduction, at, target, steps, trace }) => {
            arg_reduce(arg, just, reduction.as_deref().zip(at.as_deref()), target.as_deref(), *steps, *trace)
        }
        Cmd::Arg(ArgCmd::CheckValid { arg, just, base, catalog, pool, caps }) => {
            check_valid(arg, just, base.as_deref(), catalog.as_deref(), pool, caps.resolve(), verbose)
        }
        Cmd::Split(SplitCmd::Transform { arg, just, base, out, trace, pool, caps }) => {
            split(arg, just, base.as_deref(), out.as_deref(), *trace, pool, caps.resolve())
        }
        Cmd::Construct(ConstructCmd::Check { term, formula, base, from, pool, caps }) => {
            construct_check(term, formula, base.as_deref(), from, pool, caps.resolve())
        }
        Cmd::Construct(ConstructCmd::SplitK { term, base, out }) => split_k(term, base.as_deref(), out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_base(path: Option<&Path>) -> Result<Base> {
    match path {
        Some(p) => Base::parse(&read(p)?).with_context(|| format!("parsing {}", p.display())),
        None => Ok(Base::empty()),
    }
}

fn load_arg(path: &Path) -> Result<ArgStructure> {
    ArgStructure::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn justification(list: &str) -> Result<Justification> {
    if list.trim().is_empty() {
        return Ok(Justification::empty());
    }
    Ok(Justification::parse(list)?)
}

/// Indented rendering of any of the s-expression formats.
fn pretty(x: &impl std::fmt::Display) -> String {
    let flat = x.to_string();
    match sexp::parse_one(&flat) {
        Ok(s) => s.pretty(WIDTH),
        Err(_) => flat,
    }
}

fn arg_atoms(d: &ArgStructure) -> BTreeSet<Atom> {
    d.positions()
        .iter()
        .filter_map(|p| d.at(p))
        .flat_map(|s| s.conclusion().atoms())
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

fn run_derive(a: &DeriveArgs) -> Result<Done> {
    let base = load_base(a.base.as_deref())?;
    let goal = Atom::parse_atomic(&a.goal)?;
    let assumed = a
        .assume
        .iter()
        .map(|r| AtomicRule::parse(r).with_context(|| format!("parsing rule {r}")))
        .collect::<Result<BTreeSet<_>>>()?;
    let bounds = json!({ "depth_cap": a.depth });
    Ok(match derive(&goal, &assumed, &base, a.depth)? {
        Some(d) => {
            let checked = check_derivation(&d, &assumed, &base)
                .map_err(|e| anyhow!("derivation failed its own check: {e:?}"))?
                .is_accept();
            if !checked {
                bail!("derivation failed its own check");
            }
            let text = format!("derivable: {goal}\n{}\n", pretty(&d));
            Done::new(Outcome::Success, bounds, json!({ "derivation": d, "checked": checked }), text)
        }
        None => Done::new(
            Outcome::Failure,
            bounds,
            json!({ "derivation": null }),
            format!("not derivable: {goal}\n"),
        ),
    })
}

fn bes_check(sequent: &str, base: Option<&Path>, pool: &PoolOpts, verbose: bool) -> Result<Done> {
    let (gamma, a) = parse_sequent(sequent)?;
    let b = load_base(base)?;
    let mut atoms: BTreeSet<Atom> = gamma.iter().chain([&a]).flat_map(|f| f.atoms()).collect();
    atoms.extend(b.atoms());
    let pool = pool.resolve(atoms)?;
    let verdict = bes_holds(&gamma, &a, &b, &pool)?;
    let replayed = verdict.replay(&gamma, &a, &b, &pool)?;
    let bounds = serde_json::to_value(pool.bounds())?;
    let mut text = String::new();
    let outcome = match &verdict {
        SequentVerdict::HoldsWithinPool { .. } => {
            writeln!(text, "holds within pool of {} rules", pool.len())?;
            Outcome::Holds
        }
        SequentVerdict::RefutedBy { extension, trace } => {
            writeln!(text, "refuted at extension {extension}")?;
            if verbose {
                writeln!(text, "{}", serde_json::to_string_pretty(trace)?)?;
            }
            Outcome::Refuted
        }
    };
    if verbose {
        writeln!(text, "pool: {}", pretty(&pool))?;
    }
    writeln!(text, "replayed: {replayed}")?;
    Ok(Done::new(outcome, bounds, json!({ "verdict": verdict, "replayed": replayed }), text))
}

fn refute_subst(sequent: &str, subst: &[String], pool: &PoolOpts) -> Result<Done> {
    let (gamma, a) = parse_sequent(sequent)?;
    let subs = subst
        .iter()
        .map(|s| AtomSubstitution::parse(s).with_context(|| format!("parsing substitution {s}")))
        .collect::<Result<Vec<_>>>()?;
    let atoms: BTreeSet<Atom> = subs
        .iter()
        .flat_map(|s| gamma.iter().chain([&a]).map(move |f| s.apply(f)))
        .flat_map(|f| f.atoms())
        .collect();
    let pool = pool.resolve(atoms)?;
    let bounds = serde_json::to_value(pool.bounds())?;
    Ok(match refute_substitution_closure(&gamma, &a, &subs, &pool)? {
        Some(r) => {
            let replayed = r.replay(&pool)?;
            let shown: Vec<String> = r.gamma.iter().map(Formula::to_string).collect();
            let text = format!(
                "refuted by substitution {}\ninstance: {} ==> {}\nextension: {}\nreplayed: {replayed}\n",
                r.substitution,
                shown.join(" , "),
                r.succedent,
                r.extension
            );
            Done::new(Outcome::Refuted, bounds, json!({ "refutation": r, "replayed": replayed }), text)
        }
        None => Done::new(
            Outcome::Holds,
            bounds,
            json!({ "refutation": null, "tried": subs.len() }),
            format!("no instance among {} substitutions is refuted within the pool\n", subs.len()),
        ),
    })
}

fn parse_path(text: &str) -> Result<Vec<usize>> {
    text.split(['.', ','])
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|e| anyhow!("bad position {text:?}: {e}")))
        .collect()
}

fn arg_reduce(
    arg: &Path,
    just: &str,
    single: Option<(&str, &str)>,
    target: Option<&Path>,
    steps: usize,
    show_trace: bool,
) -> Result<Done> {
    let d = load_arg(arg)?;
    let j = justification(just)?;
    let bounds = json!({ "steps": steps });
    if let Some((name, at)) = single {
        let phi = j.get(name).ok_or_else(|| anyhow!("{name} is not in the justification"))?;
        let path = parse_path(at)?;
        let result = apply_at(&d, &path, phi)?;
        let text = format!("{name} at {path:?}:\n{}\n", pretty(&result));
        return Ok(Done::new(Outcome::Success, bounds, json!({ "result": result }), text));
    }
    let found = match target {
        Some(t) => {
            let t = load_arg(t)?;
            match reduces_to(&d, &t, &j, steps) {
                Ok(found) => found.map_or(Explored::Exhausted, Explored::Stopped),
                Err(ReductionError::CapExhausted(_)) => Explored::CapReached,
                Err(e) => return Err(e.into()),
            }
        }
        None => search(&d, &j, SearchCaps::steps(steps), |x| successors(x, &j).is_empty()),
    };
    Ok(match found {
        Explored::Stopped(trace) => {
            let mut text = if show_trace {
                format!("{trace}")
            } else {
                format!("{}\n", pretty(trace.end()))
            };
            writeln!(text, "{} step(s), replayed: {}", trace.len(), trace.replay(&j))?;
            let end = trace.end().clone();
            Done::new(Outcome::Success, bounds, json!({ "trace": trace, "result": end }), text)
        }
        Explored::Exhausted => Done::new(
            Outcome::Failure,
            bounds,
            json!({ "trace": null }),
            "every reachable structure was visited; none qualifies\n".to_string(),
        ),
        Explored::CapReached => Done::new(
            Outcome::Inconclusive,
            bounds,
            json!({ "trace": null }),
            format!("no answer within {steps} steps\n"),
        ),
    })
}

fn validity_outcome(v: &ValidityVerdict) -> Outcome {
    match v {
        ValidityVerdict::Valid { .. } => Outcome::Valid,
        ValidityVerdict::Invalid { .. } => Outcome::Invalid,
        ValidityVerdict::Inconclusive { .. } => Outcome::Inconclusive,
    }
}

fn validity_text(v: &ValidityVerdict) -> String {
    match v {
        ValidityVerdict::Valid { .. } => "valid".to_string(),
        ValidityVerdict::Invalid { invalidity } => format!("invalid: {}", invalidity.reason),
        ValidityVerdict::Inconclusive { reason } => format!("inconclusive: {reason}"),
    }
}

fn validator(
    d: &ArgStructure,
    b: &Base,
    catalog: Option<&Path>,
    pool: &PoolOpts,
    caps: ValidityCaps,
) -> Result<(Validator, Value)> {
    let mut atoms = arg_atoms(d);
    atoms.extend(b.atoms());
    let pool = pool.resolve(atoms)?;
    let mut cat = ClosedArgCatalog::atomic_witnesses(b, &pool)?;
    if let Some(path) = catalog {
        cat.extend(&ClosedArgCatalog::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?);
    }
    let bounds = json!({ "pool": pool.bounds(), "catalog_entries": cat.len(), "caps": caps });
    Ok((Validator::new(cat, pool, caps), bounds))
}

fn check_valid(
    arg: &Path,
    just: &str,
    base: Option<&Path>,
    catalog: Option<&Path>,
    pool: &PoolOpts,
    caps: ValidityCaps,
    verbose: bool,
) -> Result<Done> {
    let d = load_arg(arg)?;
    let j = justification(just)?;
    let b = load_base(base)?;
    let (v, bounds) = validator(&d, &b, catalog, pool, caps)?;
    let verdict = v.valid(&d, &j, &b)?;
    let replayed = verdict.evidence().map(|ev| v.replay(&d, &j, &b, ev));
    let mut text = format!("{}\n", validity_text(&verdict));
    if verbose {
        writeln!(text, "{}", serde_json::to_string_pretty(&verdict)?)?;
    }
    if let Some(r) = replayed {
        writeln!(text, "evidence replayed: {r}")?;
    }
    writeln!(text, "bounds: {bounds}")?;
    let result = json!({ "verdict": verdict, "replayed": replayed });
    Ok(Done::new(validity_outcome(&verdict), bounds, result, text))
}

fn split(
    arg: &Path,
    just: &str,
    base: Option<&Path>,
    out: Option<&Path>,
    show_trace: bool,
    pool: &PoolOpts,
    caps: ValidityCaps,
) -> Result<Done> {
    let d = load_arg(arg)?;
    let j = justification(just)?;
    let c = load_base(base)?;
    let (v, bounds) = validator(&d, &c, None, pool, caps)?;
    let s = match split_transform(&v, &d, &j, &c) {
        Ok(s) => s,
        Err(ValidityError::Precondition(reason)) => {
            return Ok(Done::new(
                Outcome::Invalid,
                bounds,
                json!({ "precondition": reason }),
                format!("not a valid Split input: {reason}\n"),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let replayed = s.trace.replay(&s.justification);
    let shown = pretty(&s.output);
    if let Some(path) = out {
        write_file(path, &shown)?;
    }
    let mut text = String::new();
    if show_trace {
        write!(text, "{}", s.trace)?;
    }
    if out.is_none() {
        writeln!(text, "{shown}")?;
    }
    writeln!(text, "case: {:?}, {} step(s), trace replayed: {replayed}", s.case, s.trace.len())?;
    writeln!(text, "output {} relative to {}", validity_text(&s.verdict), s.justification)?;
    writeln!(text, "bounds: {bounds}")?;
    let outcome = validity_outcome(&s.verdict);
    Ok(Done::new(outcome, bounds, json!({ "split": s, "replayed": replayed }), text))
}

fn construction_outcome(v: &ConstructionVerdict) -> (Outcome, String) {
    match v {
        ConstructionVerdict::Valid { .. } => (Outcome::Valid, "valid".into()),
        ConstructionVerdict::Invalid { reason, extension, .. } => (
            Outcome::Invalid,
            match extension {
                Some(e) => format!("invalid at extension {e}: {reason}"),
                None => format!("invalid: {reason}"),
            },
        ),
        ConstructionVerdict::Inconclusive { reason } => (Outcome::Inconclusive, format!("inconclusive: {reason}")),
    }
}

fn construct_check(
    term: &Path,
    formula: &str,
    base: Option<&Path>,
    from: &[String],
    pool: &PoolOpts,
    caps: ConstructionCaps,
) -> Result<Done> {
    let a = parse_formula(formula)?;
    let b = load_base(base)?;
    let gamma = from.iter().map(|f| parse_formula(f)).collect::<Result<Vec<_>, _>>()?;
    let mut atoms: BTreeSet<Atom> = gamma.iter().chain([&a]).flat_map(|f| f.atoms()).collect();
    atoms.extend(b.atoms());
    let pool = pool.resolve(atoms)?;
    let bounds = json!({ "pool": pool.bounds(), "caps": caps });
    let checker = ConstructionChecker::new(pool, caps);
    let text = read(term)?;
    let verdict = if gamma.is_empty() {
        checker.is_construction(&Construction::parse(&text)?, &a, &b)?
    } else {
        checker.is_construction_from(&OpenTerm::parse(&text)?, &gamma, &a, &b)?
    };
    let (outcome, line) = construction_outcome(&verdict);
    let text = format!("{line}\nbounds: {bounds}\n");
    Ok(Done::new(outcome, bounds, json!({ "verdict": verdict }), text))
}

fn split_k(term: &Path, base: Option<&Path>, out: Option<&Path>) -> Result<Done> {
    let k1 = Construction::parse(&read(term)?)?;
    let c = load_base(base)?;
    let s = theorem2_k(&k1, &c)?;
    let shown = pretty(&s.output);
    if let Some(path) = out {
        write_file(path, &shown)?;
    }
    let mut text = if out.is_none() { format!("{shown}\n") } else { String::new() };
    writeln!(text, "disjunct {}, distinguished axiom used: {}", s.tag.index(), s.used_axiom)?;
    Ok(Done::new(Outcome::Success, Value::Null, json!({ "split": s }), text))
}
