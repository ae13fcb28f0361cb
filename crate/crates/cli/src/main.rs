//! `termbound`: command-line access to every stage of the termination
//! pipeline, from ordinal arithmetic to certified step bounds.

mod ordexpr;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use termbound::bounds::{bound_g, find_nondescent, BoundConfig, BoundError, SequenceFn};
use termbound::erdos::{embed, f_star, ErdosError, Point};
use termbound::ktree::height_nil;
use termbound::nat::{to_u64, Nat};
use termbound::ordinals::Ordinal;
use termbound::prcompile::{compile, eval_pr, CompiledUnit, PRTerm, PrError};
use termbound::termlang::{check_invariant, step_bound, CheckReport, TermError, TransitionInvariant};

#[derive(Parser)]
#[command(name = "termbound", version, about = "Ordinal termination bounds for certified programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Tree arity or tuple dimension.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,

    /// Step budget for running and checking programs.
    #[arg(long, global = true, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,

    /// Largest bound value computed before giving up. Accepts `10^N`.
    #[arg(long, global = true, default_value = "10^9", value_parser = parse_bound)]
    max_bound: Nat,

    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,

    /// Replace the compiled invariant with one read from this JSON file.
    #[arg(long, global = true)]
    invariant: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an ordinal expression (`+`, `#`, `#*n`, `exp(k, a)`).
    Ord { expr: String },
    /// Height of the empty tree among k-ary trees labelled below ALPHA.
    TreeHeight { alpha: String },
    /// Erdos tree and measure of a homogeneous sequence (JSON list of tuples, inline or a file).
    Embed { sequence: String },
    /// Descent bound and a non-descent witness for a sequence read from a JSON file.
    Bound {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        n: u64,
    },
    /// Compile a primitive recursive term to a program with its invariant.
    Compile { term: PathBuf },
    /// Run a term file or compiled unit on the given inputs.
    Run { unit: PathBuf, inputs: Vec<String> },
    /// Check the invariant of a term file or compiled unit on one trace.
    Check { unit: PathBuf, inputs: Vec<String> },
    /// Compile, run, compare with direct evaluation, check, and bound.
    Pipeline { term: PathBuf, inputs: Vec<String> },
}

fn parse_bound(s: &str) -> Result<Nat, String> {
    let value = match s.split_once('^') {
        Some((base, exp)) => {
            let base: Nat = base.trim().parse().map_err(|_| format!("bad base in `{s}`"))?;
            let exp: u32 = exp.trim().parse().map_err(|_| format!("bad exponent in `{s}`"))?;
            base.pow(exp)
        }
        None => s.trim().parse().map_err(|_| format!("`{s}` is not a natural number"))?,
    };
    if value == Nat::from(0u8) {
        return Err("the bound must be positive".into());
    }
    Ok(value)
}

/// Why a command could not produce a passing result.
#[derive(Debug)]
enum Failure {
    Violation(String),
    Input(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Violation(_) => "violation",
            Failure::Input(_) => "input",
            Failure::Budget(_) => "budget",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Violation(m) | Failure::Input(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::BudgetExceeded(_) => Failure::Budget(e.to_string()),
            BoundError::LemmaViolated { .. } => Failure::Violation(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<TermError> for Failure {
    fn from(e: TermError) -> Self {
        match e {
            TermError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            TermError::Bound(b) => b.into(),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<PrError> for Failure {
    fn from(e: PrError) -> Self {
        match e {
            PrError::Term(t) => t.into(),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<ErdosError> for Failure {
    fn from(e: ErdosError) -> Self {
        Failure::Input(e.to_string())
    }
}

/// What a command prints, and its exit code.
struct Report {
    doc: Value,
    human: String,
    code: u8,
}

impl Report {
    fn ok(doc: Value, human: String) -> Self {
        Report { doc, human, code: 0 }
    }
}

fn nat_json(n: &Nat) -> Value {
    match to_u64(n) {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

fn read_source(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    serde_json::from_str(&read_source(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_inputs(inputs: &[String]) -> Result<Vec<Nat>, Failure> {
    inputs
        .iter()
        .map(|s| s.parse().map_err(|_| Failure::Input(format!("input `{s}` is not a natural number"))))
        .collect()
}

fn parse_ordinal(s: &str) -> Result<Ordinal, Failure> {
    Ordinal::parse(s).map_err(|e| Failure::Input(e.to_string()))
}

/// A term file in the DSL, or a compiled unit in JSON. The term is absent
/// for the latter.
fn load_unit(path: &Path, invariant: Option<&Path>) -> Result<(Option<PRTerm>, CompiledUnit), Failure> {
    let src = read_source(path)?;
    let (term, mut unit) = if src.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&src).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        (None, CompiledUnit::from_json(&v)?)
    } else {
        let t = PRTerm::parse(&src)?;
        let unit = compile(&t)?;
        (Some(t), unit)
    };
    if let Some(file) = invariant {
        unit.invariant = TransitionInvariant::from_json(&read_json(file)?)?;
    }
    Ok((term, unit))
}

fn check_lines(report: &CheckReport) -> String {
    let mut out = format!(
        "checked {} pairs over {} states ({}), {} violations",
        report.pairs_checked,
        report.trace_len,
        if report.terminated { "terminated" } else { "step budget reached" },
        report.violation_count
    );
    for v in &report.violations {
        out.push_str(&format!("\n  {}", serde_json::to_string(v).expect("violation serializes")));
    }
    out
}

fn cmd_ord(expr: &str) -> Result<Report, Failure> {
    let v = ordexpr::evaluate(expr).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(Report::ok(json!({ "value": v.to_string() }), v.to_string()))
}

fn cmd_tree_height(k: Option<u64>, alpha: &str) -> Result<Report, Failure> {
    let k = k.ok_or_else(|| Failure::Input("tree-height needs --k".into()))?;
    let alpha = parse_ordinal(alpha)?;
    let h = height_nil(k, &alpha);
    Ok(Report::ok(
        json!({ "k": k, "alpha": alpha.to_string(), "height": h.to_string() }),
        h.to_string(),
    ))
}

fn cmd_embed(k: Option<u64>, sequence: &str) -> Result<Report, Failure> {
    let text = if sequence.trim_start().starts_with('[') {
        sequence.to_string()
    } else {
        read_source(Path::new(sequence))?
    };
    let points: Vec<Point> = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("sequence: {e}")))?;
    let k = match (k, points.first()) {
        (Some(k), _) => k as usize,
        (None, Some(p)) => p.dim(),
        (None, None) => return Err(Failure::Input("an empty sequence needs --k".into())),
    };
    let tree = embed(&points, k)?;
    let labelled = tree.to_labelled_tree()?;
    let mut doc = json!({
        "k": k,
        "nodes": tree.node_count(),
        "branches": tree.to_json(),
        "labelled_tree": labelled.to_string(),
    });
    let mut human = format!("labelled tree: {labelled}");
    if !points.is_empty() {
        let m = f_star(&points, k)?;
        let vector: Vec<Value> = m.to_vector(k).expect("f* is below w^k").iter().map(nat_json).collect();
        doc["f_star"] = json!(m.to_string());
        doc["f_star_vector"] = Value::Array(vector);
        human.push_str(&format!("\nf*: {m}"));
    }
    Ok(Report::ok(doc, human))
}

/// A sequence file is a JSON list of tuples (or of naturals, read as
/// 1-tuples), extended by its last entry.
fn read_sequence(path: &Path, k: Option<u64>) -> Result<SequenceFn, Failure> {
    let v = read_json(path)?;
    let items = v
        .as_array()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Failure::Input("a sequence must be a nonempty JSON list".into()))?;
    let values: Vec<Vec<Nat>> = items
        .iter()
        .map(|item| {
            let item = if item.is_array() { item.clone() } else { json!([item]) };
            serde_json::from_value::<Point>(item)
                .map(|p| p.coords().to_vec())
                .map_err(|e| Failure::Input(format!("sequence entry: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let dim = values[0].len();
    if let Some(bad) = values.iter().find(|t| t.len() != dim) {
        return Err(Failure::Input(format!("mixed tuple lengths {dim} and {}", bad.len())));
    }
    if let Some(k) = k.filter(|&k| k as usize != dim) {
        return Err(Failure::Input(format!("--k {k} but the sequence has {dim}-tuples")));
    }
    Ok(SequenceFn::from_values(values))
}

fn cmd_bound(cli: &Cli, file: &Path, n: u64) -> Result<Report, Failure> {
    let sigma = read_sequence(file, cli.k)?;
    let cfg = BoundConfig::with_ceiling(cli.max_bound.clone());
    let g = bound_g(&sigma, n, &cfg)?;
    let witness = find_nondescent(&sigma, n, &cfg)?;
    Ok(Report::ok(
        json!({ "k": sigma.k(), "n": n, "bound": nat_json(&g), "witness": witness }),
        format!("g({n}) = {g}\nnon-descent at {witness}"),
    ))
}

fn cmd_compile(path: &Path, invariant: Option<&Path>) -> Result<Report, Failure> {
    let (_, unit) = load_unit(path, invariant)?;
    let doc = unit.to_json()?;
    let mut human = format!(
        "inputs: {}\nresult: {}\n{}",
        unit.input_vars.join(" "),
        unit.result_var,
        unit.program
    );
    for rel in doc["invariant"].as_array().expect("invariant is a list") {
        human.push_str(&format!("\nrelation {rel}"));
    }
    Ok(Report::ok(doc, human))
}

fn cmd_run(cli: &Cli, path: &Path, inputs: &[String]) -> Result<Report, Failure> {
    let (_, unit) = load_unit(path, cli.invariant.as_deref())?;
    let args = parse_inputs(inputs)?;
    let (trace, result) = unit.run(&args, cli.max_steps)?;
    let last = trace.last().expect("trace is nonempty");
    Ok(Report::ok(
        json!({
            "result": nat_json(&result),
            "steps": trace.len() - 1,
            "final_state": unit.program.state_to_json(last),
        }),
        format!("result {result} after {} steps", trace.len() - 1),
    ))
}

fn cmd_check(cli: &Cli, path: &Path, inputs: &[String]) -> Result<Report, Failure> {
    let (_, unit) = load_unit(path, cli.invariant.as_deref())?;
    let s0 = unit.initial_state(&parse_inputs(inputs)?)?;
    let report = check_invariant(&unit.program, &s0, &unit.invariant, cli.max_steps)?;
    let code = if !report.passed() {
        1
    } else if !report.terminated {
        3
    } else {
        0
    };
    Ok(Report {
        human: check_lines(&report),
        doc: serde_json::to_value(&report).expect("report serializes"),
        code,
    })
}

fn cmd_pipeline(cli: &Cli, path: &Path, inputs: &[String]) -> Result<Report, Failure> {
    let (term, unit) = load_unit(path, cli.invariant.as_deref())?;
    let term = term.ok_or_else(|| Failure::Input("pipeline needs a term file, not a compiled unit".into()))?;
    let args = parse_inputs(inputs)?;
    let oracle = eval_pr(&term, &args)?;
    let (trace, result) = unit.run(&args, cli.max_steps)?;
    let steps = trace.len() - 1;
    let s0 = &trace[0];
    let check = check_invariant(&unit.program, s0, &unit.invariant, cli.max_steps)?;

    let cfg = BoundConfig::with_ceiling(cli.max_bound.clone());
    let (bound, bound_status) = if !check.passed() {
        (None, "skipped: invariant violated".to_string())
    } else {
        match step_bound(&unit.program, s0, &unit.invariant, cli.max_steps, &cfg) {
            Ok(b) => (Some(b), "computed".to_string()),
            Err(TermError::Bound(BoundError::BudgetExceeded(_))) => {
                (None, format!("exceeds --max-bound {}", cli.max_bound))
            }
            Err(e) => return Err(e.into()),
        }
    };
    let matches = result == oracle;
    let within = bound.as_ref().map(|b| Nat::from(steps) <= *b);
    let code = if !matches || !check.passed() || within == Some(false) {
        1
    } else if bound.is_none() {
        3
    } else {
        0
    };

    let doc = json!({
        "term": term.to_string(),
        "inputs": args.iter().map(nat_json).collect::<Vec<_>>(),
        "result": nat_json(&result),
        "oracle": nat_json(&oracle),
        "result_matches": matches,
        "steps": steps,
        "invariant": serde_json::to_value(&check).expect("report serializes"),
        "step_bound": bound.as_ref().map(nat_json),
        "bound_status": bound_status,
        "steps_within_bound": within,
        "passed": code == 0,
    });
    let mut human = format!(
        "term: {term}\nresult: {result} (direct evaluation {oracle}, {})\nsteps: {steps}\ninvariant: {}",
        if matches { "match" } else { "MISMATCH" },
        check_lines(&check)
    );
    match &bound {
        Some(b) => human.push_str(&format!(
            "\nstep bound: {b}\nsteps within bound: {}",
            if within == Some(true) { "yes" } else { "NO" }
        )),
        None => human.push_str(&format!("\nstep bound: {bound_status}")),
    }
    human.push_str(if code == 0 { "\nPASS" } else { "\nFAIL" });
    Ok(Report { doc, human, code })
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Ord { expr } => cmd_ord(expr),
        Command::TreeHeight { alpha } => cmd_tree_height(cli.k, alpha),
        Command::Embed { sequence } => cmd_embed(cli.k, sequence),
        Command::Bound { file, n } => cmd_bound(cli, file, *n),
        Command::Compile { term } => cmd_compile(term, cli.invariant.as_deref()),
        Command::Run { unit, inputs } => cmd_run(cli, unit, inputs),
        Command::Check { unit, inputs } => cmd_check(cli, unit, inputs),
        Command::Pipeline { term, inputs } => cmd_pipeline(cli, term, inputs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (doc, human, code) = match dispatch(&cli) {
        Ok(r) => (r.doc, r.human, r.code),
        Err(f) => {
            let doc = json!({ "error": { "kind": f.kind(), "message": f.message() } });
            if cli.format == Format::Human {
                eprintln!("error: {}", f.message());
                return ExitCode::from(f.code());
            }
            (doc, String::new(), f.code())
        }
    };
    match cli.format {
        Format::Human => println!("{human}"),
        Format::Structured => println!("{}", serde_json::to_string_pretty(&doc).expect("document serializes")),
    }
    ExitCode::from(code)
}
