//! Primitive recursive terms, their reference evaluator, and a compiler to
//! while-if programs that also emits a certified transition invariant.
//!
//! Term syntax: `z` (unary zero), `(z n)` (n-ary zero), `s`, `(p i n)`,
//! `(comp h g1 … gq)`, `(rec h g)`. `;` starts a comment. Recursion is on
//! the first argument: `f(0, x̄) = h(x̄)`, `f(y+1, x̄) = g(y, f(y, x̄), x̄)`.
//!
//! Every compiled unit declares all of its variables up front, reads its
//! inputs without writing them, and leaves its result in `result_var`. Its
//! invariant always starts with a relation `prog` (`loc < loc'`, rank
//! `len - loc`) covering forward moves; the other relations certify the
//! backward jumps of loops.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde_json::Value;
use thiserror::Error;

use crate::nat::Nat;
use crate::termlang::{
    run_trace, Atom, Cond, Expr, Loc, Program, RankedRelation, State, Stmt, Term, TermError,
    TransitionInvariant,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrError {
    #[error("expected {expected} arguments, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("projection ({i} {n}) needs 1 <= i <= n")]
    InvalidProjection { i: usize, n: usize },
    #[error("ill-formed composition: {0}")]
    Composition(String),
    #[error("ill-formed recursion: {0}")]
    Recursion(String),
    #[error("at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("name `{0}` is already taken")]
    NameCollision(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PRTerm {
    Zero(usize),
    Succ,
    Proj { i: usize, n: usize },
    Comp(Box<PRTerm>, Vec<PRTerm>),
    Rec(Box<PRTerm>, Box<PRTerm>),
}

impl PRTerm {
    pub fn zero(arity: usize) -> Self {
        PRTerm::Zero(arity)
    }

    pub fn proj(i: usize, n: usize) -> Result<Self, PrError> {
        if i == 0 || i > n {
            return Err(PrError::InvalidProjection { i, n });
        }
        Ok(PRTerm::Proj { i, n })
    }

    pub fn comp(h: PRTerm, gs: Vec<PRTerm>) -> Result<Self, PrError> {
        let Some(m) = gs.first().map(PRTerm::arity) else {
            return Err(PrError::Composition("no inner functions".into()));
        };
        if h.arity() != gs.len() {
            return Err(PrError::Composition(format!(
                "outer function takes {} arguments but {} inner functions are given",
                h.arity(),
                gs.len()
            )));
        }
        if let Some(g) = gs.iter().find(|g| g.arity() != m) {
            return Err(PrError::Composition(format!(
                "inner functions disagree on arity ({m} and {})",
                g.arity()
            )));
        }
        Ok(PRTerm::Comp(Box::new(h), gs))
    }

    pub fn rec(h: PRTerm, g: PRTerm) -> Result<Self, PrError> {
        if g.arity() != h.arity() + 2 {
            return Err(PrError::Recursion(format!(
                "step function must take {} arguments, takes {}",
                h.arity() + 2,
                g.arity()
            )));
        }
        Ok(PRTerm::Rec(Box::new(h), Box::new(g)))
    }

    pub fn arity(&self) -> usize {
        match self {
            PRTerm::Zero(n) => *n,
            PRTerm::Succ => 1,
            PRTerm::Proj { n, .. } => *n,
            PRTerm::Comp(_, gs) => gs[0].arity(),
            PRTerm::Rec(h, _) => h.arity() + 1,
        }
    }

    pub fn parse(s: &str) -> Result<Self, PrError> {
        let tokens = tokenize(s);
        let mut at = 0;
        let t = parse_sexp(&tokens, &mut at)?;
        if let Some(&(pos, _)) = tokens.get(at) {
            return Err(PrError::Parse {
                pos,
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(t)
    }
}

impl fmt::Display for PRTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PRTerm::Zero(1) => f.write_str("z"),
            PRTerm::Zero(n) => write!(f, "(z {n})"),
            PRTerm::Succ => f.write_str("s"),
            PRTerm::Proj { i, n } => write!(f, "(p {i} {n})"),
            PRTerm::Comp(h, gs) => {
                write!(f, "(comp {h}")?;
                for g in gs {
                    write!(f, " {g}")?;
                }
                f.write_str(")")
            }
            PRTerm::Rec(h, g) => write!(f, "(rec {h} {g})"),
        }
    }
}

impl FromStr for PRTerm {
    type Err = PrError;

    fn from_str(s: &str) -> Result<Self, PrError> {
        PRTerm::parse(s)
    }
}

fn tokenize(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    for (line_start, line) in s.split_inclusive('\n').scan(0, |off, l| {
        let start = *off;
        *off += l.len();
        Some((start, l))
    }) {
        let code = line.split(';').next().unwrap();
        let mut i = 0;
        let bytes = code.as_bytes();
        while i < bytes.len() {
            match bytes[i] {
                b'(' | b')' => {
                    out.push((line_start + i, &code[i..i + 1]));
                    i += 1;
                }
                c if c.is_ascii_whitespace() => i += 1,
                _ => {
                    let end = code[i..]
                        .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                        .map_or(code.len(), |e| i + e);
                    out.push((line_start + i, &code[i..end]));
                    i = end;
                }
            }
        }
    }
    out
}

fn parse_sexp(tokens: &[(usize, &str)], at: &mut usize) -> Result<PRTerm, PrError> {
    let end_pos = tokens.last().map_or(0, |&(p, t)| p + t.len());
    let err = |pos: usize, msg: &str| PrError::Parse { pos, msg: msg.into() };
    let &(pos, tok) = tokens.get(*at).ok_or_else(|| err(end_pos, "unexpected end of input"))?;
    *at += 1;
    match tok {
        "z" => return Ok(PRTerm::Zero(1)),
        "s" => return Ok(PRTerm::Succ),
        "(" => {}
        _ => return Err(err(pos, "expected `z`, `s` or `(`")),
    }
    let &(hpos, head) = tokens.get(*at).ok_or_else(|| err(end_pos, "unexpected end of input"))?;
    *at += 1;
    let number = |at: &mut usize| -> Result<usize, PrError> {
        let &(p, t) = tokens.get(*at).ok_or_else(|| err(end_pos, "expected a number"))?;
        *at += 1;
        t.parse().map_err(|_| err(p, "expected a number"))
    };
    let close = |at: &mut usize| -> Result<(), PrError> {
        match tokens.get(*at) {
            Some(&(_, ")")) => {
                *at += 1;
                Ok(())
            }
            Some(&(p, _)) => Err(err(p, "expected `)`")),
            None => Err(err(end_pos, "expected `)`")),
        }
    };
    let t = match head {
        "z" => PRTerm::Zero(number(at)?),
        "p" => {
            let i = number(at)?;
            PRTerm::proj(i, number(at)?)?
        }
        "comp" => {
            let h = parse_sexp(tokens, at)?;
            let mut gs = Vec::new();
            while !matches!(tokens.get(*at), Some(&(_, ")")) | None) {
                gs.push(parse_sexp(tokens, at)?);
            }
            PRTerm::comp(h, gs)?
        }
        "rec" => {
            let h = parse_sexp(tokens, at)?;
            PRTerm::rec(h, parse_sexp(tokens, at)?)?
        }
        _ => return Err(err(hpos, "expected `z`, `p`, `comp` or `rec`")),
    };
    close(at)?;
    Ok(t)
}

/// Reference semantics.
pub fn eval_pr(t: &PRTerm, args: &[Nat]) -> Result<Nat, PrError> {
    if args.len() != t.arity() {
        return Err(PrError::ArityMismatch {
            expected: t.arity(),
            found: args.len(),
        });
    }
    Ok(match t {
        PRTerm::Zero(_) => Nat::zero(),
        PRTerm::Succ => &args[0] + 1u32,
        PRTerm::Proj { i, .. } => args[i - 1].clone(),
        PRTerm::Comp(h, gs) => {
            let inner = gs.iter().map(|g| eval_pr(g, args)).collect::<Result<Vec<_>, _>>()?;
            eval_pr(h, &inner)?
        }
        PRTerm::Rec(h, g) => {
            let (y, xs) = args.split_first().unwrap();
            let mut acc = eval_pr(h, xs)?;
            let mut i = Nat::zero();
            let mut g_args = Vec::with_capacity(args.len() + 1);
            while &i < y {
                g_args.clear();
                g_args.push(i.clone());
                g_args.push(acc);
                g_args.extend_from_slice(xs);
                acc = eval_pr(g, &g_args)?;
                i += Nat::one();
            }
            acc
        }
    })
}

/// A program computing a term, with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledUnit {
    pub program: Program,
    pub invariant: TransitionInvariant,
    pub result_var: String,
    pub input_vars: Vec<String>,
}

impl CompiledUnit {
    pub fn initial_state(&self, args: &[Nat]) -> Result<State, PrError> {
        if args.len() != self.input_vars.len() {
            return Err(PrError::ArityMismatch {
                expected: self.input_vars.len(),
                found: args.len(),
            });
        }
        let inputs: Vec<(&str, Nat)> = self
            .input_vars
            .iter()
            .map(String::as_str)
            .zip(args.iter().cloned())
            .collect();
        Ok(self.program.initial_state(&inputs)?)
    }

    /// The trace from `args` and the value of the result variable at its
    /// final state.
    pub fn run(&self, args: &[Nat], max_steps: u64) -> Result<(Vec<State>, Nat), PrError> {
        let trace = run_trace(&self.program, &self.initial_state(args)?, max_steps)?;
        let result = self
            .program
            .value(trace.last().unwrap(), &self.result_var)
            .expect("result variable is declared")
            .clone();
        Ok((trace, result))
    }

    pub fn to_json(&self) -> Result<Value, PrError> {
        Ok(serde_json::json!({
            "program": self.program.to_string(),
            "invariant": self.invariant.to_json()?,
            "result_var": self.result_var,
            "input_vars": self.input_vars,
        }))
    }

    pub fn from_json(v: &Value) -> Result<Self, PrError> {
        let bad = |m: &str| PrError::Term(TermError::Serialization(m.into()));
        let program = Program::parse(
            v.get("program")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("unit needs a `program` string"))?,
        )?;
        let invariant = TransitionInvariant::from_json(v.get("invariant").ok_or_else(|| bad("unit needs an `invariant`"))?)?;
        let result_var = v
            .get("result_var")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("unit needs a `result_var`"))?
            .to_string();
        let input_vars: Vec<String> = serde_json::from_value(v.get("input_vars").cloned().unwrap_or(Value::Null))
            .map_err(|e| bad(&format!("`input_vars`: {e}")))?;
        for name in input_vars.iter().chain(std::iter::once(&result_var)) {
            if program.var_index(name).is_none() {
                return Err(TermError::UnknownVariable(name.clone()).into());
            }
        }
        Ok(CompiledUnit {
            program,
            invariant,
            result_var,
            input_vars,
        })
    }
}

/// The commands `p_x1 := a1; …; p_xn := an; CODE; out := p_r` calling
/// `callee` with every callee variable renamed under `prefix`.
#[derive(Clone, Debug)]
pub struct Splice {
    pub stmts: Vec<Stmt>,
    /// Callee variables after renaming, in callee order.
    pub declared: Vec<String>,
    /// Number of locations before the callee code starts.
    pub code_offset: Loc,
}

impl Splice {
    pub fn rename(prefix: &str) -> impl Fn(&str) -> String + '_ {
        move |v| format!("{prefix}{v}")
    }
}

/// See [`Splice`]. `taken` holds the caller's names; any renamed callee
/// name that is already taken, or an `out` that the callee would shadow, is
/// a [`PrError::NameCollision`].
pub fn splice_call(
    callee: &CompiledUnit,
    actuals: &[String],
    out: &str,
    prefix: &str,
    taken: &BTreeSet<String>,
) -> Result<Splice, PrError> {
    if actuals.len() != callee.input_vars.len() {
        return Err(PrError::ArityMismatch {
            expected: callee.input_vars.len(),
            found: actuals.len(),
        });
    }
    let rename = Splice::rename(prefix);
    let declared: Vec<String> = callee.program.vars().iter().map(|v| rename(v)).collect();
    if let Some(clash) = declared.iter().find(|v| taken.contains(*v) || v.as_str() == out) {
        return Err(PrError::NameCollision(clash.clone()));
    }
    let mut stmts: Vec<Stmt> = callee
        .input_vars
        .iter()
        .zip(actuals)
        .map(|(formal, actual)| Stmt::copy(&rename(formal), actual))
        .collect();
    let code_offset = stmts.len();
    stmts.push(Stmt::Block(
        callee
            .program
            .named_instrs()
            .iter()
            .map(|i| i.map_vars(&mut |v: &String| rename(v)))
            .collect(),
    ));
    stmts.push(Stmt::copy(out, &rename(&callee.result_var)));
    Ok(Splice {
        stmts,
        declared,
        code_offset,
    })
}

fn all_locations(len: Loc) -> BTreeSet<Loc> {
    (0..=len).collect()
}

fn atom(s: &str) -> Atom {
    Atom::parse(s).expect("compiler atoms are well formed")
}

/// `loc < loc'` over the whole program, rank `len - loc`.
fn prog_relation(len: Loc) -> RankedRelation {
    RankedRelation::constrained(
        "prog",
        Some(all_locations(len)),
        Some(all_locations(len)),
        vec![atom("loc < loc'")],
        Term::minus(Term::nat(len as u64), Term::Loc),
    )
}

fn lift_all(
    inv: &TransitionInvariant,
    prefix: &str,
    offset: Loc,
    rename: &dyn Fn(&str) -> String,
    extra: &[Atom],
) -> Result<Vec<RankedRelation>, PrError> {
    inv.relations()
        .iter()
        .map(|r| {
            r.relocated(format!("{prefix}{}", r.name), offset, rename, extra.to_vec())
                .map_err(PrError::from)
        })
        .collect()
}

fn inputs(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn base_unit(arity: usize, expr: Expr<String>) -> Result<CompiledUnit, PrError> {
    let input_vars = inputs(arity);
    let mut vars = input_vars.clone();
    vars.push("r".into());
    let program = Program::from_stmts(vars, &[Stmt::assign("r", expr)])?;
    let invariant = TransitionInvariant::new(vec![prog_relation(program.len())])?;
    Ok(CompiledUnit {
        program,
        invariant,
        result_var: "r".into(),
        input_vars,
    })
}

struct Layout {
    vars: Vec<String>,
    taken: BTreeSet<String>,
    stmts: Vec<Stmt>,
}

impl Layout {
    fn new(vars: Vec<String>) -> Self {
        Layout {
            taken: vars.iter().cloned().collect(),
            vars,
            stmts: Vec::new(),
        }
    }

    fn here(&self) -> Loc {
        crate::termlang::program::block_size(&self.stmts)
    }

    fn declare(&mut self, names: &[String]) {
        for n in names {
            self.taken.insert(n.clone());
            self.vars.push(n.clone());
        }
    }

    /// Appends a call and returns the location where the callee code starts.
    fn call(&mut self, callee: &CompiledUnit, actuals: &[String], out: &str, prefix: &str) -> Result<Loc, PrError> {
        let sp = splice_call(callee, actuals, out, prefix, &self.taken)?;
        self.declare(&sp.declared);
        let start = self.here() + sp.code_offset;
        self.stmts.extend(sp.stmts);
        Ok(start)
    }
}

/// Compiles `t` into a program and a transition invariant whose relations
/// all carry rank certificates.
pub fn compile(t: &PRTerm) -> Result<CompiledUnit, PrError> {
    match t {
        PRTerm::Zero(n) => base_unit(*n, Expr::Const(Nat::zero())),
        PRTerm::Succ => base_unit(1, Expr::Succ("x1".into())),
        PRTerm::Proj { i, n } => base_unit(*n, Expr::Var(format!("x{i}"))),
        PRTerm::Comp(h, gs) => compile_comp(h, gs),
        PRTerm::Rec(h, g) => compile_rec(h, g),
    }
}

fn compile_comp(h: &PRTerm, gs: &[PRTerm]) -> Result<CompiledUnit, PrError> {
    let q = gs.len();
    let input_vars = inputs(gs[0].arity());
    let ys: Vec<String> = (1..=q).map(|i| format!("y{i}")).collect();
    let mut own = input_vars.clone();
    own.push("a".into());
    own.extend(ys.iter().cloned());
    own.push("r".into());
    let mut layout = Layout::new(own);

    let mut lifted = Vec::new();
    layout.stmts.push(Stmt::constant("a", 1));
    for (i, g) in gs.iter().enumerate() {
        if i > 0 {
            layout.stmts.push(Stmt::incr("a"));
        }
        let unit = compile(g)?;
        let prefix = format!("c{i}_");
        let start = layout.call(&unit, &input_vars, &ys[i], &prefix)?;
        let phase = [atom(&format!("a = {}", i + 1)), atom(&format!("a' = {}", i + 1))];
        lifted.extend(lift_all(&unit.invariant, &prefix, start, &Splice::rename(&prefix), &phase)?);
    }
    layout.stmts.push(Stmt::incr("a"));
    let unit = compile(h)?;
    let prefix = format!("c{q}_");
    let start = layout.call(&unit, &ys, "r", &prefix)?;
    let phase = [atom(&format!("a = {}", q + 1)), atom(&format!("a' = {}", q + 1))];
    lifted.extend(lift_all(&unit.invariant, &prefix, start, &Splice::rename(&prefix), &phase)?);

    let program = Program::from_stmts(layout.vars, &layout.stmts)?;
    let len = program.len();
    let mut relations = vec![
        prog_relation(len),
        RankedRelation::constrained(
            "phase",
            Some(all_locations(len)),
            Some(all_locations(len)),
            vec![
                atom(&format!("a < {}", q + 1)),
                atom("a < a'"),
                atom(&format!("a' < {}", q + 2)),
            ],
            Term::minus(Term::nat(q as u64 + 2), Term::var("a")),
        ),
    ];
    relations.extend(lifted);
    Ok(CompiledUnit {
        program,
        invariant: TransitionInvariant::new(relations)?,
        result_var: "r".into(),
        input_vars,
    })
}

fn compile_rec(h: &PRTerm, g: &PRTerm) -> Result<CompiledUnit, PrError> {
    let n = h.arity();
    let xs = inputs(n);
    let copies: Vec<String> = (1..=n).map(|i| format!("z{i}")).collect();
    let mut input_vars = vec!["y".to_string()];
    input_vars.extend(xs.iter().cloned());
    let mut own = input_vars.clone();
    own.extend(["z".to_string(), "w".to_string()]);
    own.extend(copies.iter().cloned());
    let mut layout = Layout::new(own);

    layout.stmts.push(Stmt::constant("z", 0));
    let h_unit = compile(h)?;
    let h_start = layout.call(&h_unit, &xs, "w", "c0_")?;
    let h_rel = lift_all(
        &h_unit.invariant,
        "c0_",
        h_start,
        &Splice::rename("c0_"),
        &[atom("z = 0"), atom("z' = 0")],
    )?;
    for (c, x) in copies.iter().zip(&xs) {
        layout.stmts.push(Stmt::copy(c, x));
    }

    // The step function reads the counter, the accumulator and the copied
    // parameters in place; everything else it owns is renamed.
    let g_unit = compile(g)?;
    let mut subst: HashMap<String, String> = HashMap::new();
    let mut g_actuals = vec!["z".to_string(), "w".to_string()];
    g_actuals.extend(copies.iter().cloned());
    for (formal, actual) in g_unit.input_vars.iter().zip(&g_actuals) {
        subst.insert(formal.clone(), actual.clone());
    }
    let g_rename = |v: &str| subst.get(v).cloned().unwrap_or_else(|| format!("c1_{v}"));
    let g_own: Vec<String> = g_unit
        .program
        .vars()
        .iter()
        .filter(|v| !subst.contains_key(*v))
        .map(|v| g_rename(v))
        .collect();
    if let Some(clash) = g_own.iter().find(|v| layout.taken.contains(*v)) {
        return Err(PrError::NameCollision(clash.clone()));
    }
    layout.declare(&g_own);
    let g_code: Vec<_> = g_unit
        .program
        .named_instrs()
        .iter()
        .map(|i| i.map_vars(&mut |v: &String| g_rename(v)))
        .collect();
    let g_len = g_code.len();
    let head = layout.here();
    let g_start = head + 1;
    layout.stmts.push(Stmt::While(
        Cond::var_lt("z", "y"),
        vec![
            Stmt::Block(g_code),
            Stmt::copy("w", &g_rename(&g_unit.result_var)),
            Stmt::incr("z"),
        ],
    ));
    let loop_end = g_start + g_len + 1;
    let same_round = [atom("z' = z"), atom("y' = y"), atom("z < y")];
    let g_rel = lift_all(&g_unit.invariant, "c1_", g_start, &g_rename, &same_round)?;

    let program = Program::from_stmts(layout.vars, &layout.stmts)?;
    let loop_region: BTreeSet<Loc> = (head..=loop_end).collect();
    let mut relations = vec![prog_relation(program.len())];
    relations.extend(h_rel);
    relations.extend(g_rel);
    relations.push(RankedRelation::constrained(
        "rounds",
        Some(loop_region.clone()),
        Some(loop_region),
        vec![atom("z < z'"), atom("y' = y"), atom("z < y")],
        Term::minus(Term::var("y"), Term::var("z")),
    ));
    Ok(CompiledUnit {
        program,
        invariant: TransitionInvariant::new(relations)?,
        result_var: "w".into(),
        input_vars,
    })
}

/// Terms used in tests, the acceptance suite and the CLI examples.
pub mod corpus {
    use super::PRTerm;

    fn parse(s: &str) -> PRTerm {
        PRTerm::parse(s).expect("corpus terms are well formed")
    }

    pub const ADD: &str = "(rec (p 1 1) (comp s (p 2 3)))";
    pub const PRED: &str = "(rec (z 0) (p 1 2))";

    /// `add(y, x) = x + y`
    pub fn add() -> PRTerm {
        parse(ADD)
    }

    /// `mult(y, x) = x · y`
    pub fn mult() -> PRTerm {
        parse(&format!("(rec z (comp {ADD} (p 2 3) (p 3 3)))"))
    }

    /// `pred(y) = y ∸ 1`
    pub fn pred() -> PRTerm {
        parse(PRED)
    }

    /// `sub(a, b) = a ∸ b`
    pub fn sub() -> PRTerm {
        parse(&format!("(comp (rec (p 1 1) (comp {PRED} (p 2 3))) (p 2 2) (p 1 2))"))
    }

    pub fn all() -> Vec<(&'static str, PRTerm)> {
        vec![("add", add()), ("mult", mult()), ("pred", pred()), ("sub", sub())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::termlang::{check_invariant, Instr};
    use proptest::prelude::*;

    fn nats(xs: &[u64]) -> Vec<Nat> {
        xs.iter().map(|&x| Nat::from(x)).collect()
    }

    fn all_inputs(arity: usize, max: u64) -> Vec<Vec<u64>> {
        (0..arity).fold(vec![vec![]], |acc, _| {
            acc.into_iter()
                .flat_map(|v| {
                    (0..=max).map(move |x| {
                        let mut v = v.clone();
                        v.push(x);
                        v
                    })
                })
                .collect()
        })
    }

    #[test]
    fn evaluation() {
        assert_eq!(eval_pr(&PRTerm::zero(1), &nats(&[9])).unwrap(), Nat::zero());
        assert_eq!(eval_pr(&PRTerm::proj(2, 3).unwrap(), &nats(&[4, 7, 1])).unwrap(), Nat::from(7u8));
        assert_eq!(eval_pr(&corpus::add(), &nats(&[2, 3])).unwrap(), Nat::from(5u8));
        assert_eq!(eval_pr(&corpus::mult(), &nats(&[3, 4])).unwrap(), Nat::from(12u8));
        assert_eq!(eval_pr(&corpus::pred(), &nats(&[0])).unwrap(), Nat::zero());
        assert_eq!(eval_pr(&corpus::pred(), &nats(&[4])).unwrap(), Nat::from(3u8));
        assert_eq!(eval_pr(&corpus::sub(), &nats(&[5, 2])).unwrap(), Nat::from(3u8));
        assert_eq!(eval_pr(&corpus::sub(), &nats(&[2, 5])).unwrap(), Nat::zero());
        assert!(matches!(
            eval_pr(&corpus::add(), &nats(&[1])),
            Err(PrError::ArityMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn well_formedness() {
        assert!(PRTerm::proj(0, 2).is_err());
        assert!(PRTerm::proj(3, 2).is_err());
        assert!(PRTerm::comp(PRTerm::Succ, vec![]).is_err());
        assert!(PRTerm::comp(PRTerm::Succ, vec![PRTerm::Succ, PRTerm::Succ]).is_err());
        assert!(PRTerm::comp(PRTerm::proj(1, 2).unwrap(), vec![PRTerm::Succ, PRTerm::zero(2)]).is_err());
        assert!(PRTerm::rec(PRTerm::zero(1), PRTerm::Succ).is_err());
        assert_eq!(corpus::add().arity(), 2);
        assert_eq!(corpus::pred().arity(), 1);
    }

    #[test]
    fn dsl_round_trip() {
        for (_, t) in corpus::all() {
            assert_eq!(PRTerm::parse(&t.to_string()).unwrap(), t);
        }
        assert_eq!(corpus::add().to_string(), "(rec (p 1 1) (comp s (p 2 3)))");
        let spaced = "; addition\n( rec (p 1 1)\n  (comp s (p 2 3)) ) ; done\n";
        assert_eq!(PRTerm::parse(spaced).unwrap(), corpus::add());
        assert_eq!(PRTerm::parse("(z 1)").unwrap().to_string(), "z");
        for bad in ["", "(", "(p 1)", "(p 2 1)", "(q 1 1)", "(rec z s)", "s s", "(comp s)", "(z x)"] {
            assert!(PRTerm::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn splicing() {
        let taken: BTreeSet<String> = ["out".to_string(), "a".to_string()].into();
        let zero = compile(&PRTerm::zero(0)).unwrap();
        let sp = splice_call(&zero, &[], "out", "c0_", &taken).unwrap();
        let mut vars: Vec<String> = taken.iter().cloned().collect();
        vars.extend(sp.declared.iter().cloned());
        let p = Program::from_stmts(vars.clone(), &sp.stmts).unwrap();
        assert_eq!(p.to_string(), "vars a out c0_r\n0: c0_r := 0 goto 1\n1: out := c0_r goto 2\n2: end\n");

        let succ = compile(&PRTerm::Succ).unwrap();
        let sp = splice_call(&succ, &["a".into()], "out", "c0_", &taken).unwrap();
        let mut vars: Vec<String> = taken.iter().cloned().collect();
        vars.extend(sp.declared.iter().cloned());
        let p = Program::from_stmts(vars, &sp.stmts).unwrap();
        assert_eq!(
            p.to_string(),
            "vars a out c0_x1 c0_r\n0: c0_x1 := a goto 1\n1: c0_r := c0_x1+1 goto 2\n2: out := c0_r goto 3\n3: end\n"
        );
        assert_eq!(sp.code_offset, 1);

        let clash: BTreeSet<String> = ["c0_r".to_string()].into();
        assert!(matches!(
            splice_call(&succ, &["a".into()], "out", "c0_", &clash),
            Err(PrError::NameCollision(n)) if n == "c0_r"
        ));
        assert!(matches!(
            splice_call(&succ, &[], "out", "c0_", &taken),
            Err(PrError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn base_units() {
        let z = compile(&PRTerm::zero(1)).unwrap();
        assert_eq!(z.run(&nats(&[9]), 10).unwrap().1, Nat::zero());
        assert_eq!(z.invariant.k(), 1);
        assert!(check_invariant(&z.program, &z.initial_state(&nats(&[9])).unwrap(), &z.invariant, 10)
            .unwrap()
            .passed());
    }

    #[test]
    fn add_and_mult() {
        let add = compile(&corpus::add()).unwrap();
        let (trace, w) = add.run(&nats(&[2, 3]), 10_000).unwrap();
        assert_eq!(w, Nat::from(5u8));
        assert_eq!(add.result_var, "w");
        assert_eq!(add.program.value(trace.last().unwrap(), "w"), Some(&Nat::from(5u8)));
        assert_eq!(add.invariant.k(), 7);
        let r = check_invariant(&add.program, &add.initial_state(&nats(&[2, 3])).unwrap(), &add.invariant, 10_000).unwrap();
        assert!(r.passed(), "{:?}", r.violations);

        let rounds = add.invariant.relations().iter().position(|r| r.name == "rounds").unwrap();
        let broken = add.invariant.with_rank(rounds, Term::nat(0));
        let r = check_invariant(&add.program, &add.initial_state(&nats(&[2, 3])).unwrap(), &broken, 10_000).unwrap();
        assert!(!r.passed());

        let mult = compile(&corpus::mult()).unwrap();
        assert_eq!(mult.run(&nats(&[2, 2]), 10_000).unwrap().1, Nat::from(4u8));
        assert_eq!(mult.invariant.k(), 14);
        let r = check_invariant(&mult.program, &mult.initial_state(&nats(&[2, 2])).unwrap(), &mult.invariant, 10_000).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn compiled_code_never_writes_inputs() {
        for (_, t) in corpus::all() {
            let u = compile(&t).unwrap();
            for ins in u.program.instrs() {
                if let Instr::Assign { var, .. } = ins {
                    assert!(!u.input_vars.contains(&u.program.vars()[*var]));
                }
            }
        }
    }

    #[test]
    fn unit_json_round_trip() {
        let u = compile(&corpus::add()).unwrap();
        let j = u.to_json().unwrap();
        let text = serde_json::to_string(&j).unwrap();
        let back = CompiledUnit::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, u);
        assert_eq!(serde_json::to_string(&back.to_json().unwrap()).unwrap(), text);
    }

    #[test]
    fn corpus_matches_oracle_exhaustively() {
        for (name, t) in corpus::all() {
            let u = compile(&t).unwrap();
            for args in all_inputs(t.arity(), 5) {
                let args = nats(&args);
                let expected = eval_pr(&t, &args).unwrap();
                let (_, got) = u.run(&args, 100_000).unwrap();
                assert_eq!(got, expected, "{name}{args:?}");
            }
        }
    }

    fn arb_term() -> impl Strategy<Value = PRTerm> {
        let leaf = prop_oneof![
            (0usize..3).prop_map(PRTerm::zero),
            Just(PRTerm::Succ),
            (1usize..4).prop_flat_map(|n| (1..=n).prop_map(move |i| PRTerm::proj(i, n).unwrap())),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                (inner.clone(), proptest::collection::vec(inner.clone(), 1..3)).prop_filter_map(
                    "arity mismatch",
                    |(h, gs)| PRTerm::comp(h, gs).ok()
                ),
                (inner.clone(), inner).prop_filter_map("arity mismatch", |(h, g)| PRTerm::rec(h, g).ok()),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_terms_compile_correctly(t in arb_term(), seed in proptest::collection::vec(0u64..3, 4)) {
            let args = nats(&seed[..t.arity().min(4)]);
            prop_assume!(args.len() == t.arity());
            let expected = eval_pr(&t, &args).unwrap();
            prop_assume!(expected < Nat::from(50u8));
            let u = compile(&t).unwrap();
            let s0 = u.initial_state(&args).unwrap();
            let run = u.run(&args, 20_000);
            prop_assume!(!matches!(run, Err(PrError::Term(TermError::BudgetExceeded { .. }))));
            prop_assert_eq!(run.unwrap().1, expected);
            let r = check_invariant(&u.program, &s0, &u.invariant, 20_000).unwrap();
            prop_assert!(r.passed(), "{} {:?}", t, r.violations);
            prop_assert_eq!(PRTerm::parse(&t.to_string()).unwrap(), t);
        }
    }
}
