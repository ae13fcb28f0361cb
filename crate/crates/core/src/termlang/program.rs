//! Syntax of while-if programs.
//!
//! Programs are written with structured [`Stmt`]s and lowered to a flat list
//! of [`Instr`]s. Location `i` is the `i`-th instruction; the location equal
//! to the number of instructions is the unique final location.
//!
//! Text form:
//!
//! ```text
//! vars x y r
//! 0: r := 0 goto 1
//! 1: if r < x goto 2 else 3
//! 2: r := r+1 goto 1
//! 3: end
//! ```

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::TermError;
use crate::nat::Nat;

pub type Loc = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr<V = usize> {
    Const(Nat),
    Var(V),
    /// `v+1`
    Succ(V),
    /// `v-1`, truncated at zero
    Pred(V),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand<V = usize> {
    Var(V),
    Const(Nat),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
}

impl CmpOp {
    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cond<V = usize> {
    pub lhs: Operand<V>,
    pub op: CmpOp,
    pub rhs: Operand<V>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instr<V = usize> {
    Assign { var: V, expr: Expr<V>, next: Loc },
    Branch { cond: Cond<V>, then: Loc, els: Loc },
}

impl<V> Expr<V> {
    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Expr<W> {
        match self {
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Var(v) => Expr::Var(f(v)),
            Expr::Succ(v) => Expr::Succ(f(v)),
            Expr::Pred(v) => Expr::Pred(f(v)),
        }
    }
}

impl<V> Operand<V> {
    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Operand<W> {
        match self {
            Operand::Var(v) => Operand::Var(f(v)),
            Operand::Const(c) => Operand::Const(c.clone()),
        }
    }
}

impl<V> Cond<V> {
    pub fn new(lhs: Operand<V>, op: CmpOp, rhs: Operand<V>) -> Self {
        Cond { lhs, op, rhs }
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Cond<W> {
        Cond {
            lhs: self.lhs.map_vars(f),
            op: self.op,
            rhs: self.rhs.map_vars(f),
        }
    }
}

impl Cond<String> {
    /// `a < b` over two variables.
    pub fn var_lt(a: &str, b: &str) -> Self {
        Cond::new(Operand::Var(a.into()), CmpOp::Lt, Operand::Var(b.into()))
    }
}

impl<V> Instr<V> {
    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Instr<W> {
        match self {
            Instr::Assign { var, expr, next } => Instr::Assign {
                var: f(var),
                expr: expr.map_vars(f),
                next: *next,
            },
            Instr::Branch { cond, then, els } => Instr::Branch {
                cond: cond.map_vars(f),
                then: *then,
                els: *els,
            },
        }
    }

    pub fn map_targets(&self, f: impl Fn(Loc) -> Loc) -> Instr<V>
    where
        V: Clone,
    {
        match self {
            Instr::Assign { var, expr, next } => Instr::Assign {
                var: var.clone(),
                expr: expr.clone(),
                next: f(*next),
            },
            Instr::Branch { cond, then, els } => Instr::Branch {
                cond: cond.clone(),
                then: f(*then),
                els: f(*els),
            },
        }
    }

    pub fn targets(&self) -> Vec<Loc> {
        match self {
            Instr::Assign { next, .. } => vec![*next],
            Instr::Branch { then, els, .. } => vec![*then, *els],
        }
    }
}

/// Structured commands over variable names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(String, Expr<String>),
    While(Cond<String>, Vec<Stmt>),
    If(Cond<String>, Vec<Stmt>, Vec<Stmt>),
    /// Already-lowered code. Targets are relative to the first instruction
    /// and a target equal to the block length leaves the block.
    Block(Vec<Instr<String>>),
}

impl Stmt {
    pub fn assign(var: &str, expr: Expr<String>) -> Stmt {
        Stmt::Assign(var.into(), expr)
    }

    pub fn copy(dst: &str, src: &str) -> Stmt {
        Stmt::assign(dst, Expr::Var(src.into()))
    }

    pub fn constant(dst: &str, c: u64) -> Stmt {
        Stmt::assign(dst, Expr::Const(Nat::from(c)))
    }

    pub fn incr(var: &str) -> Stmt {
        Stmt::assign(var, Expr::Succ(var.into()))
    }

    /// Number of locations the statement occupies once lowered.
    pub fn size(&self) -> usize {
        match self {
            Stmt::Assign(..) => 1,
            Stmt::While(_, body) => 1 + block_size(body),
            Stmt::If(_, t, e) => 1 + block_size(t) + block_size(e),
            Stmt::Block(instrs) => instrs.len(),
        }
    }
}

pub fn block_size(stmts: &[Stmt]) -> usize {
    stmts.iter().map(Stmt::size).sum()
}

fn lower(stmts: &[Stmt], start: Loc, exit: Loc, out: &mut Vec<Instr<String>>) {
    let mut at = start;
    for (i, s) in stmts.iter().enumerate() {
        debug_assert_eq!(out.len(), at);
        let next = if i + 1 == stmts.len() { exit } else { at + s.size() };
        match s {
            Stmt::Assign(v, e) => out.push(Instr::Assign {
                var: v.clone(),
                expr: e.clone(),
                next,
            }),
            Stmt::While(c, body) => {
                let then = if body.is_empty() { at } else { at + 1 };
                out.push(Instr::Branch {
                    cond: c.clone(),
                    then,
                    els: next,
                });
                lower(body, at + 1, at, out);
            }
            Stmt::If(c, t, e) => {
                let t_start = at + 1;
                let e_start = t_start + block_size(t);
                out.push(Instr::Branch {
                    cond: c.clone(),
                    then: if t.is_empty() { next } else { t_start },
                    els: if e.is_empty() { next } else { e_start },
                });
                lower(t, t_start, next, out);
                lower(e, e_start, next, out);
            }
            Stmt::Block(instrs) => {
                let len = instrs.len();
                for ins in instrs {
                    out.push(ins.map_targets(|t| if t == len { next } else { t + at }));
                }
            }
        }
        at += s.size();
    }
}

/// A validated flat program.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    vars: Vec<String>,
    instrs: Vec<Instr>,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const RESERVED: &[&str] = &["loc", "if", "goto", "else", "end", "vars"];

impl Program {
    /// Checks variable names and jump targets.
    pub fn new(vars: Vec<String>, instrs: Vec<Instr<String>>) -> Result<Self, TermError> {
        let mut index = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if !is_identifier(v) || RESERVED.contains(&v.as_str()) {
                return Err(TermError::InvalidProgram(format!("bad variable name {v:?}")));
            }
            if index.insert(v.clone(), i).is_some() {
                return Err(TermError::InvalidProgram(format!("variable {v} declared twice")));
            }
        }
        let len = instrs.len();
        let mut resolved = Vec::with_capacity(len);
        for (at, ins) in instrs.iter().enumerate() {
            if let Some(t) = ins.targets().into_iter().find(|&t| t > len) {
                return Err(TermError::InvalidProgram(format!(
                    "location {at} jumps to {t}, past the final location {len}"
                )));
            }
            let mut missing = None;
            let r = ins.map_vars(&mut |v: &String| match index.get(v) {
                Some(&i) => i,
                None => {
                    missing.get_or_insert_with(|| v.clone());
                    0
                }
            });
            if let Some(v) = missing {
                return Err(TermError::UnknownVariable(v));
            }
            resolved.push(r);
        }
        Ok(Program {
            vars,
            instrs: resolved,
        })
    }

    pub fn from_stmts(vars: Vec<String>, body: &[Stmt]) -> Result<Self, TermError> {
        let mut out = Vec::new();
        lower(body, 0, block_size(body), &mut out);
        Program::new(vars, out)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// The final location.
    pub fn final_location(&self) -> Loc {
        self.instrs.len()
    }

    pub fn named_instrs(&self) -> Vec<Instr<String>> {
        self.instrs
            .iter()
            .map(|i| i.map_vars(&mut |&v| self.vars[v].clone()))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, TermError> {
        parse_program(text)
    }
}

fn fmt_operand(o: &Operand, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match o {
        Operand::Var(v) => f.write_str(&vars[*v]),
        Operand::Const(c) => write!(f, "{c}"),
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("vars")?;
        for v in &self.vars {
            write!(f, " {v}")?;
        }
        writeln!(f)?;
        for (at, ins) in self.instrs.iter().enumerate() {
            write!(f, "{at}: ")?;
            match ins {
                Instr::Assign { var, expr, next } => {
                    write!(f, "{} := ", self.vars[*var])?;
                    match expr {
                        Expr::Const(c) => write!(f, "{c}")?,
                        Expr::Var(v) => f.write_str(&self.vars[*v])?,
                        Expr::Succ(v) => write!(f, "{}+1", self.vars[*v])?,
                        Expr::Pred(v) => write!(f, "{}-1", self.vars[*v])?,
                    }
                    writeln!(f, " goto {next}")?;
                }
                Instr::Branch { cond, then, els } => {
                    f.write_str("if ")?;
                    fmt_operand(&cond.lhs, &self.vars, f)?;
                    write!(f, " {} ", cond.op.symbol())?;
                    fmt_operand(&cond.rhs, &self.vars, f)?;
                    writeln!(f, " goto {then} else {els}")?;
                }
            }
        }
        writeln!(f, "{}: end", self.instrs.len())
    }
}

impl FromStr for Program {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, TermError> {
        parse_program(s)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> TermError {
    TermError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_operand(tok: &str, line: usize) -> Result<Operand<String>, TermError> {
    if let Ok(n) = tok.parse::<Nat>() {
        Ok(Operand::Const(n))
    } else if is_identifier(tok) {
        Ok(Operand::Var(tok.to_string()))
    } else {
        Err(parse_err(line, format!("bad operand {tok:?}")))
    }
}

fn parse_expr(src: &str, line: usize) -> Result<Expr<String>, TermError> {
    let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    let var = |v: &str| {
        if is_identifier(v) {
            Ok(v.to_string())
        } else {
            Err(parse_err(line, format!("bad variable {v:?}")))
        }
    };
    if let Some(v) = s.strip_suffix("+1") {
        return Ok(Expr::Succ(var(v)?));
    }
    if let Some(v) = s.strip_suffix("-1") {
        return Ok(Expr::Pred(var(v)?));
    }
    match parse_operand(&s, line)? {
        Operand::Const(c) => Ok(Expr::Const(c)),
        Operand::Var(v) => Ok(Expr::Var(v)),
    }
}

fn parse_target(tok: Option<&str>, line: usize) -> Result<Loc, TermError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(line, "expected a target location"))
}

fn parse_program(text: &str) -> Result<Program, TermError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n, header) = lines.next().ok_or_else(|| parse_err(1, "empty program"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("vars") {
        return Err(parse_err(n, "expected `vars`"));
    }
    let vars: Vec<String> = words.map(str::to_string).collect();
    let mut instrs = Vec::new();
    let mut ended = false;
    for (n, l) in lines {
        if ended {
            return Err(parse_err(n, "text after `end`"));
        }
        let (label, body) = l
            .split_once(':')
            .filter(|(_, b)| !b.starts_with('='))
            .ok_or_else(|| parse_err(n, "expected `<location>:`"))?;
        let at: Loc = label
            .trim()
            .parse()
            .map_err(|_| parse_err(n, "bad location label"))?;
        if at != instrs.len() {
            return Err(parse_err(n, format!("expected location {}", instrs.len())));
        }
        let body = body.trim();
        if body == "end" {
            ended = true;
            continue;
        }
        if let Some(rest) = body.strip_prefix("if ") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 7 || toks[3] != "goto" || toks[5] != "else" {
                return Err(parse_err(n, "expected `if a op b goto t else e`"));
            }
            let op = match toks[1] {
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                "=" => CmpOp::Eq,
                o => return Err(parse_err(n, format!("unknown comparison {o:?}"))),
            };
            instrs.push(Instr::Branch {
                cond: Cond::new(parse_operand(toks[0], n)?, op, parse_operand(toks[2], n)?),
                then: parse_target(Some(toks[4]), n)?,
                els: parse_target(Some(toks[6]), n)?,
            });
            continue;
        }
        let (lhs, rhs) = body
            .split_once(":=")
            .ok_or_else(|| parse_err(n, "expected `x := e goto t` or `if`"))?;
        let (expr, target) = rhs
            .rsplit_once("goto")
            .ok_or_else(|| parse_err(n, "missing `goto`"))?;
        let var = lhs.trim();
        if !is_identifier(var) {
            return Err(parse_err(n, format!("bad variable {var:?}")));
        }
        instrs.push(Instr::Assign {
            var: var.to_string(),
            expr: parse_expr(expr, n)?,
            next: parse_target(Some(target.trim()), n)?,
        });
    }
    if !ended {
        return Err(parse_err(text.lines().count(), "missing final `end`"));
    }
    Program::new(vars, instrs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counter() -> Program {
        let body = vec![
            Stmt::constant("r", 0),
            Stmt::While(Cond::var_lt("r", "x"), vec![Stmt::incr("r")]),
        ];
        Program::from_stmts(vec!["x".into(), "r".into()], &body).unwrap()
    }

    #[test]
    fn lowering_layout() {
        let p = counter();
        assert_eq!(p.len(), 3);
        assert_eq!(
            p.to_string(),
            "vars x r\n0: r := 0 goto 1\n1: if r < x goto 2 else 3\n2: r := r+1 goto 1\n3: end\n"
        );
    }

    #[test]
    fn if_and_blocks_relocate() {
        let block = vec![
            Instr::Branch {
                cond: Cond::var_lt("x", "r"),
                then: 1,
                els: 2,
            },
            Instr::Assign {
                var: "r".into(),
                expr: Expr::Pred("r".into()),
                next: 2,
            },
        ];
        let body = vec![
            Stmt::If(
                Cond::new(Operand::Var("x".into()), CmpOp::Eq, Operand::Const(Nat::from(0u8))),
                vec![Stmt::constant("r", 7)],
                vec![],
            ),
            Stmt::Block(block),
            Stmt::copy("x", "r"),
        ];
        let p = Program::from_stmts(vec!["x".into(), "r".into()], &body).unwrap();
        assert_eq!(
            p.to_string(),
            "vars x r\n0: if x = 0 goto 1 else 2\n1: r := 7 goto 2\n2: if x < r goto 3 else 4\n3: r := r-1 goto 4\n4: x := r goto 5\n5: end\n"
        );
    }

    #[test]
    fn text_round_trip() {
        let p = counter();
        assert_eq!(Program::parse(&p.to_string()).unwrap(), p);
        let spaced = "# comment\nvars x r\n\n0: r := 0 goto 1\n1: if r < x goto 2 else 3\n2: r := r + 1 goto 1\n3: end\n";
        assert_eq!(Program::parse(spaced).unwrap(), p);
    }

    #[test]
    fn rejects_bad_programs() {
        assert!(matches!(
            Program::parse("vars x\n0: y := 1 goto 1\n1: end"),
            Err(TermError::UnknownVariable(v)) if v == "y"
        ));
        assert!(Program::parse("vars x\n0: x := 1 goto 5\n1: end").is_err());
        assert!(Program::parse("vars x\n1: x := 1 goto 1\n1: end").is_err());
        assert!(Program::parse("vars x\n0: x := 1 goto 1").is_err());
        assert!(Program::parse("vars x x\n0: end").is_err());
        assert!(Program::parse("vars loc\n0: end").is_err());
        assert!(Program::parse("vars x\n0: if x << 1 goto 1 else 1\n1: end").is_err());
    }
}
