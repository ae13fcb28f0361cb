//! Transition invariants with rank certificates, and their bounded check.
//!
//! A [`RankedRelation`] relates an earlier state to a later one. Its
//! membership is either a constraint (location sets and comparison atoms
//! over unprimed/primed variables) or an opaque predicate; its rank is an
//! arithmetic expression over one state. A relation is certified when the
//! rank strictly drops on every member pair.
//!
//! Expressions use `+`, `-` (truncated), `*`, naturals, variable names,
//! `loc`, and parentheses. Primed names (`x'`, `loc'`) refer to the later
//! state and may only appear in atoms.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use super::interp::{run_prefix, State};
use super::program::{CmpOp, Loc, Program};
use super::TermError;
use crate::erdos::Point;
use crate::nat::Nat;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Nat(Nat),
    Var(String),
    PostVar(String),
    Loc,
    PostLoc,
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
}

impl Term {
    pub fn nat(n: u64) -> Term {
        Term::Nat(Nat::from(n))
    }

    pub fn var(v: &str) -> Term {
        Term::Var(v.into())
    }

    pub fn post(v: &str) -> Term {
        Term::PostVar(v.into())
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn minus(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn times(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn mentions_post(&self) -> bool {
        match self {
            Term::PostVar(_) | Term::PostLoc => true,
            Term::Nat(_) | Term::Var(_) | Term::Loc => false,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => a.mentions_post() || b.mentions_post(),
        }
    }

    pub fn parse(s: &str) -> Result<Term, TermError> {
        let t = parse_term(s, true)?;
        Ok(t)
    }

    /// A single-state expression; primed names are rejected.
    pub fn parse_rank(s: &str) -> Result<Term, TermError> {
        parse_term(s, false)
    }

    /// Renames variables and replaces `loc` by `loc - offset`.
    pub fn relocated(&self, offset: Loc, rename: &dyn Fn(&str) -> String) -> Term {
        let shift = |l: Term| {
            if offset == 0 {
                l
            } else {
                Term::minus(l, Term::nat(offset as u64))
            }
        };
        match self {
            Term::Nat(n) => Term::Nat(n.clone()),
            Term::Var(v) => Term::Var(rename(v)),
            Term::PostVar(v) => Term::PostVar(rename(v)),
            Term::Loc => shift(Term::Loc),
            Term::PostLoc => shift(Term::PostLoc),
            Term::Add(a, b) => Term::plus(a.relocated(offset, rename), b.relocated(offset, rename)),
            Term::Sub(a, b) => Term::minus(a.relocated(offset, rename), b.relocated(offset, rename)),
            Term::Mul(a, b) => Term::times(a.relocated(offset, rename), b.relocated(offset, rename)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Add(..) | Term::Sub(..) => 1,
            Term::Mul(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b, op) = match self {
            Term::Nat(n) => return write!(f, "{n}"),
            Term::Var(v) => return f.write_str(v),
            Term::PostVar(v) => return write!(f, "{v}'"),
            Term::Loc => return f.write_str("loc"),
            Term::PostLoc => return f.write_str("loc'"),
            Term::Add(a, b) => (a, b, "+"),
            Term::Sub(a, b) => (a, b, "-"),
            Term::Mul(a, b) => (a, b, "*"),
        };
        let p = self.precedence();
        if a.precedence() < p {
            write!(f, "({a})")?;
        } else {
            write!(f, "{a}")?;
        }
        write!(f, " {op} ")?;
        if b.precedence() <= p {
            write!(f, "({b})")
        } else {
            write!(f, "{b}")
        }
    }
}

struct TermParser<'a> {
    src: &'a str,
    pos: usize,
    allow_post: bool,
}

impl TermParser<'_> {
    fn err(&self, msg: impl Into<String>) -> TermError {
        TermError::Expression {
            text: self.src.to_string(),
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expr(&mut self) -> Result<Term, TermError> {
        let mut lhs = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if c == '+' { Term::plus(lhs, rhs) } else { Term::minus(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Term, TermError> {
        let mut lhs = self.atom()?;
        while let Some('*') = self.peek() {
            self.pos += 1;
            lhs = Term::times(lhs, self.atom()?);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Term, TermError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let t = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(t)
            }
            Some(c) if c.is_ascii_digit() => {
                let len = self.src[self.pos..]
                    .find(|c: char| !c.is_ascii_digit())
                    .unwrap_or(self.src.len() - self.pos);
                let n = self.src[self.pos..self.pos + len].parse().unwrap();
                self.pos += len;
                Ok(Term::Nat(n))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let len = self.src[self.pos..]
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(self.src.len() - self.pos);
                let name = &self.src[self.pos..self.pos + len];
                self.pos += len;
                let primed = self.src[self.pos..].starts_with('\'');
                if primed {
                    if !self.allow_post {
                        return Err(self.err("primed names are not allowed here"));
                    }
                    self.pos += 1;
                }
                Ok(match (name, primed) {
                    ("loc", false) => Term::Loc,
                    ("loc", true) => Term::PostLoc,
                    (v, false) => Term::Var(v.into()),
                    (v, true) => Term::PostVar(v.into()),
                })
            }
            _ => Err(self.err("expected a number, a name or `(`")),
        }
    }
}

fn parse_term(s: &str, allow_post: bool) -> Result<Term, TermError> {
    let mut p = TermParser {
        src: s,
        pos: 0,
        allow_post,
    };
    let t = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(t)
}

/// `lhs op rhs` over a pair of states.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub lhs: Term,
    pub op: CmpOp,
    pub rhs: Term,
}

impl Atom {
    pub fn new(lhs: Term, op: CmpOp, rhs: Term) -> Self {
        Atom { lhs, op, rhs }
    }

    pub fn parse(s: &str) -> Result<Atom, TermError> {
        let at = s.find(['<', '=']).ok_or_else(|| TermError::Expression {
            text: s.into(),
            pos: 0,
            msg: "expected `<`, `<=` or `=`".into(),
        })?;
        let (op, width) = if s[at..].starts_with("<=") {
            (CmpOp::Le, 2)
        } else if s[at..].starts_with('<') {
            (CmpOp::Lt, 1)
        } else {
            (CmpOp::Eq, 1)
        };
        Ok(Atom::new(
            Term::parse(&s[..at])?,
            op,
            Term::parse(&s[at + width..])?,
        ))
    }

    pub fn relocated(&self, offset: Loc, rename: &dyn Fn(&str) -> String) -> Atom {
        Atom::new(
            self.lhs.relocated(offset, rename),
            self.op,
            self.rhs.relocated(offset, rename),
        )
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

pub type OpaquePredicate = Arc<dyn Fn(&State, &State) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum Membership {
    /// `None` location sets admit every location.
    Constraints {
        pre_locations: Option<BTreeSet<Loc>>,
        post_locations: Option<BTreeSet<Loc>>,
        atoms: Vec<Atom>,
    },
    Opaque(OpaquePredicate),
}

impl fmt::Debug for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Membership::Constraints {
                pre_locations,
                post_locations,
                atoms,
            } => f
                .debug_struct("Constraints")
                .field("pre_locations", pre_locations)
                .field("post_locations", post_locations)
                .field("atoms", &atoms.iter().map(ToString::to_string).collect::<Vec<_>>())
                .finish(),
            Membership::Opaque(_) => f.write_str("Opaque(..)"),
        }
    }
}

impl PartialEq for Membership {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                Membership::Constraints {
                    pre_locations: a,
                    post_locations: b,
                    atoms: c,
                },
                Membership::Constraints {
                    pre_locations: x,
                    post_locations: y,
                    atoms: z,
                },
            ) => a == x && b == y && c == z,
            (Membership::Opaque(f), Membership::Opaque(g)) => Arc::ptr_eq(f, g),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedRelation {
    pub name: String,
    pub membership: Membership,
    pub rank: Term,
}

impl RankedRelation {
    pub fn constrained(
        name: impl Into<String>,
        pre_locations: Option<BTreeSet<Loc>>,
        post_locations: Option<BTreeSet<Loc>>,
        atoms: Vec<Atom>,
        rank: Term,
    ) -> Self {
        RankedRelation {
            name: name.into(),
            membership: Membership::Constraints {
                pre_locations,
                post_locations,
                atoms,
            },
            rank,
        }
    }

    /// No members; rank 0.
    pub fn empty(name: impl Into<String>) -> Self {
        RankedRelation::constrained(name, Some(BTreeSet::new()), Some(BTreeSet::new()), vec![], Term::nat(0))
    }

    pub fn opaque(name: impl Into<String>, pred: OpaquePredicate, rank: Term) -> Self {
        RankedRelation {
            name: name.into(),
            membership: Membership::Opaque(pred),
            rank,
        }
    }

    pub fn with_rank(mut self, rank: Term) -> Self {
        self.rank = rank;
        self
    }

    /// The relation seen from a program that contains this one's code at
    /// `offset` with variables renamed. `extra` atoms are conjoined.
    /// Location sets left open stay open.
    pub fn relocated(
        &self,
        name: impl Into<String>,
        offset: Loc,
        rename: &dyn Fn(&str) -> String,
        extra: Vec<Atom>,
    ) -> Result<Self, TermError> {
        let Membership::Constraints {
            pre_locations,
            post_locations,
            atoms,
        } = &self.membership
        else {
            return Err(TermError::Opaque(self.name.clone()));
        };
        let shift = |s: &Option<BTreeSet<Loc>>| s.as_ref().map(|s| s.iter().map(|l| l + offset).collect());
        let mut atoms: Vec<Atom> = atoms.iter().map(|a| a.relocated(offset, rename)).collect();
        atoms.extend(extra);
        Ok(RankedRelation::constrained(
            name,
            shift(pre_locations),
            shift(post_locations),
            atoms,
            self.rank.relocated(offset, rename),
        ))
    }

    pub fn to_json(&self) -> Result<Value, TermError> {
        let Membership::Constraints {
            pre_locations,
            post_locations,
            atoms,
        } = &self.membership
        else {
            return Err(TermError::Opaque(self.name.clone()));
        };
        Ok(serde_json::json!({
            "name": self.name,
            "pre_locations": pre_locations,
            "post_locations": post_locations,
            "atoms": atoms.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "rank": self.rank.to_string(),
        }))
    }

    pub fn from_json(v: &Value) -> Result<Self, TermError> {
        let bad = |m: &str| TermError::Serialization(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("relation must be an object"))?;
        for key in obj.keys() {
            if !["name", "pre_locations", "post_locations", "atoms", "rank"].contains(&key.as_str()) {
                return Err(bad(&format!("unknown field `{key}`")));
            }
        }
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("relation needs a `name`"))?;
        let locs = |key: &str| -> Result<Option<BTreeSet<Loc>>, TermError> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => serde_json::from_value(v.clone())
                    .map(Some)
                    .map_err(|e| bad(&format!("`{key}`: {e}"))),
            }
        };
        let atoms = obj
            .get("atoms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("relation needs an `atoms` list"))?
            .iter()
            .map(|a| a.as_str().ok_or_else(|| bad("atoms are strings")).and_then(Atom::parse))
            .collect::<Result<Vec<_>, _>>()?;
        let rank = obj
            .get("rank")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("relation needs a `rank` string"))?;
        Ok(RankedRelation::constrained(
            name,
            locs("pre_locations")?,
            locs("post_locations")?,
            atoms,
            Term::parse_rank(rank)?,
        ))
    }
}

/// A nonempty list of ranked relations; its length is the dimension `k`
/// of the analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionInvariant {
    relations: Vec<RankedRelation>,
}

impl TransitionInvariant {
    pub fn new(relations: Vec<RankedRelation>) -> Result<Self, TermError> {
        if relations.is_empty() {
            return Err(TermError::EmptyInvariant);
        }
        Ok(TransitionInvariant { relations })
    }

    pub fn k(&self) -> usize {
        self.relations.len()
    }

    pub fn relations(&self) -> &[RankedRelation] {
        &self.relations
    }

    pub fn into_relations(self) -> Vec<RankedRelation> {
        self.relations
    }

    /// The same invariant with relation `i` given a different rank.
    pub fn with_rank(&self, i: usize, rank: Term) -> Self {
        let mut out = self.clone();
        out.relations[i].rank = rank;
        out
    }

    pub fn to_json(&self) -> Result<Value, TermError> {
        self.relations
            .iter()
            .map(RankedRelation::to_json)
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Array)
    }

    pub fn from_json(v: &Value) -> Result<Self, TermError> {
        let list = v
            .as_array()
            .ok_or_else(|| TermError::Serialization("invariant must be a list".into()))?;
        TransitionInvariant::new(list.iter().map(RankedRelation::from_json).collect::<Result<_, _>>()?)
    }
}

#[derive(Debug)]
enum Resolved {
    Nat(Nat),
    Pre(usize),
    Post(usize),
    Loc,
    PostLoc,
    Add(Box<Resolved>, Box<Resolved>),
    Sub(Box<Resolved>, Box<Resolved>),
    Mul(Box<Resolved>, Box<Resolved>),
}

impl Resolved {
    fn new(t: &Term, p: &Program) -> Result<Resolved, TermError> {
        let var = |v: &str| p.var_index(v).ok_or_else(|| TermError::UnknownVariable(v.into()));
        let pair = |a: &Term, b: &Term| -> Result<(Box<Resolved>, Box<Resolved>), TermError> {
            Ok((Box::new(Resolved::new(a, p)?), Box::new(Resolved::new(b, p)?)))
        };
        Ok(match t {
            Term::Nat(n) => Resolved::Nat(n.clone()),
            Term::Var(v) => Resolved::Pre(var(v)?),
            Term::PostVar(v) => Resolved::Post(var(v)?),
            Term::Loc => Resolved::Loc,
            Term::PostLoc => Resolved::PostLoc,
            Term::Add(a, b) => {
                let (a, b) = pair(a, b)?;
                Resolved::Add(a, b)
            }
            Term::Sub(a, b) => {
                let (a, b) = pair(a, b)?;
                Resolved::Sub(a, b)
            }
            Term::Mul(a, b) => {
                let (a, b) = pair(a, b)?;
                Resolved::Mul(a, b)
            }
        })
    }

    fn eval<'a>(&'a self, pre: &'a State, post: &'a State) -> Cow<'a, Nat> {
        match self {
            Resolved::Nat(n) => Cow::Borrowed(n),
            Resolved::Pre(i) => Cow::Borrowed(&pre.env[*i]),
            Resolved::Post(i) => Cow::Borrowed(&post.env[*i]),
            Resolved::Loc => Cow::Owned(Nat::from(pre.location)),
            Resolved::PostLoc => Cow::Owned(Nat::from(post.location)),
            Resolved::Add(a, b) => Cow::Owned(a.eval(pre, post).as_ref() + b.eval(pre, post).as_ref()),
            Resolved::Sub(a, b) => {
                let (a, b) = (a.eval(pre, post), b.eval(pre, post));
                if a.as_ref() <= b.as_ref() {
                    Cow::Owned(Nat::default())
                } else {
                    Cow::Owned(a.as_ref() - b.as_ref())
                }
            }
            Resolved::Mul(a, b) => Cow::Owned(a.eval(pre, post).as_ref() * b.eval(pre, post).as_ref()),
        }
    }
}

struct ResolvedAtom {
    lhs: Resolved,
    op: CmpOp,
    rhs: Resolved,
}

impl ResolvedAtom {
    fn holds(&self, pre: &State, post: &State) -> bool {
        self.op.holds(&self.lhs.eval(pre, post), &self.rhs.eval(pre, post))
    }
}

enum ResolvedMembership {
    Constraints {
        pre: Option<BTreeSet<Loc>>,
        post: Option<BTreeSet<Loc>>,
        pre_atoms: Vec<ResolvedAtom>,
        pair_atoms: Vec<ResolvedAtom>,
    },
    Opaque(OpaquePredicate),
}

struct ResolvedRelation {
    membership: ResolvedMembership,
    rank: Resolved,
}

/// An invariant bound to the variable layout of one program.
pub(crate) struct ResolvedInvariant {
    relations: Vec<ResolvedRelation>,
}

impl ResolvedInvariant {
    pub(crate) fn new(p: &Program, inv: &TransitionInvariant) -> Result<Self, TermError> {
        let relations = inv
            .relations()
            .iter()
            .map(|r| {
                let membership = match &r.membership {
                    Membership::Opaque(f) => ResolvedMembership::Opaque(f.clone()),
                    Membership::Constraints {
                        pre_locations,
                        post_locations,
                        atoms,
                    } => {
                        let (mut pre_atoms, mut pair_atoms) = (Vec::new(), Vec::new());
                        for a in atoms {
                            let ra = ResolvedAtom {
                                lhs: Resolved::new(&a.lhs, p)?,
                                op: a.op,
                                rhs: Resolved::new(&a.rhs, p)?,
                            };
                            if a.lhs.mentions_post() || a.rhs.mentions_post() {
                                pair_atoms.push(ra);
                            } else {
                                pre_atoms.push(ra);
                            }
                        }
                        ResolvedMembership::Constraints {
                            pre: pre_locations.clone(),
                            post: post_locations.clone(),
                            pre_atoms,
                            pair_atoms,
                        }
                    }
                };
                if r.rank.mentions_post() {
                    return Err(TermError::Expression {
                        text: r.rank.to_string(),
                        pos: 0,
                        msg: "a rank may not mention the later state".into(),
                    });
                }
                Ok(ResolvedRelation {
                    membership,
                    rank: Resolved::new(&r.rank, p)?,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(ResolvedInvariant { relations })
    }

    pub(crate) fn rank(&self, r: usize, s: &State) -> Nat {
        self.relations[r].rank.eval(s, s).into_owned()
    }

    /// `(rank_1(s), …, rank_k(s))`.
    pub(crate) fn point(&self, s: &State) -> Point {
        Point::new((0..self.relations.len()).map(|r| self.rank(r, s)).collect())
    }
}

/// A trace pair that breaks the invariant. Indices point into the trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Uncovered {
        earlier: usize,
        later: usize,
    },
    RankNotDecreasing {
        relation: String,
        earlier: usize,
        later: usize,
        #[serde(with = "crate::nat")]
        rank_before: Nat,
        #[serde(with = "crate::nat")]
        rank_after: Nat,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub trace_len: usize,
    /// Whether the explored trace reached a final state.
    pub terminated: bool,
    pub pairs_checked: u64,
    pub violation_count: u64,
    /// The first [`CheckReport::KEPT`] violations.
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub const KEPT: usize = 100;

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Checks every pair `(s_i, s_j)`, `i < j`, of the trace from `s0` (at most
/// `max_steps` steps): some relation must contain it, and every relation
/// that contains it must have a strictly smaller rank at `s_j`.
pub fn check_invariant(
    p: &Program,
    s0: &State,
    inv: &TransitionInvariant,
    max_steps: u64,
) -> Result<CheckReport, TermError> {
    let (trace, terminated) = run_prefix(p, s0, max_steps);
    check_trace(p, &trace, terminated, inv)
}

pub(crate) fn check_trace(
    p: &Program,
    trace: &[State],
    terminated: bool,
    inv: &TransitionInvariant,
) -> Result<CheckReport, TermError> {
    let res = ResolvedInvariant::new(p, inv)?;
    let n = trace.len();
    let ranks: Vec<Vec<Nat>> = (0..res.relations.len())
        .map(|r| trace.iter().map(|s| res.rank(r, s)).collect())
        .collect();
    let in_set = |set: &Option<BTreeSet<Loc>>, s: &State| set.as_ref().is_none_or(|set| set.contains(&s.location));
    let pre_ok: Vec<Vec<bool>> = res
        .relations
        .iter()
        .map(|rel| {
            trace
                .iter()
                .map(|s| match &rel.membership {
                    ResolvedMembership::Constraints { pre, pre_atoms, .. } => {
                        in_set(pre, s) && pre_atoms.iter().all(|a| a.holds(s, s))
                    }
                    ResolvedMembership::Opaque(_) => true,
                })
                .collect()
        })
        .collect();
    let post_ok: Vec<Vec<bool>> = res
        .relations
        .iter()
        .map(|rel| {
            trace
                .iter()
                .map(|s| match &rel.membership {
                    ResolvedMembership::Constraints { post, .. } => in_set(post, s),
                    ResolvedMembership::Opaque(_) => true,
                })
                .collect()
        })
        .collect();

    let mut report = CheckReport {
        trace_len: n,
        terminated,
        pairs_checked: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    let record = |report: &mut CheckReport, v: Violation| {
        report.violation_count += 1;
        if report.violations.len() < CheckReport::KEPT {
            report.violations.push(v);
        }
    };
    for i in 0..n {
        for j in i + 1..n {
            report.pairs_checked += 1;
            let mut covered = false;
            for (r, rel) in res.relations.iter().enumerate() {
                if !pre_ok[r][i] || !post_ok[r][j] {
                    continue;
                }
                let member = match &rel.membership {
                    ResolvedMembership::Constraints { pair_atoms, .. } => {
                        pair_atoms.iter().all(|a| a.holds(&trace[i], &trace[j]))
                    }
                    ResolvedMembership::Opaque(f) => f(&trace[i], &trace[j]),
                };
                if !member {
                    continue;
                }
                covered = true;
                if ranks[r][j] >= ranks[r][i] {
                    record(
                        &mut report,
                        Violation::RankNotDecreasing {
                            relation: inv.relations()[r].name.clone(),
                            earlier: i,
                            later: j,
                            rank_before: ranks[r][i].clone(),
                            rank_after: ranks[r][j].clone(),
                        },
                    );
                }
            }
            if !covered {
                record(&mut report, Violation::Uncovered { earlier: i, later: j });
            }
        }
    }
    Ok(report)
}
