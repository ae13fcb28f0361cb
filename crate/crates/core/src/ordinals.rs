//! Ordinals below ε₀ in hereditary Cantor normal form.
//!
//! An [`Ordinal`] is a list of terms `ω^e·c` with strictly decreasing
//! exponents (themselves ordinals) and positive coefficients. The list is
//! canonical, so structural equality is ordinal equality and the derived
//! `Hash` agrees with it.
//!
//! Besides the usual (non-commutative) sum, the type offers the natural
//! (Hessenberg) sum `⊕`, the natural product by a natural number, and the
//! base-`k` exponential `k^α` for `k ≥ 2`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Pow, ToPrimitive, Zero};

use thiserror::Error;

use crate::nat::Nat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("ordinal {value} is not below w^{k}")]
    DomainTooLarge { value: String, k: usize },
    #[error("exponential base must be at least 2, got {0}")]
    InvalidBase(u64),
    #[error("non-canonical ordinal: {0}")]
    NonCanonical(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// One Cantor normal form term `ω^exponent · coefficient`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Term {
    exponent: Ordinal,
    coefficient: Nat,
}

impl Term {
    pub fn exponent(&self) -> &Ordinal {
        &self.exponent
    }

    pub fn coefficient(&self) -> &Nat {
        &self.coefficient
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Ordinal {
    terms: Vec<Term>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::from(1u64)
    }

    pub fn omega() -> Self {
        Ordinal::omega_term(Ordinal::one(), Nat::one())
    }

    pub fn finite(n: Nat) -> Self {
        Ordinal::omega_term(Ordinal::zero(), n)
    }

    /// `ω^exponent · coefficient` (zero when the coefficient is zero).
    pub fn omega_term(exponent: Ordinal, coefficient: Nat) -> Self {
        if coefficient.is_zero() {
            return Ordinal::zero();
        }
        Ordinal {
            terms: vec![Term {
                exponent,
                coefficient,
            }],
        }
    }

    /// `ω · n`.
    pub fn omega_times(n: u64) -> Self {
        Ordinal::omega_term(Ordinal::one(), Nat::from(n))
    }

    /// `ω^n` for a finite exponent.
    pub fn omega_pow(n: u64) -> Self {
        Ordinal::omega_term(Ordinal::from(n), Nat::one())
    }

    /// Builds an ordinal from `(exponent, coefficient)` pairs, rejecting
    /// anything that is not already in Cantor normal form.
    pub fn from_terms(terms: Vec<(Ordinal, Nat)>) -> Result<Self, OrdinalError> {
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for (exponent, coefficient) in terms {
            if coefficient.is_zero() {
                return Err(OrdinalError::NonCanonical("zero coefficient".into()));
            }
            if let Some(prev) = out.last() {
                if exponent >= prev.exponent {
                    return Err(OrdinalError::NonCanonical(
                        "exponents must strictly decrease".into(),
                    ));
                }
            }
            out.push(Term {
                exponent,
                coefficient,
            });
        }
        Ok(Ordinal { terms: out })
    }

    /// Inverse of [`Ordinal::to_vector`]: `v[0]` is the coefficient of
    /// `ω^{len-1}`, the last entry the finite part.
    pub fn from_vector(v: &[Nat]) -> Self {
        let k = v.len();
        let terms = v
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| Term {
                exponent: Ordinal::from((k - 1 - i) as u64),
                coefficient: c.clone(),
            })
            .collect();
        Ordinal { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.exponent.is_zero())
    }

    /// The value as a natural number, if finite.
    pub fn as_nat(&self) -> Option<Nat> {
        match self.terms.as_slice() {
            [] => Some(Nat::zero()),
            [t] if t.exponent.is_zero() => Some(t.coefficient.clone()),
            _ => None,
        }
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && self.finite_part().is_zero()
    }

    /// Coefficient of `ω^0`, i.e. `n` in `α = λ + n`.
    pub fn finite_part(&self) -> Nat {
        match self.terms.last() {
            Some(t) if t.exponent.is_zero() => t.coefficient.clone(),
            _ => Nat::zero(),
        }
    }

    /// `λ` in `α = λ + n`: zero or a limit ordinal.
    pub fn limit_part(&self) -> Ordinal {
        let mut terms = self.terms.clone();
        if terms.last().is_some_and(|t| t.exponent.is_zero()) {
            terms.pop();
        }
        Ordinal { terms }
    }

    /// Standard ordinal sum `self + other`. Terms of `self` below the
    /// leading exponent of `other` are absorbed.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(lead) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<Term> = Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut merged = false;
        for t in &self.terms {
            match t.exponent.cmp(&lead.exponent) {
                Ordering::Greater => terms.push(t.clone()),
                Ordering::Equal => {
                    terms.push(Term {
                        exponent: lead.exponent.clone(),
                        coefficient: &t.coefficient + &lead.coefficient,
                    });
                    merged = true;
                    break;
                }
                Ordering::Less => break,
            }
        }
        let rest = if merged { &other.terms[1..] } else { &other.terms[..] };
        terms.extend(rest.iter().cloned());
        Ordinal { terms }
    }

    /// Natural (Hessenberg) sum: coefficient-wise sum over the merged
    /// exponent set.
    pub fn nat_sum(&self, other: &Ordinal) -> Ordinal {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (&self.terms[i], &other.terms[j]);
            match a.exponent.cmp(&b.exponent) {
                Ordering::Greater => {
                    terms.push(a.clone());
                    i += 1;
                }
                Ordering::Less => {
                    terms.push(b.clone());
                    j += 1;
                }
                Ordering::Equal => {
                    terms.push(Term {
                        exponent: a.exponent.clone(),
                        coefficient: &a.coefficient + &b.coefficient,
                    });
                    i += 1;
                    j += 1;
                }
            }
        }
        terms.extend(self.terms[i..].iter().cloned());
        terms.extend(other.terms[j..].iter().cloned());
        Ordinal { terms }
    }

    /// Natural product `α * k = α ⊕ … ⊕ α` (k copies).
    pub fn nat_mul(&self, k: &Nat) -> Ordinal {
        if k.is_zero() {
            return Ordinal::zero();
        }
        Ordinal {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    exponent: t.exponent.clone(),
                    coefficient: &t.coefficient * k,
                })
                .collect(),
        }
    }

    /// `λ ÷ ω` for a limit (or zero) `λ`: every exponent is shifted down by
    /// one, finite exponents `m ↦ m-1`, infinite exponents unchanged.
    fn div_omega(&self) -> Ordinal {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let exponent = match t.exponent.as_nat() {
                    Some(m) => Ordinal::finite(m - 1u32),
                    None => t.exponent.clone(),
                };
                Term {
                    exponent,
                    coefficient: t.coefficient.clone(),
                }
            })
            .collect();
        Ordinal { terms }
    }

    /// `k^α` for `k ≥ 2`. With `α = λ + n`, this is `k^n` when `λ = 0` and
    /// `ω^(λ÷ω) · k^n` otherwise.
    pub fn exp_base(k: u64, alpha: &Ordinal) -> Result<Ordinal, OrdinalError> {
        if k < 2 {
            return Err(OrdinalError::InvalidBase(k));
        }
        let n = alpha.finite_part();
        let n = n
            .to_u32()
            .expect("finite exponent of k^n too large to materialize");
        let kn = Pow::pow(Nat::from(k), n);
        let lambda = alpha.limit_part();
        if lambda.is_zero() {
            Ok(Ordinal::finite(kn))
        } else {
            Ok(Ordinal::omega_term(lambda.div_omega(), kn))
        }
    }

    /// Coefficients `(c_{k-1}, …, c_0)` of an ordinal below `ω^k`.
    /// Lexicographic order on the result agrees with the ordinal order.
    pub fn to_vector(&self, k: usize) -> Result<Vec<Nat>, OrdinalError> {
        let mut out = vec![Nat::zero(); k];
        for t in &self.terms {
            let e = t
                .exponent
                .as_nat()
                .and_then(|e| e.to_usize())
                .filter(|&e| e < k)
                .ok_or_else(|| OrdinalError::DomainTooLarge {
                    value: self.to_string(),
                    k,
                })?;
            out[k - 1 - e] = t.coefficient.clone();
        }
        Ok(out)
    }

    pub fn parse(s: &str) -> Result<Ordinal, OrdinalError> {
        let mut p = Parser::new(s);
        let o = p.ordinal()?;
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(o)
    }

    /// Parses the longest ordinal prefix of `s`, returning it together with
    /// the number of bytes consumed.
    pub fn parse_prefix(s: &str) -> Result<(Ordinal, usize), OrdinalError> {
        let mut p = Parser::new(s);
        let o = p.ordinal()?;
        Ok((o, p.pos))
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::finite(Nat::from(n))
    }
}

impl From<Nat> for Ordinal {
    fn from(n: Nat) -> Self {
        Ordinal::finite(n)
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            let c = a
                .exponent
                .cmp(&b.exponent)
                .then_with(|| a.coefficient.cmp(&b.coefficient));
            if c != Ordering::Equal {
                return c;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            if t.exponent.is_zero() {
                write!(f, "{}", t.coefficient)?;
                continue;
            }
            f.write_str("w")?;
            match t.exponent.as_nat() {
                Some(e) if e.is_one() => {}
                Some(e) => write!(f, "^{e}")?,
                None => write!(f, "^({})", t.exponent)?,
            }
            if !t.coefficient.is_one() {
                write!(f, "*{}", t.coefficient)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ordinal::parse(s)
    }
}

impl serde::Serialize for Ordinal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Ordinal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        Ordinal::parse(&s).map_err(serde::de::Error::custom)
    }
}

// ordinal := term ("+" term)*
// term    := "w" ("^" "(" ordinal ")" | "^" nat)? ("*" nat)? | nat
struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser {
            s: s.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, msg: &str) -> OrdinalError {
        OrdinalError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self) -> Result<Nat, OrdinalError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a natural number"));
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        Ok(digits.parse().unwrap())
    }

    fn term(&mut self) -> Result<(Ordinal, Nat), OrdinalError> {
        if self.eat(b'w') {
            let exponent = if self.eat(b'^') {
                if self.eat(b'(') {
                    let e = self.ordinal()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected ')'"));
                    }
                    e
                } else {
                    Ordinal::finite(self.nat()?)
                }
            } else {
                Ordinal::one()
            };
            let coefficient = if self.eat(b'*') { self.nat()? } else { Nat::one() };
            Ok((exponent, coefficient))
        } else {
            Ok((Ordinal::zero(), self.nat()?))
        }
    }

    fn ordinal(&mut self) -> Result<Ordinal, OrdinalError> {
        let start = self.pos;
        let mut terms = vec![self.term()?];
        while self.eat(b'+') {
            terms.push(self.term()?);
        }
        if let [(e, c)] = terms.as_slice() {
            if e.is_zero() && c.is_zero() {
                return Ok(Ordinal::zero());
            }
        }
        Ordinal::from_terms(terms).map_err(|e| match e {
            OrdinalError::NonCanonical(msg) => OrdinalError::Parse { pos: start, msg },
            other => other,
        })
    }
}
