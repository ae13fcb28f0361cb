//! Bounds on strictly lexicographically descending runs in `ℕ^k`.
//!
//! [`bound_g`] gives, for a sequence `σ: ℕ → ℕ^k` and a start `n`, a point
//! `g(n)` such that some `m ∈ [n, g(n)]` has `σ(m) ≼ σ(m+1)`. For `k = 1`,
//! `g(n) = n + σ(n) + 1`. For `k > 1`, with head `σ₁` and tail bound `g'`,
//!
//! ```text
//! H(0, x) = x
//! H(i, x) = g'(H(i-1, x) + 1)
//! g(n)    = H(σ₁(n) + 2, n)
//! ```
//!
//! The values explode quickly, so evaluation is guarded by a [`BoundConfig`].
//! A sequence may declare that it is constant from some index `N` on; above
//! `N` every level collapses to `n + D` for a constant `D`, which lets traces
//! of terminating programs be bounded exactly without walking the huge
//! intermediate arguments.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::nat::Nat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("tuples of lengths {left} and {right} are not comparable")]
    LengthMismatch { left: usize, right: usize },
    #[error("no adjacent increase between {m} and {n}")]
    NoWitness { m: u64, n: u64 },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no non-descent in [{n}, {bound}]")]
    LemmaViolated { n: u64, bound: Nat },
    #[error("expected a sequence of {expected}-tuples, got {found}")]
    ArityMismatch { expected: usize, found: usize },
}

type EvalFn = dyn Fn(u64) -> Vec<Nat> + Send + Sync;

/// A deterministic function `ℕ → ℕ^k`.
#[derive(Clone)]
pub struct SequenceFn {
    k: usize,
    eval: Arc<EvalFn>,
    constant_from: Option<u64>,
}

impl fmt::Debug for SequenceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequenceFn")
            .field("k", &self.k)
            .field("constant_from", &self.constant_from)
            .finish_non_exhaustive()
    }
}

impl SequenceFn {
    pub fn new(k: usize, f: impl Fn(u64) -> Vec<Nat> + Send + Sync + 'static) -> Self {
        assert!(k >= 1, "sequences need at least one coordinate");
        SequenceFn {
            k,
            eval: Arc::new(f),
            constant_from: None,
        }
    }

    /// A natural-valued sequence.
    pub fn scalar(f: impl Fn(u64) -> Nat + Send + Sync + 'static) -> Self {
        SequenceFn::new(1, move |n| vec![f(n)])
    }

    pub fn constant(v: Vec<Nat>) -> Self {
        SequenceFn::new(v.len(), move |_| v.clone()).with_constant_from(0)
    }

    /// The listed values, then the last one forever. Panics on an empty
    /// list or ragged tuples.
    pub fn from_values(values: Vec<Vec<Nat>>) -> Self {
        let k = values.first().expect("at least one value").len();
        assert!(values.iter().all(|v| v.len() == k), "ragged tuples");
        let last = values.len() as u64 - 1;
        SequenceFn::new(k, move |n| values[n.min(last) as usize].clone()).with_constant_from(last)
    }

    /// Promises `σ(n) = σ(N)` for every `n ≥ N`. Not checked.
    pub fn with_constant_from(mut self, n: u64) -> Self {
        self.constant_from = Some(n);
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn constant_from(&self) -> Option<u64> {
        self.constant_from
    }

    pub fn eval(&self, n: u64) -> Vec<Nat> {
        (self.eval)(n)
    }

    fn checked_eval(&self, n: u64) -> Result<Vec<Nat>, BoundError> {
        let v = self.eval(n);
        if v.len() != self.k {
            return Err(BoundError::ArityMismatch {
                expected: self.k,
                found: v.len(),
            });
        }
        Ok(v)
    }
}

/// Guards against the growth of [`bound_g`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundConfig {
    /// Largest value any intermediate bound may take.
    pub ceiling: Nat,
    /// Largest number of distinct `(level, argument)` evaluations, also
    /// used as the scan limit of [`find_nondescent`].
    pub max_evaluations: u64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            ceiling: Nat::from(1_000_000_000u64),
            max_evaluations: 1_000_000,
        }
    }
}

impl BoundConfig {
    pub fn with_ceiling(ceiling: Nat) -> Self {
        BoundConfig {
            ceiling,
            ..Default::default()
        }
    }
}

/// Lexicographic `u ≼ v`.
pub fn lex_le(u: &[Nat], v: &[Nat]) -> Result<bool, BoundError> {
    if u.len() != v.len() {
        return Err(BoundError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u <= v)
}

/// Least `p ∈ [m, n-1]` with `σ₁(p) < σ₁(p+1)`, given `m < n` and
/// `σ₁(m) < σ₁(n)`.
pub fn find_adjacent_increase(sigma1: &SequenceFn, m: u64, n: u64) -> Result<u64, BoundError> {
    if sigma1.k() != 1 {
        return Err(BoundError::ArityMismatch {
            expected: 1,
            found: sigma1.k(),
        });
    }
    let at = |x| sigma1.checked_eval(x).map(|mut v| v.remove(0));
    if m >= n || at(m)? >= at(n)? {
        return Err(BoundError::NoWitness { m, n });
    }
    let mut prev = at(m)?;
    for p in m..n {
        let next = at(p + 1)?;
        if prev < next {
            return Ok(p);
        }
        prev = next;
    }
    unreachable!("an overall increase has an adjacent one")
}

struct Evaluator<'a> {
    sigma: &'a SequenceFn,
    cfg: &'a BoundConfig,
    memo: HashMap<(usize, u64), Nat>,
    evaluations: u64,
    /// `D_j` for each level when the sequence is eventually constant.
    tail: Option<(u64, Vec<Nat>)>,
}

impl<'a> Evaluator<'a> {
    fn new(sigma: &'a SequenceFn, cfg: &'a BoundConfig) -> Result<Self, BoundError> {
        let tail = match sigma.constant_from {
            None => None,
            Some(start) => {
                let c = sigma.checked_eval(start)?;
                let mut d = vec![Nat::zero(); sigma.k];
                d[sigma.k - 1] = &c[sigma.k - 1] + 1u32;
                for j in (0..sigma.k - 1).rev() {
                    d[j] = (&c[j] + 2u32) * (&d[j + 1] + 1u32);
                }
                Some((start, d))
            }
        };
        Ok(Evaluator {
            sigma,
            cfg,
            memo: HashMap::new(),
            evaluations: 0,
            tail,
        })
    }

    fn guard(&self, v: Nat) -> Result<Nat, BoundError> {
        if v > self.cfg.ceiling {
            return Err(BoundError::BudgetExceeded(format!(
                "bound exceeds ceiling {}",
                self.cfg.ceiling
            )));
        }
        Ok(v)
    }

    /// `D_level` if `x` lies in the constant tail.
    fn tail_offset(&self, x: &Nat, level: usize) -> Option<Nat> {
        let (start, d) = self.tail.as_ref()?;
        (*x >= Nat::from(*start)).then(|| d[level].clone())
    }

    /// The bound for coordinates `level..k`.
    fn g(&mut self, level: usize, n: &Nat) -> Result<Nat, BoundError> {
        if let Some(d) = self.tail_offset(n, level) {
            return self.guard(n + d);
        }
        let n64 = n
            .to_u64()
            .ok_or_else(|| BoundError::BudgetExceeded("argument does not fit in u64".into()))?;
        if let Some(v) = self.memo.get(&(level, n64)) {
            return Ok(v.clone());
        }
        self.evaluations += 1;
        if self.evaluations > self.cfg.max_evaluations {
            return Err(BoundError::BudgetExceeded(format!(
                "more than {} evaluations",
                self.cfg.max_evaluations
            )));
        }
        let s = self.sigma.checked_eval(n64)?.swap_remove(level);
        let out = if level + 1 == self.sigma.k {
            n + s + 1u32
        } else {
            let rounds = s + 2u32;
            let mut x = n.clone();
            let mut i = Nat::zero();
            while i < rounds {
                if let Some(d) = self.tail_offset(&x, level + 1) {
                    x += (&rounds - &i) * (d + 1u32);
                    break;
                }
                x = self.g(level + 1, &(x + 1u32))?;
                i += Nat::one();
            }
            x
        };
        let out = self.guard(out)?;
        self.memo.insert((level, n64), out.clone());
        Ok(out)
    }
}

/// `g(n)`: some `m ∈ [n, g(n)]` has `σ(m) ≼ σ(m+1)`.
pub fn bound_g(sigma: &SequenceFn, n: u64, cfg: &BoundConfig) -> Result<Nat, BoundError> {
    Evaluator::new(sigma, cfg)?.g(0, &Nat::from(n))
}

/// Least `m ∈ [n, g(n)]` with `σ(m) ≼ σ(m+1)`.
pub fn find_nondescent(sigma: &SequenceFn, n: u64, cfg: &BoundConfig) -> Result<u64, BoundError> {
    let bound = bound_g(sigma, n, cfg)?;
    let mut cur = sigma.checked_eval(n)?;
    let mut m = n;
    while Nat::from(m) <= bound {
        if m - n >= cfg.max_evaluations {
            return Err(BoundError::BudgetExceeded(format!(
                "scanned {} points without a non-descent",
                cfg.max_evaluations
            )));
        }
        let next = sigma.checked_eval(m + 1)?;
        if lex_le(&cur, &next)? {
            return Ok(m);
        }
        cur = next;
        m += 1;
    }
    Err(BoundError::LemmaViolated { n, bound })
}
