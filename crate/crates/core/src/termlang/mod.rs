//! A deterministic while-if language over unbounded naturals, with bounded
//! checking of transition invariants and the step bound derived from them.

pub mod interp;
pub mod invariant;
pub mod measure;
pub mod program;

use thiserror::Error;

use crate::bounds::BoundError;
use crate::erdos::ErdosError;

pub use interp::{run_prefix, run_trace, step, State};
pub use invariant::{
    check_invariant, Atom, CheckReport, Membership, RankedRelation, Term, TransitionInvariant, Violation,
};
pub use measure::{phi, phi_values, rank_points, step_bound, PhiValues};
pub use program::{CmpOp, Cond, Expr, Instr, Loc, Operand, Program, Stmt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("in `{text}` at {pos}: {msg}")]
    Expression { text: String, pos: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("no final state within {steps} steps")]
    BudgetExceeded { steps: u64 },
    #[error("an invariant needs at least one relation")]
    EmptyInvariant,
    #[error("relation `{0}` has an opaque predicate")]
    Opaque(String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error(transparent)]
    Erdos(#[from] ErdosError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}
