//! From a certified trace to a step bound.
//!
//! Every state is mapped to its tuple of ranks, one per relation of the
//! invariant. A passing check makes that tuple sequence homogeneous, so its
//! prefixes have a strictly decreasing measure `φ(x) = f*(⟨s_0, …, s_x⟩)` in
//! `ℕ^k`. The descent bound for `φ` then bounds the number of steps.
//!
//! `φ` is frozen once the trace reaches a final state: a repeated state
//! would break homogeneity.

use super::interp::{run_prefix, State};
use super::invariant::{ResolvedInvariant, TransitionInvariant};
use super::program::Program;
use super::TermError;
use crate::bounds::{self, BoundConfig, SequenceFn};
use crate::erdos::{ErdosError, ErdosTree, Point};
use crate::ktree::height_tree;
use crate::nat::Nat;
use crate::ordinals::Ordinal;

/// `φ(0), …, φ(F)` for a trace whose first final state has index `F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiValues {
    pub values: Vec<Vec<Nat>>,
}

impl PhiValues {
    pub fn final_index(&self) -> usize {
        self.values.len() - 1
    }

    /// `φ` on all of ℕ, constant from the final index on.
    pub fn sequence(&self) -> SequenceFn {
        SequenceFn::from_values(self.values.clone())
    }
}

/// Rank tuples of `trace`.
pub fn rank_points(p: &Program, trace: &[State], inv: &TransitionInvariant) -> Result<Vec<Point>, TermError> {
    let res = ResolvedInvariant::new(p, inv)?;
    Ok(trace.iter().map(|s| res.point(s)).collect())
}

/// `f*` of every nonempty prefix of `points`, built incrementally.
fn prefix_measures(points: &[Point], k: usize) -> Result<Vec<Vec<Nat>>, TermError> {
    let bound = Ordinal::omega_times(k as u64);
    let mut tree = ErdosTree::new(k);
    let mut out = Vec::with_capacity(points.len());
    for (i, y) in points.iter().enumerate() {
        let related = points[..i]
            .iter()
            .all(|x| (1..=k).any(|h| y.below_in(h, x)));
        if !related {
            return Err(ErdosError::NotHomogeneous.into());
        }
        tree.insert(y.clone())?;
        let labelled = tree.to_labelled_tree()?;
        let v = height_tree(&labelled, &bound)
            .to_vector(k)
            .map_err(ErdosError::from)?;
        out.push(v);
    }
    Ok(out)
}

/// `φ(x)`: runs at most `x` steps from `s0`.
pub fn phi(p: &Program, s0: &State, inv: &TransitionInvariant, x: u64) -> Result<Vec<Nat>, TermError> {
    let (trace, _) = run_prefix(p, s0, x);
    let points = rank_points(p, &trace, inv)?;
    Ok(prefix_measures(&points, inv.k())?.pop().expect("trace is nonempty"))
}

/// `φ` up to the first final state, which must come within `max_steps`.
pub fn phi_values(
    p: &Program,
    s0: &State,
    inv: &TransitionInvariant,
    max_steps: u64,
) -> Result<PhiValues, TermError> {
    let (trace, terminated) = run_prefix(p, s0, max_steps);
    if !terminated {
        return Err(TermError::BudgetExceeded { steps: max_steps });
    }
    let points = rank_points(p, &trace, inv)?;
    Ok(PhiValues {
        values: prefix_measures(&points, inv.k())?,
    })
}

/// `g(0)` for `φ`: the program reaches a final state within that many
/// steps.
pub fn step_bound(
    p: &Program,
    s0: &State,
    inv: &TransitionInvariant,
    max_steps: u64,
    cfg: &BoundConfig,
) -> Result<Nat, TermError> {
    let phi = phi_values(p, s0, inv, max_steps)?;
    Ok(bounds::bound_g(&phi.sequence(), 0, cfg)?)
}
