//! Finite k-branching trees with strictly decreasing ordinal labels.
//!
//! `k-Tr(α)` is the set of such trees whose labels lie below `α`, ordered
//! by one-node extension. [`height_nil`] and [`height_tree`] give the
//! ordinal height of a tree in that order through closed forms;
//! [`brute_force_height`] recomputes it by exhaustive search for small
//! finite `α` and serves as an independent check.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Pow, ToPrimitive};
use thiserror::Error;

use crate::nat::Nat;
use crate::ordinals::Ordinal;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KTreeError {
    #[error("slot {0:?} is already occupied")]
    OccupiedSlot(Vec<usize>),
    #[error("label {label} is not below {bound}")]
    LabelNotDecreasing { label: String, bound: String },
    #[error("path {0:?} does not address a slot of the tree")]
    InvalidPath(Vec<usize>),
    #[error("node has {found} children, tree arity is {arity}")]
    ArityMismatch { arity: usize, found: usize },
    #[error("enumeration exceeded {0} trees")]
    BudgetExceeded(usize),
    #[error("tree parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Subtree = Option<Arc<Node>>;

/// A labelled node with exactly `k` child slots.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Node {
    label: Ordinal,
    children: Vec<Subtree>,
}

impl Node {
    pub fn new(label: Ordinal, children: Vec<Subtree>) -> Self {
        Node { label, children }
    }

    pub fn leaf(label: Ordinal, k: usize) -> Self {
        Node {
            label,
            children: vec![None; k],
        }
    }

    pub fn label(&self) -> &Ordinal {
        &self.label
    }

    pub fn children(&self) -> &[Subtree] {
        &self.children
    }
}

/// An element of `k-Tr(α)`; `root == None` is the empty tree.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LabelledTree {
    arity: usize,
    root: Subtree,
}

impl LabelledTree {
    pub fn empty(arity: usize) -> Self {
        assert!(arity >= 1, "tree arity must be at least 1");
        LabelledTree { arity, root: None }
    }

    /// Wraps a root node, checking arity and strict label descent.
    pub fn from_root(arity: usize, root: Node) -> Result<Self, KTreeError> {
        let t = LabelledTree {
            arity,
            root: Some(Arc::new(root)),
        };
        t.check_shape()?;
        Ok(t)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> Option<&Node> {
        self.root.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn node_count(&self) -> usize {
        fn go(t: &Subtree) -> usize {
            t.as_ref()
                .map_or(0, |n| 1 + n.children.iter().map(go).sum::<usize>())
        }
        go(&self.root)
    }

    fn check_shape(&self) -> Result<(), KTreeError> {
        fn go(n: &Node, k: usize) -> Result<(), KTreeError> {
            if n.children.len() != k {
                return Err(KTreeError::ArityMismatch {
                    arity: k,
                    found: n.children.len(),
                });
            }
            for c in n.children.iter().flatten() {
                if c.label >= n.label {
                    return Err(KTreeError::LabelNotDecreasing {
                        label: c.label.to_string(),
                        bound: n.label.to_string(),
                    });
                }
                go(c, k)?;
            }
            Ok(())
        }
        match &self.root {
            Some(r) => go(r, self.arity),
            None => Ok(()),
        }
    }

    /// Checks membership in `k-Tr(alpha)`.
    pub fn validate(&self, alpha: &Ordinal) -> Result<(), KTreeError> {
        self.check_shape()?;
        match &self.root {
            Some(r) if r.label >= *alpha => Err(KTreeError::LabelNotDecreasing {
                label: r.label.to_string(),
                bound: alpha.to_string(),
            }),
            _ => Ok(()),
        }
    }

    /// Every empty slot as `(path, label of the owning node)`; the empty
    /// tree has a single slot at the root path with no owner.
    pub fn empty_slots(&self) -> Vec<(Vec<usize>, Option<&Ordinal>)> {
        fn go<'a>(n: &'a Node, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Option<&'a Ordinal>)>) {
            for (i, c) in n.children.iter().enumerate() {
                path.push(i + 1);
                match c {
                    Some(c) => go(c, path, out),
                    None => out.push((path.clone(), Some(&n.label))),
                }
                path.pop();
            }
        }
        let mut out = Vec::new();
        match &self.root {
            None => out.push((Vec::new(), None)),
            Some(r) => go(r, &mut Vec::new(), &mut out),
        }
        out
    }

    /// One-node extension: fills the empty slot at `path` with a leaf
    /// labelled `label`. The label must lie below the owning node's label,
    /// or below `alpha` when filling the root.
    pub fn extend(&self, path: &[usize], label: Ordinal, alpha: &Ordinal) -> Result<Self, KTreeError> {
        fn go(
            t: &Subtree,
            rest: &[usize],
            full: &[usize],
            label: Ordinal,
            bound: &Ordinal,
            k: usize,
        ) -> Result<Subtree, KTreeError> {
            match (t, rest.split_first()) {
                (None, None) => {
                    if label >= *bound {
                        return Err(KTreeError::LabelNotDecreasing {
                            label: label.to_string(),
                            bound: bound.to_string(),
                        });
                    }
                    Ok(Some(Arc::new(Node::leaf(label, k))))
                }
                (Some(_), None) => Err(KTreeError::OccupiedSlot(full.to_vec())),
                (None, Some(_)) => Err(KTreeError::InvalidPath(full.to_vec())),
                (Some(n), Some((&i, tail))) => {
                    if i == 0 || i > k {
                        return Err(KTreeError::InvalidPath(full.to_vec()));
                    }
                    let child = go(&n.children[i - 1], tail, full, label, &n.label, k)?;
                    let mut children = n.children.clone();
                    children[i - 1] = child;
                    Ok(Some(Arc::new(Node {
                        label: n.label.clone(),
                        children,
                    })))
                }
            }
        }
        let root = go(&self.root, path, path, label, alpha, self.arity)?;
        Ok(LabelledTree {
            arity: self.arity,
            root,
        })
    }

    /// Representative of the tree's orbit under permutation of child
    /// slots: children are recursively sorted.
    pub fn canonical(&self) -> Self {
        LabelledTree {
            arity: self.arity,
            root: canonical_subtree(&self.root),
        }
    }

    pub fn parse(s: &str, arity: usize) -> Result<Self, KTreeError> {
        let mut p = TreeParser { s, pos: 0, arity };
        p.skip_ws();
        let root = p.subtree()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        let t = LabelledTree { arity, root };
        t.check_shape()?;
        Ok(t)
    }
}

fn canonical_subtree(t: &Subtree) -> Subtree {
    t.as_ref().map(|n| {
        let mut children: Vec<Subtree> = n.children.iter().map(canonical_subtree).collect();
        children.sort();
        Arc::new(Node {
            label: n.label.clone(),
            children,
        })
    })
}

impl fmt::Display for LabelledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Subtree, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                None => f.write_str("_"),
                Some(n) => {
                    write!(f, "({}", n.label)?;
                    for c in &n.children {
                        f.write_str(" ")?;
                        go(c, f)?;
                    }
                    f.write_str(")")
                }
            }
        }
        go(&self.root, f)
    }
}

struct TreeParser<'a> {
    s: &'a str,
    pos: usize,
    arity: usize,
}

impl TreeParser<'_> {
    fn err(&self, msg: &str) -> KTreeError {
        KTreeError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.s[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn subtree(&mut self) -> Result<Subtree, KTreeError> {
        let rest = &self.s[self.pos..];
        if rest.starts_with('_') {
            self.pos += 1;
            return Ok(None);
        }
        if !rest.starts_with('(') {
            return Err(self.err("expected '(' or '_'"));
        }
        self.pos += 1;
        let (label, used) = Ordinal::parse_prefix(&self.s[self.pos..]).map_err(|e| KTreeError::Parse {
            pos: self.pos,
            msg: e.to_string(),
        })?;
        self.pos += used;
        let mut children = Vec::with_capacity(self.arity);
        loop {
            self.skip_ws();
            if self.s[self.pos..].starts_with(')') {
                self.pos += 1;
                break;
            }
            if self.pos >= self.s.len() {
                return Err(self.err("unterminated node"));
            }
            children.push(self.subtree()?);
        }
        if children.len() != self.arity {
            return Err(KTreeError::ArityMismatch {
                arity: self.arity,
                found: children.len(),
            });
        }
        Ok(Some(Arc::new(Node { label, children })))
    }
}

/// `(k^n - 1) / (k - 1)`, the height of `k-Tr(n)` for finite `n` and `k ≥ 2`.
fn geometric(k: u64, n: &Nat) -> Nat {
    let n = n.to_u32().expect("finite label too large");
    (Pow::pow(Nat::from(k), n) - Nat::one()) / Nat::from(k - 1)
}

/// Height of the empty tree in `k-Tr(alpha)`.
///
/// For `k = 1` this is `alpha`. Otherwise write `alpha = λ + n` with `λ`
/// zero or a limit; the height is `(k^n-1)/(k-1)` when `λ = 0` and
/// `k^alpha + (k^n-1)/(k-1)` otherwise.
pub fn height_nil(k: u64, alpha: &Ordinal) -> Ordinal {
    assert!(k >= 1, "arity must be at least 1");
    if k == 1 {
        return alpha.clone();
    }
    let g = Ordinal::finite(geometric(k, &alpha.finite_part()));
    if alpha.limit_part().is_zero() {
        g
    } else {
        Ordinal::exp_base(k, alpha)
            .expect("k >= 2 checked above")
            .add(&g)
    }
}

/// Height of `t` in `k-Tr(alpha)`: the natural sum, over every empty slot,
/// of the empty-tree height below the label of the slot's owner.
pub fn height_tree(t: &LabelledTree, alpha: &Ordinal) -> Ordinal {
    let k = t.arity() as u64;
    let mut cache: HashMap<&Ordinal, Ordinal> = HashMap::new();
    let mut total = Ordinal::zero();
    for (_, owner) in t.empty_slots() {
        let h = match owner {
            None => height_nil(k, alpha),
            Some(label) => cache
                .entry(label)
                .or_insert_with(|| height_nil(k, label))
                .clone(),
        };
        total = total.nat_sum(&h);
    }
    total
}

/// Exact heights of every tree in `k-Tr(m)` for small finite `m`, keyed by
/// canonical representative (children sorted). Trees that differ only by a
/// permutation of child slots have the same height, so the table covers
/// all of `k-Tr(m)`.
#[derive(Debug, Clone)]
pub struct BruteForceHeights {
    arity: usize,
    table: HashMap<Subtree, u64>,
}

impl BruteForceHeights {
    pub fn get(&self, t: &LabelledTree) -> Option<u64> {
        if t.arity != self.arity {
            return None;
        }
        self.table.get(&canonical_subtree(&t.root)).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LabelledTree, u64)> + '_ {
        self.table.iter().map(|(root, &h)| {
            (
                LabelledTree {
                    arity: self.arity,
                    root: root.clone(),
                },
                h,
            )
        })
    }
}

/// Default cap on the number of canonical trees visited.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 1_000_000;

/// Exhaustive height of every tree in `k-Tr(m)` under one-node extension:
/// `height(T) = max{height(T') + 1 : T' ≻₁ T}`, zero for maximal trees.
pub fn brute_force_height(k: usize, m: u64, budget: usize) -> Result<BruteForceHeights, KTreeError> {
    assert!(k >= 1, "arity must be at least 1");
    let alpha = Ordinal::from(m);
    let mut table: HashMap<Subtree, u64> = HashMap::new();

    fn visit(
        t: &LabelledTree,
        alpha: &Ordinal,
        table: &mut HashMap<Subtree, u64>,
        budget: usize,
    ) -> Result<u64, KTreeError> {
        if let Some(&h) = table.get(&t.root) {
            return Ok(h);
        }
        let mut successors: HashSet<Subtree> = HashSet::new();
        for (path, owner) in t.empty_slots() {
            let bound = owner.unwrap_or(alpha);
            let top = bound.as_nat().and_then(|b| b.to_u64()).expect("finite labels only");
            for label in 0..top {
                let next = t
                    .extend(&path, Ordinal::from(label), alpha)
                    .expect("slot and label are valid by construction");
                successors.insert(canonical_subtree(&next.root));
            }
        }
        let mut best = 0;
        for s in successors {
            let next = LabelledTree { arity: t.arity, root: s };
            best = best.max(visit(&next, alpha, table, budget)? + 1);
        }
        if table.len() >= budget {
            return Err(KTreeError::BudgetExceeded(budget));
        }
        table.insert(t.root.clone(), best);
        Ok(best)
    }

    visit(&LabelledTree::empty(k), &alpha, &mut table, budget)?;
    Ok(BruteForceHeights { arity: k, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(s: &str) -> Ordinal {
        Ordinal::parse(s).unwrap()
    }

    fn tree(s: &str, k: usize) -> LabelledTree {
        LabelledTree::parse(s, k).unwrap()
    }

    #[test]
    fn extend_examples() {
        let t = LabelledTree::empty(2).extend(&[], o("1"), &o("3")).unwrap();
        assert_eq!(t, tree("(1 _ _)", 2));
        let t2 = t.extend(&[1], o("0"), &o("3")).unwrap();
        assert_eq!(t2, tree("(1 (0 _ _) _)", 2));
        assert!(matches!(
            t.extend(&[1], o("1"), &o("3")),
            Err(KTreeError::LabelNotDecreasing { .. })
        ));
        assert!(matches!(
            t.extend(&[], o("0"), &o("3")),
            Err(KTreeError::OccupiedSlot(_))
        ));
        assert!(matches!(
            t.extend(&[1, 1], o("0"), &o("3")),
            Err(KTreeError::InvalidPath(_))
        ));
        assert!(matches!(
            t.extend(&[3], o("0"), &o("3")),
            Err(KTreeError::InvalidPath(_))
        ));
        assert!(LabelledTree::empty(2).extend(&[], o("3"), &o("3")).is_err());
        assert_eq!(t.node_count() + 1, t2.node_count());
    }

    #[test]
    fn closed_form_heights() {
        assert_eq!(height_nil(2, &o("3")), o("7"));
        assert_eq!(height_nil(2, &o("w+1")), o("w*2+1"));
        assert_eq!(height_nil(1, &o("w*5+3")), o("w*5+3"));
        assert_eq!(height_nil(2, &o("w")), o("w"));
        assert_eq!(height_nil(3, &o("w")), o("w"));
        assert_eq!(height_nil(3, &o("w*2+2")), o("w^2*9+4"));
        assert_eq!(height_nil(2, &o("w^2")), o("w^(w)"));
        assert_eq!(height_nil(2, &o("0")), o("0"));
    }

    #[test]
    fn tree_heights() {
        assert_eq!(height_tree(&LabelledTree::empty(2), &o("3")), o("7"));
        assert_eq!(height_tree(&tree("(2 _ _)", 2), &o("3")), o("6"));
        assert_eq!(height_tree(&tree("(1 (0 _ _) _)", 2), &o("2")), o("1"));
    }

    #[test]
    fn brute_force_small_spaces() {
        let b = brute_force_height(2, 1, 1000).unwrap();
        assert_eq!(b.get(&LabelledTree::empty(2)), Some(1));
        let b = brute_force_height(2, 2, 1000).unwrap();
        assert_eq!(b.get(&LabelledTree::empty(2)), Some(3));
        let b = brute_force_height(1, 2, 1000).unwrap();
        assert_eq!(b.get(&LabelledTree::empty(1)), Some(2));
        assert_eq!(b.len(), 4);
        // 2-Tr(2) has 6 trees; (1 (0 _ _) _) and (1 _ (0 _ _)) share a representative.
        let b = brute_force_height(2, 2, 1000).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.get(&tree("(1 _ (0 _ _))", 2)), Some(1));
        assert!(matches!(
            brute_force_height(3, 3, 10),
            Err(KTreeError::BudgetExceeded(10))
        ));
    }

    #[test]
    fn closed_form_matches_enumeration_on_small_spaces() {
        for k in 1..=2usize {
            for m in 0..=3u64 {
                let b = brute_force_height(k, m, DEFAULT_ENUMERATION_BUDGET).unwrap();
                for (t, h) in b.iter() {
                    assert_eq!(height_tree(&t, &Ordinal::from(m)), Ordinal::from(h), "{t} in {k}-Tr({m})");
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        for s in ["_", "(w^(w) _ _)", "(w*2+1 (w+5 _ (3 _ _)) _)"] {
            assert_eq!(tree(s, 2).to_string(), s);
        }
        assert!(matches!(
            LabelledTree::parse("(2 _)", 2),
            Err(KTreeError::ArityMismatch { .. })
        ));
        assert!(LabelledTree::parse("(1 (1 _ _) _)", 2).is_err());
        assert!(LabelledTree::parse("(1 _ _", 2).is_err());
    }

    fn small_ordinal() -> impl Strategy<Value = Ordinal> {
        (0u64..3, 0u64..4).prop_map(|(a, b)| Ordinal::omega_times(a).add(&Ordinal::from(b)))
    }

    proptest! {
        #[test]
        fn recursion_matches_closed_form(k in 1u64..5, alpha in small_ordinal()) {
            let succ = alpha.add(&Ordinal::one());
            let expected = height_nil(k, &alpha).nat_mul(&Nat::from(k)).add(&Ordinal::one());
            prop_assert_eq!(height_nil(k, &succ), expected);
        }

        #[test]
        fn monotone_in_alpha(k in 1u64..5, a in small_ordinal(), b in small_ordinal()) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(height_nil(k, &lo) <= height_nil(k, &hi));
        }

        #[test]
        fn extension_strictly_lowers_height(
            k in 1usize..4,
            steps in proptest::collection::vec((any::<prop::sample::Index>(), 0u64..3, 0u64..5), 1..12),
        ) {
            let alpha = Ordinal::parse("w*2+3").unwrap();
            let mut t = LabelledTree::empty(k);
            let mut h = height_tree(&t, &alpha);
            for (slot, om, fin) in steps {
                let slots = t.empty_slots();
                let (path, owner) = slots[slot.index(slots.len())].clone();
                let bound = owner.cloned().unwrap_or_else(|| alpha.clone());
                let label = Ordinal::omega_times(om).add(&Ordinal::from(fin));
                if label >= bound {
                    continue;
                }
                let next = t.extend(&path, label, &alpha).unwrap();
                next.validate(&alpha).unwrap();
                let h2 = height_tree(&next, &alpha);
                prop_assert!(h2 < h, "{} -> {}: {} !< {}", t, next, h2, h);
                t = next;
                h = h2;
            }
        }

        #[test]
        fn height_ignores_child_order(
            steps in proptest::collection::vec((any::<prop::sample::Index>(), 0u64..4), 1..10),
        ) {
            let alpha = Ordinal::from(4);
            let mut t = LabelledTree::empty(3);
            for (slot, label) in steps {
                let slots = t.empty_slots();
                let (path, owner) = slots[slot.index(slots.len())].clone();
                let label = Ordinal::from(label);
                if label < *owner.unwrap_or(&alpha) {
                    t = t.extend(&path, label, &alpha).unwrap();
                }
            }
            prop_assert_eq!(height_tree(&t, &alpha), height_tree(&t.canonical(), &alpha));
        }
    }
}
