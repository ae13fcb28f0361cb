//! Erdős trees over `k` relations of height ω.
//!
//! Each relation `R_h` is represented by its rank: a node is a [`Point`]
//! `(y_1, …, y_k)` and `y R_h x` holds iff `y_h < x_h`. A homogeneous
//! sequence (every later element related to every earlier one by some
//! `R_h`) is embedded into a k-ary tree of colored lists by [`embed`]; every
//! new element descends from the root along the first color relating it to
//! the current node and becomes a new leaf.
//!
//! Nodes are labelled below `ω·k` by [`ErdosTree::label_alpha`], which
//! decreases from parent to child, so the k-ary tree height of the image
//! gives a measure [`f_star`] that strictly decreases as the sequence grows.

use std::fmt;

use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ktree::{self, KTreeError, LabelledTree, Node};
use crate::nat::Nat;
use crate::ordinals::{Ordinal, OrdinalError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ErdosError {
    #[error("no coordinate of {y} is below {x}")]
    NoRelation { y: String, x: String },
    #[error("sequence is not homogeneous")]
    NotHomogeneous,
    #[error("f* is undefined on the empty sequence")]
    EmptySequence,
    #[error("branch is not in the tree")]
    BranchNotInTree,
    #[error("point {point} does not have {k} coordinates")]
    DimensionMismatch { point: String, k: usize },
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error(transparent)]
    Labelling(#[from] KTreeError),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

/// A tuple of ranks, one per relation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(#[serde(with = "crate::nat::vec")] Vec<Nat>);

impl Point {
    pub fn new(coords: Vec<Nat>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Nat] {
        &self.0
    }

    /// Coordinate `h`, 1-based like colors.
    pub fn coord(&self, h: usize) -> &Nat {
        &self.0[h - 1]
    }

    /// `self R_h other`, i.e. `self_h < other_h`.
    pub fn below_in(&self, h: usize, other: &Point) -> bool {
        self.coord(h) < other.coord(h)
    }
}

impl<T: Into<Nat>> From<Vec<T>> for Point {
    fn from(v: Vec<T>) -> Self {
        Point(v.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// True iff every later element is below every earlier one in some
/// coordinate, and all points have `k` coordinates.
pub fn is_homogeneous(s: &[Point], k: usize) -> bool {
    s.iter().all(|p| p.dim() == k)
        && s.iter().enumerate().all(|(i, x)| {
            s[i + 1..]
                .iter()
                .all(|y| (1..=k).any(|h| y.below_in(h, x)))
        })
}

/// The first color `h` with `y_h < x_h`.
pub fn color_of(y: &Point, x: &Point) -> Result<usize, ErdosError> {
    (1..=y.dim().min(x.dim()))
        .find(|&h| y.below_in(h, x))
        .ok_or_else(|| ErdosError::NoRelation {
            y: y.to_string(),
            x: x.to_string(),
        })
}

/// A list of elements with a color on each of its edges.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct ColoredList {
    points: Vec<Point>,
    colors: Vec<usize>,
}

impl ColoredList {
    pub fn nil() -> Self {
        ColoredList::default()
    }

    pub fn single(x: Point) -> Self {
        ColoredList {
            points: vec![x],
            colors: Vec::new(),
        }
    }

    pub fn new(points: Vec<Point>, colors: Vec<usize>) -> Result<Self, ErdosError> {
        if colors.len() != points.len().saturating_sub(1) {
            return Err(ErdosError::Malformed(format!(
                "{} points need {} colors, got {}",
                points.len(),
                points.len().saturating_sub(1),
                colors.len()
            )));
        }
        Ok(ColoredList { points, colors })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&Point> {
        self.points.last()
    }

    /// `self ⌢_c clx(x)`: one-step extension of color `c`.
    pub fn extended(&self, c: usize, x: Point) -> Self {
        let mut out = self.clone();
        if !out.points.is_empty() {
            out.colors.push(c);
        }
        out.points.push(x);
        out
    }

    /// The list with its last element removed.
    pub fn parent(&self) -> Option<ColoredList> {
        if self.points.is_empty() {
            return None;
        }
        let mut out = self.clone();
        out.points.pop();
        out.colors.pop();
        Some(out)
    }

    /// Valid over the coordinate relations: an edge of color `h` leaving
    /// `x_i` forces every later element below `x_i` in coordinate `h`.
    pub fn is_valid(&self) -> bool {
        self.colors.iter().enumerate().all(|(i, &h)| {
            h >= 1
                && h <= self.points[i].dim()
                && self.points[i + 1..]
                    .iter()
                    .all(|y| y.below_in(h, &self.points[i]))
        })
    }

    /// Elements followed by an edge of color `h`, plus the last element.
    pub fn projection(&self, h: usize) -> Vec<&Point> {
        let mut out: Vec<&Point> = self
            .colors
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == h)
            .map(|(i, _)| &self.points[i])
            .collect();
        if let Some(last) = self.points.last() {
            out.push(last);
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
struct ENode {
    point: Point,
    children: Vec<Option<Box<ENode>>>,
}

impl ENode {
    fn leaf(point: Point, k: usize) -> Self {
        ENode {
            point,
            children: vec![None; k],
        }
    }
}

/// A prefix-closed set of colored lists stored as a trie: the child in
/// slot `c` of a node continues its branch with an edge of color `c`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ErdosTree {
    arity: usize,
    root: Option<Box<ENode>>,
}

/// Color/ancestor analysis of a node.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NodeProfile {
    /// Distinct colors on the branch from the root, ascending.
    pub colors: Vec<usize>,
    /// For each color, the lowest proper ancestor followed by an edge of
    /// that color.
    pub ancestors: Vec<Point>,
}

impl NodeProfile {
    /// `i` in "i-node".
    pub fn distinct_colors(&self) -> usize {
        self.colors.len()
    }
}

impl ErdosTree {
    /// The tree containing only `nil`.
    pub fn new(arity: usize) -> Self {
        assert!(arity >= 1, "arity must be at least 1");
        ErdosTree { arity, root: None }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn check_dim(&self, y: &Point) -> Result<(), ErdosError> {
        if y.dim() != self.arity {
            return Err(ErdosError::DimensionMismatch {
                point: y.to_string(),
                k: self.arity,
            });
        }
        Ok(())
    }

    /// The branch that inserting `y` would add: descend from the root,
    /// following at each node `r` the subtree of color `color_of(y, r)`,
    /// and end with `y` in the first empty slot.
    pub fn insert_branch(&self, y: &Point) -> Result<ColoredList, ErdosError> {
        self.check_dim(y)?;
        let mut out = ColoredList::nil();
        let mut cur = self.root.as_deref();
        let mut pending = 0;
        while let Some(n) = cur {
            let c = color_of(y, &n.point)?;
            out = out.extended(pending, n.point.clone());
            pending = c;
            cur = n.children[c - 1].as_deref();
        }
        Ok(out.extended(pending, y.clone()))
    }

    /// Adds the branch of [`ErdosTree::insert_branch`] and returns it.
    pub fn insert(&mut self, y: Point) -> Result<ColoredList, ErdosError> {
        let branch = self.insert_branch(&y)?;
        let k = self.arity;
        let mut slot = &mut self.root;
        for &c in branch.colors() {
            slot = &mut slot.as_mut().expect("path exists").children[c - 1];
        }
        debug_assert!(slot.is_none());
        *slot = Some(Box::new(ENode::leaf(y, k)));
        Ok(branch)
    }

    fn find(&self, branch: &ColoredList) -> Option<&ENode> {
        let mut cur = self.root.as_deref()?;
        if branch.points.first() != Some(&cur.point) {
            return None;
        }
        for (c, p) in branch.colors.iter().zip(&branch.points[1..]) {
            if *c == 0 || *c > self.arity {
                return None;
            }
            cur = cur.children[c - 1].as_deref()?;
            if cur.point != *p {
                return None;
            }
        }
        Some(cur)
    }

    pub fn contains(&self, branch: &ColoredList) -> bool {
        branch.is_empty() || self.find(branch).is_some()
    }

    pub fn node_count(&self) -> usize {
        fn go(n: &Option<Box<ENode>>) -> usize {
            n.as_ref()
                .map_or(0, |n| 1 + n.children.iter().map(go).sum::<usize>())
        }
        go(&self.root)
    }

    /// Every branch, `nil` included, ordered by color sequence (a branch
    /// precedes its extensions).
    pub fn branches(&self) -> Vec<ColoredList> {
        fn go(n: &ENode, prefix: ColoredList, c: usize, out: &mut Vec<ColoredList>) {
            let here = prefix.extended(c, n.point.clone());
            out.push(here.clone());
            for (i, child) in n.children.iter().enumerate() {
                if let Some(child) = child {
                    go(child, here.clone(), i + 1, out);
                }
            }
        }
        let mut out = vec![ColoredList::nil()];
        if let Some(r) = &self.root {
            go(r, ColoredList::nil(), 0, &mut out);
        }
        out
    }

    /// Rebuilds a tree from its branches, checking that `nil` is present,
    /// the set is prefix-closed, and every branch is a valid colored list.
    pub fn from_branches(arity: usize, branches: &[ColoredList]) -> Result<Self, ErdosError> {
        if !branches.iter().any(ColoredList::is_empty) {
            return Err(ErdosError::Malformed("nil is missing".into()));
        }
        let mut sorted: Vec<&ColoredList> = branches.iter().filter(|b| !b.is_empty()).collect();
        sorted.sort_by_key(|b| b.len());
        let mut t = ErdosTree::new(arity);
        for b in sorted {
            for p in &b.points {
                t.check_dim(p)?;
            }
            if !b.is_valid() {
                return Err(ErdosError::Malformed(format!("invalid colored list {b:?}")));
            }
            if t.contains(b) {
                continue;
            }
            let parent = b.parent().expect("nonempty");
            let leaf = ENode::leaf(b.last().unwrap().clone(), arity);
            if parent.is_empty() {
                if t.root.is_some() {
                    return Err(ErdosError::Malformed("two roots".into()));
                }
                t.root = Some(Box::new(leaf));
                continue;
            }
            if t.find(&parent).is_none() {
                return Err(ErdosError::Malformed("not prefix-closed".into()));
            }
            let mut slot = &mut t.root;
            for &c in parent.colors() {
                slot = &mut slot.as_mut().unwrap().children[c - 1];
            }
            let c = *b.colors().last().unwrap();
            let node = slot.as_mut().unwrap();
            if node.children[c - 1].is_some() {
                return Err(ErdosError::Malformed(format!(
                    "two extensions of color {c} of one branch"
                )));
            }
            node.children[c - 1] = Some(Box::new(leaf));
        }
        Ok(t)
    }

    pub fn node_profile(&self, branch: &ColoredList) -> Result<NodeProfile, ErdosError> {
        if branch.is_empty() || self.find(branch).is_none() {
            return Err(ErdosError::BranchNotInTree);
        }
        Ok(profile_of(branch, self.arity))
    }

    /// The ordinal label of the last node of `branch`, below `ω·k`.
    pub fn label_alpha(&self, branch: &ColoredList) -> Result<Ordinal, ErdosError> {
        let profile = self.node_profile(branch)?;
        Ok(label_from_profile(branch.last().unwrap(), &profile, self.arity))
    }

    /// Same shape, child slot = color, every node labelled by
    /// [`ErdosTree::label_alpha`]. Fails only if the labelling is not
    /// strictly decreasing along some edge.
    pub fn to_labelled_tree(&self) -> Result<LabelledTree, ErdosError> {
        let k = self.arity;
        fn go(n: &ENode, branch: ColoredList, k: usize) -> Node {
            let profile = profile_of(&branch, k);
            let label = label_from_profile(&n.point, &profile, k);
            let children = n
                .children
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    c.as_ref().map(|c| {
                        std::sync::Arc::new(go(c, branch.extended(i + 1, c.point.clone()), k))
                    })
                })
                .collect();
            Node::new(label, children)
        }
        match &self.root {
            None => Ok(LabelledTree::empty(k)),
            Some(r) => {
                let root = go(r, ColoredList::single(r.point.clone()), k);
                Ok(LabelledTree::from_root(k, root)?)
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.branches()).expect("branches serialize")
    }

    pub fn from_json(arity: usize, v: &serde_json::Value) -> Result<Self, ErdosError> {
        let branches: Vec<ColoredList> =
            serde_json::from_value(v.clone()).map_err(|e| ErdosError::Malformed(e.to_string()))?;
        for b in &branches {
            if b.colors.len() != b.points.len().saturating_sub(1) {
                return Err(ErdosError::Malformed("color count does not match points".into()));
            }
        }
        ErdosTree::from_branches(arity, &branches)
    }
}

fn profile_of(branch: &ColoredList, k: usize) -> NodeProfile {
    let mut lowest: Vec<Option<&Point>> = vec![None; k];
    for (i, &c) in branch.colors.iter().enumerate() {
        lowest[c - 1] = Some(&branch.points[i]);
    }
    let (colors, ancestors) = lowest
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i + 1, p.clone())))
        .unzip();
    NodeProfile { colors, ancestors }
}

fn label_from_profile(z: &Point, profile: &NodeProfile, k: usize) -> Ordinal {
    let j = profile.distinct_colors();
    let omegas = |n: usize| Ordinal::omega().nat_mul(&Nat::from(n as u64));
    if j == 0 {
        let top = z.coords().iter().max().cloned().unwrap_or_default() + Nat::one();
        return Ordinal::finite(top).nat_sum(&omegas(k - 1));
    }
    let infinite = omegas(k - j);
    profile
        .colors
        .iter()
        .zip(&profile.ancestors)
        .fold(infinite, |acc, (&h, p)| acc.nat_sum(&Ordinal::finite(p.coord(h).clone())))
}

/// `E(s)`: the Erdős tree built by inserting the elements of `s` in order.
pub fn embed(s: &[Point], k: usize) -> Result<ErdosTree, ErdosError> {
    if !is_homogeneous(s, k) {
        return Err(ErdosError::NotHomogeneous);
    }
    let mut t = ErdosTree::new(k);
    for y in s {
        t.insert(y.clone())?;
    }
    Ok(t)
}

/// `f*(s)`: the height of the labelled image of `E(s)` in `k-Tr(ω·k)`.
/// Always below `ω^k`.
pub fn f_star(s: &[Point], k: usize) -> Result<Ordinal, ErdosError> {
    if s.is_empty() {
        return Err(ErdosError::EmptySequence);
    }
    let tree = embed(s, k)?.to_labelled_tree()?;
    Ok(ktree::height_tree(&tree, &Ordinal::omega_times(k as u64)))
}

/// [`f_star`] read as a vector in `ℕ^k` (leading coefficient first).
pub fn f_star_vec(s: &[Point], k: usize) -> Result<Vec<Nat>, ErdosError> {
    Ok(f_star(s, k)?.to_vector(k)?)
}
