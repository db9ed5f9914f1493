//! Greedy CART-style binary decision trees on numeric features.
//!
//! This is both the classic baseline model and the base inducer the cascade
//! is built from. Induction is fully deterministic:
//!
//! - candidate thresholds are the midpoints `(a + b) / 2` of consecutive
//!   distinct sorted values of each feature (a candidate is skipped in the
//!   degenerate case where the midpoint rounds up onto `b`);
//! - the split maximizing weighted impurity decrease wins; on exact ties the
//!   lowest feature index and then the lowest threshold is chosen;
//! - splits with zero impurity decrease are rejected, so growth terminates
//!   even without a depth bound;
//! - routing sends `value <= threshold` to the left child.
//!
//! `max_depth` counts edges: a tree of depth 1 is a single root split with
//! two leaves.

use std::fmt;

use crate::dataset::{is_missing, Dataset, Label};
use crate::error::{Error, Result};

/// Split-quality criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitCriterion {
    #[default]
    Gini,
    Entropy,
}

impl fmt::Display for SplitCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitCriterion::Gini => write!(f, "gini"),
            SplitCriterion::Entropy => write!(f, "entropy"),
        }
    }
}

impl std::str::FromStr for SplitCriterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gini" => Ok(SplitCriterion::Gini),
            "entropy" => Ok(SplitCriterion::Entropy),
            other => Err(Error::Config(format!("unknown criterion {other:?}"))),
        }
    }
}

/// Class counts collected at a leaf during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative
    }
}

/// Classification rule of the classic baseline: strict majority wins, a tie
/// is Negative.
pub fn majority_label(leaf: &ClassCounts) -> Label {
    if leaf.positive > leaf.negative {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Impurity of a node with the given class counts, in `[0, 1]`.
///
/// gini: `1 - p^2 - q^2`; entropy: `-p log2 p - q log2 q` with `0 log 0 = 0`,
/// where p and q are the class fractions.
pub fn impurity(positive: usize, negative: usize, criterion: SplitCriterion) -> Result<f64> {
    let total = positive + negative;
    if total == 0 {
        return Err(Error::Domain("impurity of an empty node is undefined".into()));
    }
    let p = positive as f64 / total as f64;
    let q = negative as f64 / total as f64;
    Ok(match criterion {
        SplitCriterion::Gini => 1.0 - p * p - q * q,
        SplitCriterion::Entropy => {
            let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
            term(p) + term(q)
        }
    })
}

/// One branch decision on a decision path: `feature op threshold`, with the
/// comparison oriented toward the branch that was taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub feature: usize,
    pub op: CmpOp,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    /// Value is at most the threshold (left branch).
    Le,
    /// Value exceeds the threshold (right branch).
    Gt,
}

/// A decision tree node: either a threshold split or a trained leaf.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf(ClassCounts),
}

impl Node {
    /// Depth in edges of the deepest leaf under this node.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Calls `visit` for every leaf in left-to-right order.
    pub fn for_each_leaf(&self, visit: &mut impl FnMut(&ClassCounts)) {
        match self {
            Node::Leaf(counts) => visit(counts),
            Node::Internal { left, right, .. } => {
                left.for_each_leaf(visit);
                right.for_each_leaf(visit);
            }
        }
    }
}

/// A trained decision tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    root: Node,
    max_depth: Option<usize>,
    criterion: SplitCriterion,
    feature_count: usize,
}

/// Where prediction landed: the leaf's training counts plus the branch
/// conditions taken to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutedLeaf {
    pub counts: ClassCounts,
    pub path: Vec<Condition>,
}

impl Tree {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn max_depth(&self) -> Option<usize> {
        self.max_depth
    }

    pub fn criterion(&self) -> SplitCriterion {
        self.criterion
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Depth in edges of the deepest leaf.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaves(&self) -> Vec<ClassCounts> {
        let mut out = Vec::new();
        self.root.for_each_leaf(&mut |c| out.push(*c));
        out
    }

    /// Assembles a tree from parts, e.g. when loading a model file.
    pub fn from_parts(
        root: Node,
        max_depth: Option<usize>,
        criterion: SplitCriterion,
        feature_count: usize,
    ) -> Self {
        Self { root, max_depth, criterion, feature_count }
    }

    /// Routes a complete sample to a leaf.
    ///
    /// Fails with a missing-value error if routing reaches a condition on a
    /// missing feature; the cascade's tolerant mode handles that case.
    pub fn predict(&self, sample: &[f64]) -> Result<RoutedLeaf> {
        if sample.len() != self.feature_count {
            return Err(Error::Domain(format!(
                "sample has {} features, the tree was trained on {}",
                sample.len(),
                self.feature_count
            )));
        }
        let mut node = &self.root;
        let mut path = Vec::new();
        loop {
            match node {
                Node::Leaf(counts) => return Ok(RoutedLeaf { counts: *counts, path }),
                Node::Internal { feature, threshold, left, right } => {
                    let value = sample[*feature];
                    if is_missing(value) {
                        return Err(Error::MissingValue {
                            feature: *feature,
                            context: "prediction".into(),
                        });
                    }
                    if value <= *threshold {
                        path.push(Condition { feature: *feature, op: CmpOp::Le, threshold: *threshold });
                        node = left;
                    } else {
                        path.push(Condition { feature: *feature, op: CmpOp::Gt, threshold: *threshold });
                        node = right;
                    }
                }
            }
        }
    }

    /// Classic-baseline label for a sample: majority label of its leaf.
    pub fn predict_label(&self, sample: &[f64]) -> Result<Label> {
        Ok(majority_label(&self.predict(sample)?.counts))
    }
}

/// The winning split of a node, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted impurity decrease relative to the unsplit node.
    pub decrease: f64,
}

fn class_counts(dataset: &Dataset, rows: &[usize]) -> ClassCounts {
    let mut counts = ClassCounts { positive: 0, negative: 0 };
    for &i in rows {
        match dataset.label(i) {
            Label::Positive => counts.positive += 1,
            Label::Negative => counts.negative += 1,
        }
    }
    counts
}

fn search_split(
    dataset: &Dataset,
    rows: &[usize],
    criterion: SplitCriterion,
) -> Option<BestSplit> {
    let counts = class_counts(dataset, rows);
    if counts.positive == 0 || counts.negative == 0 || rows.len() < 2 {
        return None;
    }
    let n = rows.len();
    let parent = impurity(counts.positive, counts.negative, criterion).expect("nonempty");

    let mut best: Option<BestSplit> = None;
    let mut column: Vec<(f64, Label)> = Vec::with_capacity(n);
    for feature in 0..dataset.feature_count() {
        column.clear();
        column.extend(rows.iter().map(|&i| (dataset.sample(i)[feature], dataset.label(i))));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = ClassCounts { positive: 0, negative: 0 };
        let mut right = counts;
        for i in 0..n - 1 {
            let (value, label) = column[i];
            match label {
                Label::Positive => {
                    left.positive += 1;
                    right.positive -= 1;
                }
                Label::Negative => {
                    left.negative += 1;
                    right.negative -= 1;
                }
            }
            let next = column[i + 1].0;
            if value == next {
                continue;
            }
            let threshold = (value + next) / 2.0;
            if threshold >= next {
                // Adjacent representable values; no midpoint separates them.
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            let il = impurity(left.positive, left.negative, criterion).expect("nonempty");
            let ir = impurity(right.positive, right.negative, criterion).expect("nonempty");
            let decrease =
                parent - (nl as f64 / n as f64) * il - (nr as f64 / n as f64) * ir;
            if decrease > 0.0 && best.as_ref().is_none_or(|b| decrease > b.decrease) {
                best = Some(BestSplit { feature, threshold, decrease });
            }
        }
    }
    best
}

/// Finds the best split of a whole dataset; `None` when the data is pure or
/// no candidate strictly decreases impurity.
///
/// Assumes the data carries no missing values ([`grow_tree`] rejects them
/// before searching).
pub fn best_split(dataset: &Dataset, criterion: SplitCriterion) -> Option<BestSplit> {
    let rows: Vec<usize> = (0..dataset.len()).collect();
    search_split(dataset, &rows, criterion)
}

fn grow(
    dataset: &Dataset,
    rows: &[usize],
    depth: usize,
    max_depth: Option<usize>,
    criterion: SplitCriterion,
    min_samples_leaf: usize,
) -> Node {
    let counts = class_counts(dataset, rows);
    if counts.positive == 0 || counts.negative == 0 {
        return Node::Leaf(counts);
    }
    if let Some(limit) = max_depth {
        if depth >= limit {
            return Node::Leaf(counts);
        }
    }
    let Some(split) = search_split(dataset, rows, criterion) else {
        return Node::Leaf(counts);
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&i| dataset.sample(i)[split.feature] <= split.threshold);
    if left_rows.len() < min_samples_leaf || right_rows.len() < min_samples_leaf {
        return Node::Leaf(counts);
    }
    Node::Internal {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(dataset, &left_rows, depth + 1, max_depth, criterion, min_samples_leaf)),
        right: Box::new(grow(dataset, &right_rows, depth + 1, max_depth, criterion, min_samples_leaf)),
    }
}

/// Trains a tree by recursive greedy induction. There is no pruning.
///
/// Growth stops at a node when it is pure, the depth bound is reached, no
/// split strictly decreases impurity, or the best split would leave a child
/// with fewer than `min_samples_leaf` samples. Leaves carry the exact class
/// counts of the training samples routed to them.
///
/// Training data must be complete: a missing value is an error.
pub fn grow_tree(
    trainset: &Dataset,
    max_depth: Option<usize>,
    criterion: SplitCriterion,
    min_samples_leaf: usize,
) -> Result<Tree> {
    if trainset.is_empty() {
        return Err(Error::Domain("cannot train a tree on an empty dataset".into()));
    }
    if min_samples_leaf == 0 {
        return Err(Error::Config("min_samples_leaf must be at least 1".into()));
    }
    if let Some(limit) = max_depth {
        if limit == 0 {
            return Err(Error::Config("max_depth must be at least 1 when bounded".into()));
        }
    }
    for (i, (row, _)) in trainset.iter().enumerate() {
        if let Some(feature) = row.iter().position(|&v| is_missing(v)) {
            return Err(Error::MissingValue {
                feature,
                context: format!("training data, sample {i}"),
            });
        }
    }
    let rows: Vec<usize> = (0..trainset.len()).collect();
    let root = grow(trainset, &rows, 0, max_depth, criterion, min_samples_leaf);
    Ok(Tree {
        root,
        max_depth,
        criterion,
        feature_count: trainset.feature_count(),
    })
}
