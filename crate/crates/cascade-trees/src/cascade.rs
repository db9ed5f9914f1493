//! Cascading decision trees: training and sequential testing.
//!
//! Training grows a sequence of depth-bounded subtrees. After each subtree,
//! the Positive-labeled samples that routed to a positive leaf (mixed value
//! at least θ) are removed, and the next subtree is trained on what remains.
//! The sequence ends when a subtree has no positive leaf.
//!
//! Testing runs the subtrees in order; the first one routing the sample to a
//! positive leaf classifies it Positive, and that subtree's decision path —
//! never the paths of the subtrees before it — is the explanation.

use std::fmt;

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::tree::{grow_tree, ClassCounts, Condition, Node, SplitCriterion, Tree};

/// Fraction of the training samples at a leaf whose ground-truth label is
/// Positive.
pub fn mixed(leaf: &ClassCounts) -> Result<f64> {
    if leaf.total() == 0 {
        return Err(Error::Domain("mixed value of an empty leaf is undefined".into()));
    }
    Ok(leaf.positive as f64 / leaf.total() as f64)
}

/// True when the leaf's mixed value reaches θ (inclusive). An empty leaf
/// never fires; trained leaves are never empty.
pub fn is_positive_leaf(leaf: &ClassCounts, theta: f64) -> bool {
    leaf.total() > 0 && leaf.positive as f64 / leaf.total() as f64 >= theta
}

fn has_positive_leaf(tree: &Tree, theta: f64) -> bool {
    let mut found = false;
    tree.root().for_each_leaf(&mut |leaf| found |= is_positive_leaf(leaf, theta));
    found
}

/// Training parameters for a cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    /// Minimum mixed value for a leaf to classify Positive; in `(0, 1]`.
    pub theta: f64,
    /// Depth bound of every subtree, counted in node levels: a bound of d
    /// allows at most d − 1 branch conditions on any root-to-leaf path, so a
    /// bound of 3 yields subtrees whose explanations have depth 1 or 2.
    pub subtree_max_depth: usize,
    pub criterion: SplitCriterion,
    pub min_samples_leaf: usize,
    /// Hard cap on the number of subtrees; defaults to n + 1 when `None`.
    pub iteration_cap: Option<usize>,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            theta: 0.8,
            subtree_max_depth: 3,
            criterion: SplitCriterion::Gini,
            min_samples_leaf: 1,
            iteration_cap: None,
        }
    }
}

/// Why cascade training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Natural end: the final subtree has no positive leaf.
    NoPositiveLeaf,
    /// Safeguard: an iteration removed no samples.
    NoProgress,
    /// Safeguard: no Positive-labeled samples remained for the next round.
    NoPositivesLeft,
    /// Safeguard: the iteration cap was reached.
    IterationCap,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminationReason::NoPositiveLeaf => write!(f, "final subtree has no positive leaf"),
            TerminationReason::NoProgress => write!(f, "no samples removed in an iteration"),
            TerminationReason::NoPositivesLeft => write!(f, "no positive samples remained"),
            TerminationReason::IterationCap => write!(f, "iteration cap reached"),
        }
    }
}

/// A trained cascade: an ordered list of depth-bounded subtrees sharing one
/// threshold θ.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    subtrees: Vec<Tree>,
    theta: f64,
    subtree_max_depth: usize,
    feature_names: Vec<String>,
    criterion: SplitCriterion,
    min_samples_leaf: usize,
    boolean_features: bool,
    termination: TerminationReason,
    round_train_sizes: Vec<usize>,
}

/// Outcome of cascade prediction on a complete sample.
#[derive(Debug, Clone, PartialEq)]
pub enum CascadePrediction {
    /// Some subtree fired: `subtree` is the first firing index, `path` its
    /// decision path (the explanation).
    Positive { subtree: usize, path: Vec<Condition> },
    /// No subtree fired.
    Negative,
}

impl CascadePrediction {
    pub fn label(&self) -> Label {
        match self {
            CascadePrediction::Positive { .. } => Label::Positive,
            CascadePrediction::Negative => Label::Negative,
        }
    }

    pub fn fired_subtree(&self) -> Option<usize> {
        match self {
            CascadePrediction::Positive { subtree, .. } => Some(*subtree),
            CascadePrediction::Negative => None,
        }
    }

    pub fn path(&self) -> Option<&[Condition]> {
        match self {
            CascadePrediction::Positive { path, .. } => Some(path),
            CascadePrediction::Negative => None,
        }
    }

    /// Length of the explanation path for Positive predictions.
    pub fn explanation_depth(&self) -> Option<usize> {
        self.path().map(<[Condition]>::len)
    }
}

/// Outcome of tolerant cascade prediction on a sample that may carry missing
/// values. A subtree whose routing needs a missing feature is skipped; if
/// nothing fired and at least one subtree was skipped the outcome is
/// `Unknown`.
#[derive(Debug, Clone, PartialEq)]
pub enum TolerantPrediction {
    Positive { subtree: usize, path: Vec<Condition> },
    Negative,
    Unknown,
}

impl TolerantPrediction {
    pub fn path(&self) -> Option<&[Condition]> {
        match self {
            TolerantPrediction::Positive { path, .. } => Some(path),
            _ => None,
        }
    }
}

impl CascadeModel {
    pub fn subtrees(&self) -> &[Tree] {
        &self.subtrees
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn subtree_max_depth(&self) -> usize {
        self.subtree_max_depth
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn criterion(&self) -> SplitCriterion {
        self.criterion
    }

    pub fn min_samples_leaf(&self) -> usize {
        self.min_samples_leaf
    }

    /// True if the training data was entirely 0/1-valued, enabling Boolean
    /// rendering of explanations and exhaustive validity checking.
    pub fn boolean_features(&self) -> bool {
        self.boolean_features
    }

    pub fn termination(&self) -> TerminationReason {
        self.termination
    }

    /// Training-set size at the start of each round, one entry per subtree.
    pub fn round_train_sizes(&self) -> &[usize] {
        &self.round_train_sizes
    }

    /// Reassembles a model from parts, e.g. when loading a model file.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        subtrees: Vec<Tree>,
        theta: f64,
        subtree_max_depth: usize,
        feature_names: Vec<String>,
        criterion: SplitCriterion,
        min_samples_leaf: usize,
        boolean_features: bool,
        termination: TerminationReason,
        round_train_sizes: Vec<usize>,
    ) -> Result<Self> {
        if subtrees.is_empty() {
            return Err(Error::Domain("a cascade must have at least one subtree".into()));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Config(format!("theta must be in (0, 1], got {theta}")));
        }
        Ok(Self {
            subtrees,
            theta,
            subtree_max_depth,
            feature_names,
            criterion,
            min_samples_leaf,
            boolean_features,
            termination,
            round_train_sizes,
        })
    }

    /// Sequential cascade testing: subtrees are evaluated in order and the
    /// first positive leaf wins. The sample must be complete; use
    /// [`CascadeModel::predict_tolerant`] when values may be missing.
    pub fn predict(&self, sample: &[f64]) -> Result<CascadePrediction> {
        for (index, tree) in self.subtrees.iter().enumerate() {
            let routed = tree.predict(sample)?;
            if is_positive_leaf(&routed.counts, self.theta) {
                return Ok(CascadePrediction::Positive { subtree: index, path: routed.path });
            }
        }
        Ok(CascadePrediction::Negative)
    }

    /// Cascade testing with per-subtree skipping of missing values: a
    /// subtree that reaches a condition on a missing feature is treated as
    /// not firing. On samples with no missing values this is identical to
    /// [`CascadeModel::predict`].
    pub fn predict_tolerant(&self, sample: &[f64]) -> Result<TolerantPrediction> {
        let mut skipped = false;
        for (index, tree) in self.subtrees.iter().enumerate() {
            match tree.predict(sample) {
                Ok(routed) => {
                    if is_positive_leaf(&routed.counts, self.theta) {
                        return Ok(TolerantPrediction::Positive { subtree: index, path: routed.path });
                    }
                }
                Err(Error::MissingValue { .. }) => skipped = true,
                Err(other) => return Err(other),
            }
        }
        Ok(if skipped { TolerantPrediction::Unknown } else { TolerantPrediction::Negative })
    }
}

/// Row indices of `trainset` that survive true-positive removal: every
/// Negative sample is retained, and a Positive sample is retained unless it
/// routes to a positive leaf of `tree`.
pub fn retained_after_removal(tree: &Tree, trainset: &Dataset, theta: f64) -> Result<Vec<usize>> {
    let mut kept = Vec::with_capacity(trainset.len());
    for (i, (row, label)) in trainset.iter().enumerate() {
        let remove = label == Label::Positive && {
            let routed = tree.predict(row)?;
            is_positive_leaf(&routed.counts, theta)
        };
        if !remove {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// True-positive removal as a dataset operation. Errors only in the corner
/// case where nothing survives (a dataset cannot be empty).
pub fn remove_true_positives(tree: &Tree, trainset: &Dataset, theta: f64) -> Result<Dataset> {
    let kept = retained_after_removal(tree, trainset, theta)?;
    trainset.subset(&kept)
}

fn grow_subtree(
    trainset: &Dataset,
    subtree_max_depth: usize,
    criterion: SplitCriterion,
    min_samples_leaf: usize,
) -> Result<Tree> {
    if subtree_max_depth == 1 {
        // One node level: the subtree is a bare leaf.
        let counts = ClassCounts {
            positive: trainset.positive_count(),
            negative: trainset.negative_count(),
        };
        return Ok(Tree::from_parts(
            Node::Leaf(counts),
            None,
            criterion,
            trainset.feature_count(),
        ));
    }
    grow_tree(trainset, Some(subtree_max_depth - 1), criterion, min_samples_leaf)
}

/// Trains a cascade.
///
/// Each round grows one subtree on the current training set. If the subtree
/// has a positive leaf, the true positives (Positive-labeled samples routed
/// to positive leaves) are removed and another round runs; otherwise
/// training ends. Because a positive leaf always contains at least one
/// Positive training sample for θ > 0, every non-final round removes at
/// least one sample, so at most `positive_count + 1` subtrees are built.
/// The remaining stops (no removal, no positives left, iteration cap) are
/// recorded in [`CascadeModel::termination`] when they cut the loop short.
pub fn fit_cascade(trainset: &Dataset, config: &CascadeConfig) -> Result<CascadeModel> {
    if !(config.theta > 0.0 && config.theta <= 1.0) {
        return Err(Error::Config(format!("theta must be in (0, 1], got {}", config.theta)));
    }
    if config.subtree_max_depth == 0 {
        return Err(Error::Config("subtree_max_depth must be at least 1".into()));
    }
    if trainset.is_empty() {
        return Err(Error::Domain("cannot train a cascade on an empty dataset".into()));
    }
    let cap = config.iteration_cap.unwrap_or(trainset.len() + 1);

    let mut subtrees = Vec::new();
    let mut round_train_sizes = Vec::new();
    let mut current = trainset.clone();
    let termination = loop {
        round_train_sizes.push(current.len());
        let tree = grow_subtree(
            &current,
            config.subtree_max_depth,
            config.criterion,
            config.min_samples_leaf,
        )?;
        let fired = has_positive_leaf(&tree, config.theta);
        subtrees.push(tree);
        if !fired {
            break TerminationReason::NoPositiveLeaf;
        }
        let kept = retained_after_removal(subtrees.last().unwrap(), &current, config.theta)?;
        if kept.len() == current.len() {
            break TerminationReason::NoProgress;
        }
        if kept.is_empty() {
            break TerminationReason::NoPositivesLeft;
        }
        let next = current.subset(&kept)?;
        if next.positive_count() == 0 {
            break TerminationReason::NoPositivesLeft;
        }
        if subtrees.len() >= cap {
            break TerminationReason::IterationCap;
        }
        current = next;
    };

    Ok(CascadeModel {
        subtrees,
        theta: config.theta,
        subtree_max_depth: config.subtree_max_depth,
        feature_names: trainset.feature_names().to_vec(),
        criterion: config.criterion,
        min_samples_leaf: config.min_samples_leaf,
        boolean_features: trainset.is_boolean(),
        termination,
        round_train_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv, LabelColumn, MISSING};
    use crate::tree::CmpOp;

    fn table1() -> Dataset {
        let manifest = env!("CARGO_MANIFEST_DIR");
        load_csv(
            format!("{manifest}/../../data/synthetic.csv"),
            &LabelColumn::Name("Label".into()),
            "Positive",
            true,
        )
        .unwrap()
    }

    fn table1_cascade() -> CascadeModel {
        fit_cascade(&table1(), &CascadeConfig::default()).unwrap()
    }

    fn counts(p: usize, n: usize) -> ClassCounts {
        ClassCounts { positive: p, negative: n }
    }

    #[test]
    fn mixed_values() {
        assert_eq!(mixed(&counts(4, 0)).unwrap(), 1.0);
        assert!((mixed(&counts(1, 2)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mixed(&counts(0, 2)).unwrap(), 0.0);
        assert!(mixed(&counts(0, 0)).is_err());
    }

    #[test]
    fn positive_leaf_threshold_is_inclusive() {
        assert!(is_positive_leaf(&counts(4, 1), 0.8)); // 0.8 >= 0.8
        assert!(!is_positive_leaf(&counts(3, 1), 0.8)); // 0.75 < 0.8
        assert!(is_positive_leaf(&counts(1, 0), 0.8));
    }

    #[test]
    fn synthetic_cascade_structure() {
        let model = table1_cascade();
        assert_eq!(model.subtrees().len(), 3);
        assert_eq!(model.termination(), TerminationReason::NoPositiveLeaf);
        assert_eq!(model.round_train_sizes(), &[10, 6, 5]);
        assert!(model.boolean_features());

        // Subtree 1 isolates S1-S4 in its only positive leaf.
        let leaves0 = model.subtrees()[0].leaves();
        let firing: Vec<_> = leaves0.iter().filter(|l| is_positive_leaf(l, 0.8)).collect();
        assert_eq!(firing, vec![&counts(4, 0)]);

        // Subtree 2 isolates S5 in a positive leaf one condition deep.
        let routed = model.subtrees()[1].predict(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(routed.counts, counts(1, 0));
        assert_eq!(routed.path.len(), 1);
        assert_eq!(routed.path[0].feature, 3);

        // Subtree 3 has no positive leaf.
        let leaves2 = model.subtrees()[2].leaves();
        assert!(leaves2.iter().all(|l| !is_positive_leaf(l, 0.8)));

        // Depth bound: levels 3 means at most 2 conditions per path.
        for tree in model.subtrees() {
            assert!(tree.depth() <= 2);
        }
    }

    #[test]
    fn new_sample_fires_second_subtree_with_depth_one() {
        let model = table1_cascade();
        let prediction = model.predict(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        match &prediction {
            CascadePrediction::Positive { subtree, path } => {
                assert_eq!(*subtree, 1);
                assert_eq!(path.len(), 1);
                assert_eq!(path[0].feature, 3);
                assert_eq!(path[0].op, CmpOp::Gt);
            }
            other => panic!("expected Positive, got {other:?}"),
        }
        assert_eq!(prediction.explanation_depth(), Some(1));
    }

    #[test]
    fn first_subtree_fires_for_sample1() {
        let model = table1_cascade();
        let prediction = model.predict(&[1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(prediction.fired_subtree(), Some(0));
        let path = prediction.path().unwrap();
        assert_eq!(path.len(), 2);
        assert_eq!((path[0].feature, path[0].op), (0, CmpOp::Gt));
        assert_eq!((path[1].feature, path[1].op), (1, CmpOp::Gt));
    }

    #[test]
    fn sample9_is_negative_with_no_path() {
        let model = table1_cascade();
        let prediction = model.predict(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(prediction, CascadePrediction::Negative);
        assert_eq!(prediction.path(), None);
        assert_eq!(prediction.fired_subtree(), None);
    }

    #[test]
    fn all_negative_trainset_terminates_immediately() {
        let ds = Dataset::new(
            vec!["x".into()],
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![Label::Negative; 3],
        )
        .unwrap();
        let model = fit_cascade(&ds, &CascadeConfig::default()).unwrap();
        assert_eq!(model.subtrees().len(), 1);
        assert_eq!(model.termination(), TerminationReason::NoPositiveLeaf);
        assert_eq!(model.subtrees()[0].leaves(), vec![counts(0, 3)]);
    }

    #[test]
    fn all_positive_trainset_stops_when_no_positives_remain() {
        let ds = Dataset::new(
            vec!["x".into()],
            vec![vec![0.0], vec![1.0]],
            vec![Label::Positive; 2],
        )
        .unwrap();
        let model = fit_cascade(&ds, &CascadeConfig::default()).unwrap();
        assert_eq!(model.termination(), TerminationReason::NoPositivesLeft);
        assert_eq!(model.subtrees().len(), 1);
    }

    #[test]
    fn theta_out_of_range_rejected() {
        let ds = table1();
        for theta in [0.0, -0.5, 1.0001] {
            let config = CascadeConfig { theta, ..CascadeConfig::default() };
            assert!(matches!(fit_cascade(&ds, &config), Err(Error::Config(_))));
        }
        let config = CascadeConfig { theta: 1.0, ..CascadeConfig::default() };
        assert!(fit_cascade(&ds, &config).is_ok());
    }

    #[test]
    fn removal_drops_exactly_the_first_four_samples() {
        let ds = table1();
        let model = table1_cascade();
        let remaining = remove_true_positives(&model.subtrees()[0], &ds, 0.8).unwrap();
        let expected = ds.subset(&[4, 5, 6, 7, 8, 9]).unwrap();
        assert_eq!(remaining, expected);
    }

    #[test]
    fn tree_without_positive_leaf_removes_nothing() {
        let ds = table1();
        let model = table1_cascade();
        let last = model.subtrees().last().unwrap();
        let remaining = remove_true_positives(last, &ds, 0.8).unwrap();
        assert_eq!(remaining, ds);
    }

    #[test]
    fn false_positive_sample_is_retained() {
        // Five identical rows, four Positive and one Negative: the tree is a
        // single leaf with mixed exactly 0.8, so it fires, the four true
        // positives go, and the misclassified Negative stays.
        let ds = Dataset::new(
            vec!["x".into()],
            vec![vec![0.0]; 5],
            vec![
                Label::Positive,
                Label::Positive,
                Label::Positive,
                Label::Positive,
                Label::Negative,
            ],
        )
        .unwrap();
        let tree = grow_tree(&ds, Some(2), SplitCriterion::Gini, 1).unwrap();
        assert!(has_positive_leaf(&tree, 0.8));
        let remaining = remove_true_positives(&tree, &ds, 0.8).unwrap();
        assert_eq!(remaining.len(), 1);
        assert_eq!(remaining.label(0), Label::Negative);
    }

    #[test]
    fn tolerant_future_work_sample() {
        // Feature2 missing; the first subtree resolves without it, the
        // second fires on Feature4 alone.
        let model = table1_cascade();
        let got = model.predict_tolerant(&[0.0, MISSING, 0.0, 1.0]).unwrap();
        match got {
            TolerantPrediction::Positive { subtree, ref path } => {
                assert_eq!(subtree, 1);
                assert_eq!(path.len(), 1);
                assert_eq!(path[0].feature, 3);
            }
            other => panic!("expected Positive, got {other:?}"),
        }
    }

    #[test]
    fn tolerant_equals_plain_on_complete_samples() {
        let ds = table1();
        let model = table1_cascade();
        for (row, _) in ds.iter() {
            let plain = model.predict(row).unwrap();
            let tolerant = model.predict_tolerant(row).unwrap();
            match (plain, tolerant) {
                (
                    CascadePrediction::Positive { subtree: a, path: p },
                    TolerantPrediction::Positive { subtree: b, path: q },
                ) => {
                    assert_eq!(a, b);
                    assert_eq!(p, q);
                }
                (CascadePrediction::Negative, TolerantPrediction::Negative) => {}
                (plain, tolerant) => panic!("diverged: {plain:?} vs {tolerant:?}"),
            }
        }
    }

    #[test]
    fn all_missing_sample_is_unknown() {
        let model = table1_cascade();
        let got = model.predict_tolerant(&[MISSING; 4]).unwrap();
        assert_eq!(got, TolerantPrediction::Unknown);
    }

    #[test]
    fn plain_prediction_rejects_missing_values() {
        let model = table1_cascade();
        let err = model.predict(&[0.0, MISSING, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::MissingValue { .. }));
    }

    #[test]
    fn subtree_count_bounded_by_positives_plus_one() {
        let ds = table1();
        let model = table1_cascade();
        assert!(model.subtrees().len() <= ds.positive_count() + 1);
    }

    #[test]
    fn leaf_level_depth_bound_of_one_gives_bare_leaves() {
        let config = CascadeConfig { subtree_max_depth: 1, ..CascadeConfig::default() };
        let model = fit_cascade(&table1(), &config).unwrap();
        assert_eq!(model.subtrees().len(), 1);
        assert_eq!(model.subtrees()[0].depth(), 0);
        assert_eq!(model.termination(), TerminationReason::NoPositiveLeaf);
    }

    #[test]
    fn training_sizes_strictly_decrease() {
        let model = table1_cascade();
        for pair in model.round_train_sizes().windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }
}
