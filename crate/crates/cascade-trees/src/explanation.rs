//! Explanation masks, exhaustive validity checking, and depth statistics.
//!
//! An explanation for a classification is a Boolean mask over the feature
//! indices: a true bit marks a feature as necessary. The mask is *valid* for
//! a sample when every assignment to the unmasked features leaves the
//! model's label unchanged. For Boolean-feature models that predicate is
//! decidable by enumerating all `2^(k - size)` perturbations, which is what
//! [`check_validity`] does; numeric models get depth statistics only.

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::tree::{CmpOp, Condition};

/// Upper bound on the feature count accepted by [`check_validity`] unless
/// the caller raises it explicitly.
pub const DEFAULT_VALIDITY_CAP: usize = 20;

/// Boolean feature mask marking which features an explanation depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplanationMask {
    bits: Vec<bool>,
}

impl ExplanationMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The trivial explanation: every feature is necessary.
    pub fn all_true(k: usize) -> Self {
        Self { bits: vec![true; k] }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of true bits.
    pub fn size(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_set(&self, feature: usize) -> bool {
        self.bits[feature]
    }
}

/// Builds the mask of features named by a decision path. Repeated features
/// count once.
pub fn mask_from_path(path: &[Condition], feature_count: usize) -> Result<ExplanationMask> {
    let mut bits = vec![false; feature_count];
    for condition in path {
        if condition.feature >= feature_count {
            return Err(Error::Domain(format!(
                "path condition on feature {} but the model has {feature_count} features",
                condition.feature
            )));
        }
        bits[condition.feature] = true;
    }
    Ok(ExplanationMask { bits })
}

/// Result of an exhaustive validity check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    counterexample: Option<Vec<f64>>,
    checked_count: u64,
}

impl ValidityReport {
    /// True when no perturbation changed the label.
    pub fn is_valid(&self) -> bool {
        self.counterexample.is_none()
    }

    /// The lexicographically smallest label-changing perturbation, if any.
    pub fn counterexample(&self) -> Option<&[f64]> {
        self.counterexample.as_deref()
    }

    /// Number of perturbations evaluated (including the one that failed).
    pub fn checked_count(&self) -> u64 {
        self.checked_count
    }
}

/// Exhaustively checks whether `mask` is a valid explanation of
/// `classify(x)`: every assignment to the features where the mask is false
/// must leave the label unchanged.
///
/// `x` must be a Boolean vector (0/1 entries) and the feature count must not
/// exceed `cap` — the search space is `2^(k - size)` perturbations.
/// Enumeration is lexicographic over the free features in ascending index
/// order with 0 before 1, so the reported counterexample is the
/// lexicographically smallest one.
pub fn check_validity(
    classify: impl Fn(&[f64]) -> Label,
    mask: &ExplanationMask,
    x: &[f64],
    cap: usize,
) -> Result<ValidityReport> {
    let k = x.len();
    if mask.len() != k {
        return Err(Error::Domain(format!(
            "mask covers {} features but the sample has {k}",
            mask.len()
        )));
    }
    if k > cap {
        return Err(Error::Resource(format!(
            "validity checking enumerates up to 2^{k} perturbations; {k} features exceed the \
             cap of {cap} (raise the cap or check a smaller model)"
        )));
    }
    if x.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Domain(
            "validity checking is defined for Boolean samples (0/1 values only)".into(),
        ));
    }

    let free: Vec<usize> = (0..k).filter(|&i| !mask.is_set(i)).collect();
    let reference = classify(x);
    let mut probe = x.to_vec();
    let mut checked = 0u64;
    for assignment in 0u64..(1u64 << free.len()) {
        for (j, &feature) in free.iter().enumerate() {
            let bit = (assignment >> (free.len() - 1 - j)) & 1;
            probe[feature] = bit as f64;
        }
        checked += 1;
        if classify(&probe) != reference {
            return Ok(ValidityReport { counterexample: Some(probe), checked_count: checked });
        }
    }
    Ok(ValidityReport { counterexample: None, checked_count: checked })
}

/// Mean explanation depth over Positive predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthStats {
    /// Mean path length; `None` when nothing was predicted Positive.
    pub mean: Option<f64>,
    /// Number of Positive predictions.
    pub count: usize,
}

/// Averages the explanation depths of Positive predictions. Pass `None` for
/// samples predicted Negative; they do not enter the statistic.
pub fn depth_stats(path_lengths: impl IntoIterator<Item = Option<usize>>) -> DepthStats {
    let mut sum = 0usize;
    let mut count = 0usize;
    for length in path_lengths.into_iter().flatten() {
        sum += length;
        count += 1;
    }
    DepthStats {
        mean: (count > 0).then(|| sum as f64 / count as f64),
        count,
    }
}

/// Renders one path condition. Boolean style maps the 0.5 threshold back to
/// the branch value (`Feature = T` / `Feature = F`); numeric style prints
/// the comparison (`f17 ≤ 0.23`).
pub fn render_condition(condition: &Condition, feature_names: &[String], boolean: bool) -> String {
    let name: &str = feature_names
        .get(condition.feature)
        .map(String::as_str)
        .unwrap_or("?");
    if boolean {
        match condition.op {
            CmpOp::Le => format!("{name} = F"),
            CmpOp::Gt => format!("{name} = T"),
        }
    } else {
        match condition.op {
            CmpOp::Le => format!("{name} ≤ {}", condition.threshold),
            CmpOp::Gt => format!("{name} > {}", condition.threshold),
        }
    }
}

/// Renders a decision path as a conjunction.
pub fn render_path(path: &[Condition], feature_names: &[String], boolean: bool) -> String {
    path.iter()
        .map(|c| render_condition(c, feature_names, boolean))
        .collect::<Vec<_>>()
        .join(" and ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{fit_cascade, CascadeConfig};
    use crate::dataset::{load_csv, Dataset, LabelColumn};
    use crate::tree::{grow_tree, SplitCriterion, Tree};

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

    fn classic() -> Tree {
        grow_tree(&table1(), None, SplitCriterion::Gini, 1).unwrap()
    }

    const SAMPLE5: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

    #[test]
    fn classic_path_mask_for_sample5() {
        let routed = classic().predict(&SAMPLE5).unwrap();
        let mask = mask_from_path(&routed.path, 4).unwrap();
        assert_eq!(mask.bits(), &[true, true, true, false]);
        assert_eq!(mask.size(), 3);
    }

    #[test]
    fn cascade_path_mask_for_sample5() {
        let model = fit_cascade(&table1(), &CascadeConfig::default()).unwrap();
        let prediction = model.predict(&SAMPLE5).unwrap();
        let mask = mask_from_path(prediction.path().unwrap(), 4).unwrap();
        assert_eq!(mask.bits(), &[false, false, false, true]);
        assert_eq!(mask.size(), 1);
    }

    #[test]
    fn empty_path_gives_empty_mask() {
        let mask = mask_from_path(&[], 4).unwrap();
        assert_eq!(mask.size(), 0);
        assert_eq!(mask.bits(), &[false; 4]);
    }

    #[test]
    fn out_of_range_feature_rejected() {
        let condition = Condition { feature: 7, op: CmpOp::Le, threshold: 0.5 };
        assert!(mask_from_path(&[condition], 4).is_err());
    }

    #[test]
    fn trivial_mask_is_always_valid() {
        let tree = classic();
        let classify = |v: &[f64]| tree.predict_label(v).unwrap();
        for x in [[0.0, 0.0, 0.0, 1.0], [1.0, 1.0, 1.0, 0.0], [1.0, 0.0, 1.0, 0.0]] {
            let report =
                check_validity(classify, &ExplanationMask::all_true(4), &x, DEFAULT_VALIDITY_CAP)
                    .unwrap();
            assert!(report.is_valid());
            assert_eq!(report.checked_count(), 1);
        }
    }

    #[test]
    fn feature4_alone_explains_sample5_in_the_cascade() {
        let model = fit_cascade(&table1(), &CascadeConfig::default()).unwrap();
        let classify = |v: &[f64]| model.predict(v).unwrap().label();
        let mask = ExplanationMask::new(vec![false, false, false, true]);
        let report = check_validity(classify, &mask, &SAMPLE5, DEFAULT_VALIDITY_CAP).unwrap();
        assert!(report.is_valid());
        assert_eq!(report.checked_count(), 8); // all perturbations of features 1-3
    }

    #[test]
    fn feature4_alone_does_not_explain_sample5_in_the_classic_tree() {
        // Feature4 never appears in the classic tree, so freeing features
        // 1-3 changes the label; the smallest counterexample flips Feature3.
        let tree = classic();
        let classify = |v: &[f64]| tree.predict_label(v).unwrap();
        let mask = ExplanationMask::new(vec![false, false, false, true]);
        let report = check_validity(classify, &mask, &SAMPLE5, DEFAULT_VALIDITY_CAP).unwrap();
        assert!(!report.is_valid());
        assert_eq!(report.counterexample(), Some(&[0.0, 0.0, 1.0, 1.0][..]));
        assert_eq!(report.checked_count(), 2);
    }

    #[test]
    fn feature_count_over_cap_is_resource_error() {
        let x = vec![0.0; 21];
        let mask = ExplanationMask::all_true(21);
        let err = check_validity(|_| Label::Negative, &mask, &x, 20).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn non_boolean_sample_rejected() {
        let mask = ExplanationMask::all_true(2);
        let err = check_validity(|_| Label::Negative, &mask, &[0.5, 1.0], 20).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn depth_stats_basics() {
        let stats = depth_stats([Some(1), Some(2), Some(3)]);
        assert_eq!(stats.mean, Some(2.0));
        assert_eq!(stats.count, 3);

        let empty = depth_stats(std::iter::empty());
        assert_eq!(empty.count, 0);
        assert_eq!(empty.mean, None);

        let mixed = depth_stats([Some(2), None, Some(4), None]);
        assert_eq!(mixed.mean, Some(3.0));
        assert_eq!(mixed.count, 2);
    }

    #[test]
    fn depth_stats_of_training_replay() {
        // Routing S1-S6 through the cascade: S1-S4 fire at depth 2, S5 at
        // depth 1, and S6 never fires.
        let ds = table1();
        let model = fit_cascade(&ds, &CascadeConfig::default()).unwrap();
        let lengths: Vec<Option<usize>> = (0..6)
            .map(|i| model.predict(ds.sample(i)).unwrap().explanation_depth())
            .collect();
        assert_eq!(lengths, vec![Some(2), Some(2), Some(2), Some(2), Some(1), None]);
        let stats = depth_stats(lengths);
        assert_eq!(stats.mean, Some(1.8));
        assert_eq!(stats.count, 5);
    }

    #[test]
    fn rendering_boolean_and_numeric() {
        let names: Vec<String> = ["Feature1", "Feature2", "Feature3", "Feature4"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let model = fit_cascade(&table1(), &CascadeConfig::default()).unwrap();
        let prediction = model.predict(&SAMPLE5).unwrap();
        let rendered = render_path(prediction.path().unwrap(), &names, true);
        assert_eq!(rendered, "Feature4 = T");

        let numeric = Condition { feature: 1, op: CmpOp::Le, threshold: 0.25 };
        assert_eq!(render_condition(&numeric, &names, false), "Feature2 ≤ 0.25");
        let gt = Condition { feature: 0, op: CmpOp::Gt, threshold: 1.5 };
        assert_eq!(render_condition(&gt, &names, false), "Feature1 > 1.5");

        let classic_tree = classic();
        let routed = classic_tree.predict(&SAMPLE5).unwrap();
        assert_eq!(
            render_path(&routed.path, &names, true),
            "Feature1 = F and Feature3 = F and Feature2 = F"
        );
    }
}
