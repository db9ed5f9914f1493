//! Confusion-matrix metrics and cross-validated model comparison.
//!
//! Aggregation over folds follows the micro-average convention: the headline
//! precision/recall/F1/accuracy come from the counts pooled (summed) across
//! folds. Per-fold means of the counts are reported alongside, and so is the
//! arithmetic mean of the per-fold metrics, so both readings of a run are
//! available.

use std::time::Instant;

use serde::Serialize;

use crate::cascade::{fit_cascade, CascadeConfig};
use crate::dataset::{make_folds, split_by_fold, Dataset, Label};
use crate::error::{Error, Result};
use crate::explanation::{depth_stats, DepthStats};
use crate::tree::{grow_tree, majority_label, SplitCriterion};

/// Binary confusion counts with `Positive` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positives + self.true_negatives + self.false_positives + self.false_negatives
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.true_positives += other.true_positives;
        self.true_negatives += other.true_negatives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
    }
}

/// Counts prediction outcomes against ground truth.
pub fn confusion(predictions: &[Label], truths: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::Domain(format!(
            "{} predictions against {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&pred, &truth) in predictions.iter().zip(truths) {
        match (pred, truth) {
            (Label::Positive, Label::Positive) => cm.true_positives += 1,
            (Label::Negative, Label::Negative) => cm.true_negatives += 1,
            (Label::Positive, Label::Negative) => cm.false_positives += 1,
            (Label::Negative, Label::Positive) => cm.false_negatives += 1,
        }
    }
    Ok(cm)
}

/// Derived classification metrics. A `None` marks a 0/0 case, which is
/// reported as undefined rather than silently as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Computes accuracy, precision, recall, and F1 from a confusion matrix.
pub fn derived_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Domain("metrics of an empty confusion matrix are undefined".into()));
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(cm.true_positives, cm.true_positives + cm.false_positives);
    let recall = ratio(cm.true_positives, cm.true_positives + cm.false_negatives);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Metrics {
        accuracy: (cm.true_positives + cm.true_negatives) as f64 / total as f64,
        precision,
        recall,
        f1,
    })
}

/// Which model a cross-validation run trains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Classic decision tree, optionally depth-bounded (in edges).
    Classic { max_depth: Option<usize> },
    /// Cascade with threshold θ and per-subtree depth bound (in node levels).
    Cascade { theta: f64, subtree_max_depth: usize },
}

/// Full model configuration for evaluation runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub criterion: SplitCriterion,
    pub min_samples_leaf: usize,
}

impl ModelSpec {
    pub fn classic(max_depth: Option<usize>) -> Self {
        Self {
            kind: ModelKind::Classic { max_depth },
            criterion: SplitCriterion::Gini,
            min_samples_leaf: 1,
        }
    }

    pub fn cascade(theta: f64, subtree_max_depth: usize) -> Self {
        Self {
            kind: ModelKind::Cascade { theta, subtree_max_depth },
            criterion: SplitCriterion::Gini,
            min_samples_leaf: 1,
        }
    }

    /// Report identifier: `classic`, `classic_depth_bounded`, or `cascade`.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::Classic { max_depth: None } => "classic",
            ModelKind::Classic { max_depth: Some(_) } => "classic_depth_bounded",
            ModelKind::Cascade { .. } => "cascade",
        }
    }

    /// Human-readable description for report tables.
    pub fn describe(&self) -> String {
        match self.kind {
            ModelKind::Classic { max_depth: None } => "classic (unbounded)".to_string(),
            ModelKind::Classic { max_depth: Some(d) } => format!("classic (max_depth={d})"),
            ModelKind::Cascade { theta, subtree_max_depth } => {
                format!("cascade (theta={theta}, depth={subtree_max_depth})")
            }
        }
    }
}

/// Evaluation of one held-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldEval {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub depth: DepthStats,
    pub train_seconds: f64,
}

/// Cross-validated evaluation of one model configuration on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset_name: String,
    pub dataset_fingerprint: u64,
    pub fold_count: usize,
    pub seed: u64,
    pub model: ModelSpec,
    pub folds: Vec<FoldEval>,
    /// Counts summed across folds (covers every sample exactly once).
    pub pooled: ConfusionMatrix,
    /// Metrics from the pooled counts (micro average); the headline numbers.
    pub pooled_metrics: Metrics,
    /// Arithmetic mean of the per-fold metrics (macro average); undefined
    /// per-fold values are skipped, and the mean is `None` if every fold was
    /// undefined.
    pub mean_fold_metrics: MeanMetrics,
    /// Per-fold means of tp, tn, fp, fn, in that order.
    pub mean_counts: [f64; 4],
    /// Explanation depth pooled over every Positive prediction in every fold.
    pub depth: DepthStats,
    /// Wall-clock seconds for the whole run. Informational; excluded from
    /// determinism comparisons.
    pub runtime_seconds: f64,
}

/// Macro-averaged metrics; every entry can be undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn mean_of_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Runs k-fold cross validation of one model configuration.
///
/// Folds come from [`make_folds`] (seeded, pinned shuffle), so the same
/// `(dataset, fold_count, seed)` always evaluates the same partitions.
/// Explanation depth counts the fired subtree's path for cascades and the
/// full decision path of Positive predictions for classic trees.
pub fn cross_validate(
    dataset: &Dataset,
    dataset_name: &str,
    fold_count: usize,
    seed: u64,
    spec: &ModelSpec,
) -> Result<EvalReport> {
    let started = Instant::now();
    let folds = make_folds(dataset, fold_count, seed)?;
    let mut fold_evals: Vec<FoldEval> = Vec::with_capacity(fold_count);
    let mut pooled = ConfusionMatrix::default();
    let mut depth_len_sum = 0usize;
    let mut depth_count = 0usize;

    for fold in 0..fold_count {
        let (train, test) = split_by_fold(dataset, &folds, fold)?;
        let train_started = Instant::now();

        let mut predictions = Vec::with_capacity(test.len());
        let mut path_lengths: Vec<Option<usize>> = Vec::with_capacity(test.len());
        let train_seconds;
        match spec.kind {
            ModelKind::Classic { max_depth } => {
                let tree = grow_tree(&train, max_depth, spec.criterion, spec.min_samples_leaf)?;
                train_seconds = train_started.elapsed().as_secs_f64();
                for (row, _) in test.iter() {
                    let routed = tree.predict(row)?;
                    let label = majority_label(&routed.counts);
                    predictions.push(label);
                    path_lengths.push((label == Label::Positive).then_some(routed.path.len()));
                }
            }
            ModelKind::Cascade { theta, subtree_max_depth } => {
                let config = CascadeConfig {
                    theta,
                    subtree_max_depth,
                    criterion: spec.criterion,
                    min_samples_leaf: spec.min_samples_leaf,
                    iteration_cap: None,
                };
                let model = fit_cascade(&train, &config)?;
                train_seconds = train_started.elapsed().as_secs_f64();
                for (row, _) in test.iter() {
                    let prediction = model.predict(row)?;
                    predictions.push(prediction.label());
                    path_lengths.push(prediction.explanation_depth());
                }
            }
        }

        let cm = confusion(&predictions, test.labels())?;
        let metrics = derived_metrics(&cm)?;
        let depth = depth_stats(path_lengths.iter().copied());
        depth_len_sum += path_lengths.iter().flatten().sum::<usize>();
        depth_count += depth.count;
        pooled.add(&cm);
        fold_evals.push(FoldEval { fold, confusion: cm, metrics, depth, train_seconds });
    }

    let pooled_metrics = derived_metrics(&pooled)?;
    let mean_fold_metrics = MeanMetrics {
        accuracy: mean_of_defined(fold_evals.iter().map(|f| Some(f.metrics.accuracy))),
        precision: mean_of_defined(fold_evals.iter().map(|f| f.metrics.precision)),
        recall: mean_of_defined(fold_evals.iter().map(|f| f.metrics.recall)),
        f1: mean_of_defined(fold_evals.iter().map(|f| f.metrics.f1)),
    };
    let per_fold = fold_count as f64;
    let mean_counts = [
        pooled.true_positives as f64 / per_fold,
        pooled.true_negatives as f64 / per_fold,
        pooled.false_positives as f64 / per_fold,
        pooled.false_negatives as f64 / per_fold,
    ];
    let depth = DepthStats {
        mean: (depth_count > 0).then(|| depth_len_sum as f64 / depth_count as f64),
        count: depth_count,
    };

    Ok(EvalReport {
        dataset_name: dataset_name.to_string(),
        dataset_fingerprint: dataset.fingerprint(),
        fold_count,
        seed,
        model: *spec,
        folds: fold_evals,
        pooled,
        pooled_metrics,
        mean_fold_metrics,
        mean_counts,
        depth,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Comparison of several model configurations evaluated on the same data and
/// fold assignment.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub reports: Vec<EvalReport>,
    /// Relative depth reduction of the first cascade versus the first
    /// unbounded classic report: `(classic - cascade) / classic`. `None`
    /// when either side produced no Positive predictions.
    pub depth_improvement: Option<f64>,
}

/// One line of the machine-readable report stream.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord {
    pub record: &'static str,
    pub dataset: String,
    pub dataset_fingerprint: String,
    pub fold_count: usize,
    pub seed: u64,
    pub model: String,
    pub model_description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub mean_explanation_depth: Option<f64>,
    pub explained_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_counts: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_improvement: Option<f64>,
}

fn compatible(a: &EvalReport, b: &EvalReport) -> bool {
    a.dataset_fingerprint == b.dataset_fingerprint
        && a.fold_count == b.fold_count
        && a.seed == b.seed
}

/// Builds a comparison across model configurations.
///
/// All reports must share the dataset, fold count, and seed; needs at least
/// one unbounded classic report and one cascade report.
pub fn compare_report(reports: &[EvalReport]) -> Result<Comparison> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Config("no reports to compare".into()))?;
    if let Some(bad) = reports.iter().find(|r| !compatible(first, r)) {
        return Err(Error::Config(format!(
            "reports are not comparable: {} (folds={}, seed={}) vs {} (folds={}, seed={})",
            first.dataset_name,
            first.fold_count,
            first.seed,
            bad.dataset_name,
            bad.fold_count,
            bad.seed
        )));
    }
    let classic = reports
        .iter()
        .find(|r| matches!(r.model.kind, ModelKind::Classic { max_depth: None }))
        .ok_or_else(|| Error::Config("comparison needs an unbounded classic report".into()))?;
    let cascade = reports
        .iter()
        .find(|r| matches!(r.model.kind, ModelKind::Cascade { .. }))
        .ok_or_else(|| Error::Config("comparison needs a cascade report".into()))?;

    let depth_improvement = match (classic.depth.mean, cascade.depth.mean) {
        (Some(c), Some(k)) if c > 0.0 => Some((c - k) / c),
        _ => None,
    };
    Ok(Comparison { reports: reports.to_vec(), depth_improvement })
}

fn fmt_pct(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "n/a".to_string(),
    }
}

fn fmt_depth(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.3}"),
        None => "n/a".to_string(),
    }
}

impl Comparison {
    /// Aligned plain-text table, one row per model, mirroring the usual
    /// depth/accuracy/counts layout. Counts are per-fold means; percentages
    /// come from pooled counts.
    pub fn render_text(&self) -> String {
        let first = &self.reports[0];
        let mut out = String::new();
        out.push_str(&format!(
            "dataset: {}  (fingerprint {:016x}, {} folds, seed {})\n",
            first.dataset_name, first.dataset_fingerprint, first.fold_count, first.seed
        ));
        out.push_str(&format!(
            "{:<28} {:>7} {:>9} {:>11} {:>7} {:>7} {:>7} {:>7} {:>10} {:>8} {:>8}\n",
            "model", "depth", "accuracy", "runtime(s)", "tp", "tn", "fp", "fn", "precision",
            "recall", "f1"
        ));
        for report in &self.reports {
            out.push_str(&format!(
                "{:<28} {:>7} {:>9} {:>11.3} {:>7.1} {:>7.1} {:>7.1} {:>7.1} {:>10} {:>8} {:>8}\n",
                report.model.describe(),
                fmt_depth(report.depth.mean),
                fmt_pct(Some(report.pooled_metrics.accuracy)),
                report.runtime_seconds,
                report.mean_counts[0],
                report.mean_counts[1],
                report.mean_counts[2],
                report.mean_counts[3],
                fmt_pct(report.pooled_metrics.precision),
                fmt_pct(report.pooled_metrics.recall),
                fmt_pct(report.pooled_metrics.f1),
            ));
        }
        match self.depth_improvement {
            Some(improvement) => out.push_str(&format!(
                "depth improvement: cascade explanations are {:.1}% shorter than classic (unbounded)\n",
                improvement * 100.0
            )),
            None => out.push_str("depth improvement: n/a (no positive predictions to compare)\n"),
        }
        out
    }

    /// Machine-readable records: one per (model, fold), then one aggregate
    /// per model. Timing is deliberately absent so the stream is
    /// byte-deterministic for a fixed seed.
    pub fn records(&self) -> Vec<ReportRecord> {
        let mut records = Vec::new();
        for report in &self.reports {
            for fold in &report.folds {
                records.push(ReportRecord {
                    record: "fold",
                    dataset: report.dataset_name.clone(),
                    dataset_fingerprint: format!("{:016x}", report.dataset_fingerprint),
                    fold_count: report.fold_count,
                    seed: report.seed,
                    model: report.model.kind_name().to_string(),
                    model_description: report.model.describe(),
                    fold: Some(fold.fold),
                    tp: fold.confusion.true_positives,
                    tn: fold.confusion.true_negatives,
                    fp: fold.confusion.false_positives,
                    fn_: fold.confusion.false_negatives,
                    accuracy: fold.metrics.accuracy,
                    precision: fold.metrics.precision,
                    recall: fold.metrics.recall,
                    f1: fold.metrics.f1,
                    mean_explanation_depth: fold.depth.mean,
                    explained_count: fold.depth.count,
                    mean_counts: None,
                    depth_improvement: None,
                });
            }
        }
        for report in &self.reports {
            let is_cascade = matches!(report.model.kind, ModelKind::Cascade { .. });
            records.push(ReportRecord {
                record: "aggregate",
                dataset: report.dataset_name.clone(),
                dataset_fingerprint: format!("{:016x}", report.dataset_fingerprint),
                fold_count: report.fold_count,
                seed: report.seed,
                model: report.model.kind_name().to_string(),
                model_description: report.model.describe(),
                fold: None,
                tp: report.pooled.true_positives,
                tn: report.pooled.true_negatives,
                fp: report.pooled.false_positives,
                fn_: report.pooled.false_negatives,
                accuracy: report.pooled_metrics.accuracy,
                precision: report.pooled_metrics.precision,
                recall: report.pooled_metrics.recall,
                f1: report.pooled_metrics.f1,
                mean_explanation_depth: report.depth.mean,
                explained_count: report.depth.count,
                mean_counts: Some(report.mean_counts),
                depth_improvement: if is_cascade { self.depth_improvement } else { None },
            });
        }
        records
    }

    /// Records rendered as JSON Lines.
    pub fn render_jsonl(&self) -> String {
        let mut out = String::new();
        for record in self.records() {
            out.push_str(&serde_json::to_string(&record).expect("report records serialize"));
            out.push('\n');
        }
        out
    }
}
