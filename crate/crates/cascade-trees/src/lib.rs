//! Cascading decision trees for binary classification with succinct,
//! formally valid explanations of positive predictions.
//!
//! A cascade is an ordered sequence of depth-bounded CART subtrees. Each
//! subtree is trained on the samples the previous rounds did not already
//! explain: after a subtree is grown, every Positive-labeled training sample
//! that lands in one of its *positive leaves* (leaves whose training mixture
//! is at least a threshold θ) is removed, and the next subtree is trained on
//! the remainder. At prediction time the subtrees run in order; the first
//! positive leaf hit classifies the sample Positive and that subtree's short
//! decision path — not the concatenation of everything before it — is the
//! explanation. If no subtree fires, the sample is Negative.
//!
//! Compared to one monolithic tree, the per-subtree depth bound keeps every
//! explanation short, while later subtrees recover the accuracy a single
//! shallow tree would lose. Explanations are *valid* in a checkable sense:
//! holding the explanation's features fixed, no assignment to the remaining
//! features can flip the classification ([`explanation::check_validity`]
//! verifies this exhaustively for Boolean features).
//!
//! # Quick start
//!
//! ```
//! use cascade_trees::{
//!     cascade::{fit_cascade, CascadeConfig},
//!     dataset::{load_csv, LabelColumn},
//!     explanation::render_path,
//! };
//!
//! # fn main() -> Result<(), cascade_trees::Error> {
//! let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/synthetic.csv");
//! let data = load_csv(dir, &LabelColumn::Name("Label".into()), "Positive", true)?;
//! let model = fit_cascade(&data, &CascadeConfig::default())?;
//!
//! // A new sample: Feature4 = T, everything else F.
//! let prediction = model.predict(&[0.0, 0.0, 0.0, 1.0])?;
//! let path = prediction.path().expect("classified Positive");
//! assert_eq!(render_path(path, model.feature_names(), true), "Feature4 = T");
//! # Ok(())
//! # }
//! ```
//!
//! The `cascade-trees` binary exposes the same functionality as `train`,
//! `predict`, `eval`, `check-validity`, and `export` subcommands, and the
//! crate's `examples/` directory walks through each capability.

pub mod cascade;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod explanation;
pub mod metrics;
pub mod model_io;
pub mod rng;
pub mod tree;

pub use cascade::{fit_cascade, CascadeConfig, CascadeModel, CascadePrediction, TolerantPrediction};
pub use dataset::{load_csv, make_folds, split_by_fold, Dataset, FoldSplit, Label, LabelColumn};
pub use error::{Error, Result};
pub use explanation::{check_validity, depth_stats, mask_from_path, ExplanationMask, ValidityReport};
pub use metrics::{
    compare_report, confusion, cross_validate, derived_metrics, ConfusionMatrix, EvalReport,
    Metrics, ModelKind, ModelSpec,
};
pub use model_io::{load_model, save_model, ClassicModel, ModelMetadata, TrainedModel};
pub use tree::{
    best_split, grow_tree, impurity, majority_label, ClassCounts, CmpOp, Condition, Node,
    SplitCriterion, Tree,
};
