//! Model files: versioned, human-readable JSON for trained models.
//!
//! Trees are stored as nested nodes so a model file can be read the way the
//! model would be drawn. Thresholds serialize in shortest round-trip decimal
//! form, which reloads to the identical bits, so routing is stable across
//! save/load.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeModel, TerminationReason};
use crate::error::{Error, Result};
use crate::tree::{ClassCounts, Node, SplitCriterion, Tree};

/// Version written to and required from model files.
pub const FORMAT_VERSION: u32 = 1;

/// A classic decision tree bundled with the context needed to use it as a
/// standalone model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicModel {
    pub tree: Tree,
    pub feature_names: Vec<String>,
    pub boolean_features: bool,
}

/// Any model this crate can persist.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Classic(ClassicModel),
    Cascade(CascadeModel),
}

impl TrainedModel {
    pub fn feature_names(&self) -> &[String] {
        match self {
            TrainedModel::Classic(m) => &m.feature_names,
            TrainedModel::Cascade(m) => m.feature_names(),
        }
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names().len()
    }

    pub fn boolean_features(&self) -> bool {
        match self {
            TrainedModel::Classic(m) => m.boolean_features,
            TrainedModel::Cascade(m) => m.boolean_features(),
        }
    }
}

/// Provenance stored alongside the model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_fingerprint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_train_sizes: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRepr {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<NodeRepr>,
        right: Box<NodeRepr>,
    },
    Leaf {
        positive_count: usize,
        negative_count: usize,
    },
}

fn node_to_repr(node: &Node) -> NodeRepr {
    match node {
        Node::Leaf(counts) => NodeRepr::Leaf {
            positive_count: counts.positive,
            negative_count: counts.negative,
        },
        Node::Internal { feature, threshold, left, right } => NodeRepr::Internal {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(node_to_repr(left)),
            right: Box::new(node_to_repr(right)),
        },
    }
}

fn repr_to_node(repr: &NodeRepr, feature_count: usize) -> Result<Node> {
    match repr {
        NodeRepr::Leaf { positive_count, negative_count } => {
            if positive_count + negative_count == 0 {
                return Err(Error::ModelFormat("leaf with zero class counts".into()));
            }
            Ok(Node::Leaf(ClassCounts { positive: *positive_count, negative: *negative_count }))
        }
        NodeRepr::Internal { feature, threshold, left, right } => {
            if *feature >= feature_count {
                return Err(Error::ModelFormat(format!(
                    "split on feature {feature} but the model has {feature_count} features"
                )));
            }
            Ok(Node::Internal {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(repr_to_node(left, feature_count)?),
                right: Box::new(repr_to_node(right, feature_count)?),
            })
        }
    }
}

fn termination_to_str(reason: TerminationReason) -> &'static str {
    match reason {
        TerminationReason::NoPositiveLeaf => "no_positive_leaf",
        TerminationReason::NoProgress => "no_progress",
        TerminationReason::NoPositivesLeft => "no_positives_left",
        TerminationReason::IterationCap => "iteration_cap",
    }
}

fn termination_from_str(s: &str) -> Result<TerminationReason> {
    match s {
        "no_positive_leaf" => Ok(TerminationReason::NoPositiveLeaf),
        "no_progress" => Ok(TerminationReason::NoProgress),
        "no_positives_left" => Ok(TerminationReason::NoPositivesLeft),
        "iteration_cap" => Ok(TerminationReason::IterationCap),
        other => Err(Error::ModelFormat(format!("unknown termination reason {other:?}"))),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
enum Payload {
    Classic {
        feature_names: Vec<String>,
        criterion: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        max_depth: Option<usize>,
        boolean_features: bool,
        tree: NodeRepr,
        metadata: ModelMetadata,
    },
    Cascade {
        feature_names: Vec<String>,
        theta: f64,
        subtree_max_depth: usize,
        criterion: String,
        min_samples_leaf: usize,
        boolean_features: bool,
        subtrees: Vec<NodeRepr>,
        metadata: ModelMetadata,
    },
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    payload: Payload,
}

/// Serializes a model (plus provenance) to the JSON model-file format.
pub fn to_json(model: &TrainedModel, metadata: &ModelMetadata) -> String {
    let payload = match model {
        TrainedModel::Classic(m) => Payload::Classic {
            feature_names: m.feature_names.clone(),
            criterion: m.tree.criterion().to_string(),
            max_depth: m.tree.max_depth(),
            boolean_features: m.boolean_features,
            tree: node_to_repr(m.tree.root()),
            metadata: metadata.clone(),
        },
        TrainedModel::Cascade(m) => {
            let mut metadata = metadata.clone();
            metadata.termination = Some(termination_to_str(m.termination()).to_string());
            metadata.round_train_sizes = Some(m.round_train_sizes().to_vec());
            Payload::Cascade {
                feature_names: m.feature_names().to_vec(),
                theta: m.theta(),
                subtree_max_depth: m.subtree_max_depth(),
                criterion: m.criterion().to_string(),
                min_samples_leaf: m.min_samples_leaf(),
                boolean_features: m.boolean_features(),
                subtrees: m.subtrees().iter().map(|t| node_to_repr(t.root())).collect(),
                metadata,
            }
        }
    };
    let file = ModelFile { format_version: FORMAT_VERSION, payload };
    let mut text = serde_json::to_string_pretty(&file).expect("model files serialize");
    text.push('\n');
    text
}

/// Decodes a model file from JSON text.
pub fn from_json(text: &str) -> Result<(TrainedModel, ModelMetadata)> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "format version {} is not supported (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    match file.payload {
        Payload::Classic { feature_names, criterion, max_depth, boolean_features, tree, metadata } => {
            let criterion: SplitCriterion = criterion.parse()?;
            let root = repr_to_node(&tree, feature_names.len())?;
            let tree = Tree::from_parts(root, max_depth, criterion, feature_names.len());
            Ok((
                TrainedModel::Classic(ClassicModel { tree, feature_names, boolean_features }),
                metadata,
            ))
        }
        Payload::Cascade {
            feature_names,
            theta,
            subtree_max_depth,
            criterion,
            min_samples_leaf,
            boolean_features,
            subtrees,
            metadata,
        } => {
            let criterion: SplitCriterion = criterion.parse()?;
            let edge_bound = subtree_max_depth.saturating_sub(1);
            let subtrees: Result<Vec<Tree>> = subtrees
                .iter()
                .map(|repr| {
                    let root = repr_to_node(repr, feature_names.len())?;
                    Ok(Tree::from_parts(
                        root,
                        (edge_bound > 0).then_some(edge_bound),
                        criterion,
                        feature_names.len(),
                    ))
                })
                .collect();
            let termination = termination_from_str(
                metadata.termination.as_deref().unwrap_or("no_positive_leaf"),
            )?;
            let round_train_sizes = metadata.round_train_sizes.clone().unwrap_or_default();
            let model = CascadeModel::from_parts(
                subtrees?,
                theta,
                subtree_max_depth,
                feature_names,
                criterion,
                min_samples_leaf,
                boolean_features,
                termination,
                round_train_sizes,
            )?;
            Ok((TrainedModel::Cascade(model), metadata))
        }
    }
}

/// Writes a model file.
pub fn save_model(
    model: &TrainedModel,
    metadata: &ModelMetadata,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(model, metadata)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<(TrainedModel, ModelMetadata)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

/// One-line summary per subtree (leaf count and firing leaves), for the
/// train command's output.
pub fn describe_cascade(model: &CascadeModel) -> String {
    let mut out = String::new();
    for (i, tree) in model.subtrees().iter().enumerate() {
        let leaves = tree.leaves();
        let firing = leaves
            .iter()
            .filter(|l| crate::cascade::is_positive_leaf(l, model.theta()))
            .count();
        let trained_on = model.round_train_sizes().get(i).copied().unwrap_or(0);
        let _ = writeln!(
            out,
            "  subtree {}: trained on {} samples, depth {}, {} leaves ({} positive)",
            i + 1,
            trained_on,
            tree.depth(),
            leaves.len(),
            firing
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{fit_cascade, CascadeConfig};
    use crate::dataset::{load_csv, Dataset, LabelColumn};
    use crate::tree::grow_tree;

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

    #[test]
    fn classic_round_trip_is_identical() {
        let ds = table1();
        let tree = grow_tree(&ds, None, SplitCriterion::Gini, 1).unwrap();
        let model = TrainedModel::Classic(ClassicModel {
            tree,
            feature_names: ds.feature_names().to_vec(),
            boolean_features: ds.is_boolean(),
        });
        let meta = ModelMetadata {
            dataset_fingerprint: Some(format!("{:016x}", ds.fingerprint())),
            ..ModelMetadata::default()
        };
        let json = to_json(&model, &meta);
        let (reloaded, meta_back) = from_json(&json).unwrap();
        assert_eq!(reloaded, model);
        assert_eq!(meta_back.dataset_fingerprint, meta.dataset_fingerprint);
    }

    #[test]
    fn cascade_round_trip_is_identical() {
        let ds = table1();
        let model = fit_cascade(&ds, &CascadeConfig::default()).unwrap();
        let json = to_json(&TrainedModel::Cascade(model.clone()), &ModelMetadata::default());
        let (reloaded, _) = from_json(&json).unwrap();
        match reloaded {
            TrainedModel::Cascade(back) => assert_eq!(back, model),
            other => panic!("expected a cascade, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_version_rejected() {
        let ds = table1();
        let model = fit_cascade(&ds, &CascadeConfig::default()).unwrap();
        let json = to_json(&TrainedModel::Cascade(model), &ModelMetadata::default());
        let bumped = json.replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(matches!(from_json(&bumped), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn empty_leaf_rejected() {
        let json = r#"{
            "format_version": 1,
            "model_kind": "classic",
            "feature_names": ["a"],
            "criterion": "gini",
            "boolean_features": false,
            "tree": {"positive_count": 0, "negative_count": 0},
            "metadata": {}
        }"#;
        assert!(matches!(from_json(json), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn out_of_range_feature_rejected() {
        let json = r#"{
            "format_version": 1,
            "model_kind": "classic",
            "feature_names": ["a"],
            "criterion": "gini",
            "boolean_features": false,
            "tree": {
                "feature": 3, "threshold": 0.5,
                "left": {"positive_count": 1, "negative_count": 0},
                "right": {"positive_count": 0, "negative_count": 1}
            },
            "metadata": {}
        }"#;
        assert!(matches!(from_json(json), Err(Error::ModelFormat(_))));
    }
}
