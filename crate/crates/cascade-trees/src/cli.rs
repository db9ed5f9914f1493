//! Command-line interface: argument parsing, command logic, exit codes.
//!
//! The binary is a thin wrapper around [`run`]. Exit codes follow a fixed
//! contract:
//!
//! - `1` — usage: bad flags or flag values (including `--folds 1` and a θ
//!   outside `(0, 1]`);
//! - `2` — data: unreadable or malformed datasets, model files, or samples,
//!   including a missing feature value without `--tolerant`;
//! - `3` — run: training, evaluation, or validity checking failed (an
//!   invalid explanation found by `check-validity` also exits 3).
//!
//! When `--data` names a file that does not exist and the path is relative,
//! the directory in the `CASCADE_TREES_DATA_DIR` environment variable is
//! tried as a fallback root.

use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::cascade::{fit_cascade, CascadeConfig, CascadePrediction, TolerantPrediction};
use crate::dataset::{load_csv, parse_feature_value, Dataset, Label, LabelColumn};
use crate::error::Error;
use crate::explanation::{check_validity, mask_from_path, render_path, DEFAULT_VALIDITY_CAP};
use crate::metrics::{compare_report, cross_validate, ModelSpec};
use crate::model_io::{
    describe_cascade, load_model, save_model, ClassicModel, ModelMetadata, TrainedModel,
};
use crate::tree::{grow_tree, majority_label, SplitCriterion};

/// Environment variable naming the default dataset directory.
pub const DATA_DIR_ENV: &str = "CASCADE_TREES_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "cascade-trees",
    version,
    about = "Cascading decision trees: train, predict, evaluate, and verify explanations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to a model file.
    Train(TrainArgs),
    /// Classify one sample with a trained model and print its explanation.
    Predict(PredictArgs),
    /// Cross-validate classic and cascade models and emit comparison reports.
    Eval(EvalArgs),
    /// Exhaustively verify the explanations of a model on a Boolean dataset.
    CheckValidity(CheckValidityArgs),
    /// Re-emit a dataset in the canonical CSV dialect.
    Export(ExportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Path to a CSV dataset.
    #[arg(long)]
    data: String,
    /// Label column: a header name or a 0-based index. Default: last column.
    #[arg(long)]
    label_column: Option<String>,
    /// Label value treated as the Positive class.
    #[arg(long, default_value = "Positive")]
    positive_label: String,
    /// Read the first row as data instead of a header.
    #[arg(long)]
    no_header: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, CliError> {
        let column = match &self.label_column {
            Some(text) => LabelColumn::parse(text),
            None => LabelColumn::Last,
        };
        let path = resolve_data_path(&self.data);
        load_csv(path, &column, &self.positive_label, !self.no_header).map_err(CliError::data)
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("model_kind").required(true).args(["cascade", "classic"])))]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Train a cascading decision tree model.
    #[arg(long)]
    cascade: bool,
    /// Train a classic decision tree.
    #[arg(long)]
    classic: bool,
    /// Positive-leaf threshold θ for cascades.
    #[arg(long, default_value_t = 0.8)]
    theta: f64,
    /// Depth bound: node levels per subtree for cascades (default 3),
    /// edges for classic trees (default unbounded).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Split criterion: gini or entropy.
    #[arg(long, default_value = "gini")]
    criterion: String,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Sample as a comma-separated feature row, e.g. "F,F,F,T" or
    /// "0.31,?,4.2". `?` or an empty cell marks a missing value.
    #[arg(long)]
    sample: String,
    /// Tolerate missing values by skipping subtrees that need them
    /// (cascade models only).
    #[arg(long)]
    tolerant: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    theta: f64,
    /// Subtree depth (node levels) for the cascade and edge bound for the
    /// depth-bounded classic baseline.
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    #[arg(long, default_value = "gini")]
    criterion: String,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    /// Report file prefix; writes `<prefix>.txt` and `<prefix>.jsonl`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckValidityArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Feature-count cap for the exhaustive check.
    #[arg(long, default_value_t = DEFAULT_VALIDITY_CAP)]
    cap: usize,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn data(error: impl std::fmt::Display) -> Self {
        Self { code: 2, message: error.to_string() }
    }

    fn run(error: impl std::fmt::Display) -> Self {
        Self { code: 3, message: error.to_string() }
    }
}

/// Resolves `--data`: an existing path wins; otherwise a relative path is
/// retried under `CASCADE_TREES_DATA_DIR`.
pub fn resolve_data_path(path: &str) -> PathBuf {
    let direct = PathBuf::from(path);
    if direct.exists() || direct.is_absolute() {
        return direct;
    }
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        let fallback = Path::new(&dir).join(path);
        if fallback.exists() {
            return fallback;
        }
    }
    direct
}

fn parse_criterion(text: &str) -> Result<SplitCriterion, CliError> {
    text.parse().map_err(|e: Error| CliError::usage(e.to_string()))
}

fn validate_theta(theta: f64) -> Result<(), CliError> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!("--theta must be in (0, 1], got {theta}")))
    }
}

fn parse_sample(text: &str, expected: usize) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, CliError> = text
        .split(',')
        .map(|cell| {
            parse_feature_value(cell).ok_or_else(|| {
                CliError::data(format!("cannot interpret {:?} as a feature value", cell.trim()))
            })
        })
        .collect();
    let values = values?;
    if values.len() != expected {
        return Err(CliError::data(format!(
            "sample has {} values but the model expects {expected}",
            values.len()
        )));
    }
    Ok(values)
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    validate_theta(args.theta)?;
    let criterion = parse_criterion(&args.criterion)?;
    if args.min_samples_leaf == 0 {
        return Err(CliError::usage("--min-samples-leaf must be at least 1"));
    }
    if args.max_depth == Some(0) {
        return Err(CliError::usage("--max-depth must be at least 1"));
    }
    let dataset = args.data.load()?;
    let metadata = ModelMetadata {
        dataset_fingerprint: Some(format!("{:016x}", dataset.fingerprint())),
        ..ModelMetadata::default()
    };

    let model = if args.cascade {
        let config = CascadeConfig {
            theta: args.theta,
            subtree_max_depth: args.max_depth.unwrap_or(3),
            criterion,
            min_samples_leaf: args.min_samples_leaf,
            iteration_cap: None,
        };
        let cascade = fit_cascade(&dataset, &config).map_err(CliError::run)?;
        println!("trained cascade: {} subtrees", cascade.subtrees().len());
        print!("{}", describe_cascade(&cascade));
        println!("termination: {}", cascade.termination());
        TrainedModel::Cascade(cascade)
    } else {
        let tree = grow_tree(&dataset, args.max_depth, criterion, args.min_samples_leaf)
            .map_err(CliError::run)?;
        println!(
            "trained classic tree: 1 tree, depth {}, {} leaves",
            tree.depth(),
            tree.leaves().len()
        );
        TrainedModel::Classic(ClassicModel {
            tree,
            feature_names: dataset.feature_names().to_vec(),
            boolean_features: dataset.is_boolean(),
        })
    };

    save_model(&model, &metadata, &args.out).map_err(CliError::data)?;
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let (model, _) = load_model(&args.model).map_err(CliError::data)?;
    let sample = parse_sample(&args.sample, model.feature_count())?;
    let boolean = model.boolean_features();

    match &model {
        TrainedModel::Cascade(cascade) => {
            if args.tolerant {
                match cascade.predict_tolerant(&sample).map_err(CliError::data)? {
                    TolerantPrediction::Positive { subtree, path } => println!(
                        "Positive — subtree {}: {}",
                        subtree + 1,
                        render_path(&path, cascade.feature_names(), boolean)
                    ),
                    TolerantPrediction::Negative => println!("Negative"),
                    TolerantPrediction::Unknown => println!("Unknown"),
                }
            } else {
                match cascade.predict(&sample).map_err(missing_to_data)? {
                    CascadePrediction::Positive { subtree, path } => println!(
                        "Positive — subtree {}: {}",
                        subtree + 1,
                        render_path(&path, cascade.feature_names(), boolean)
                    ),
                    CascadePrediction::Negative => println!("Negative"),
                }
            }
        }
        TrainedModel::Classic(classic) => {
            if args.tolerant {
                return Err(CliError::usage(
                    "--tolerant applies to cascade models; classic trees cannot skip conditions",
                ));
            }
            let routed = classic.tree.predict(&sample).map_err(missing_to_data)?;
            match majority_label(&routed.counts) {
                Label::Positive => println!(
                    "Positive — path: {}",
                    render_path(&routed.path, &classic.feature_names, boolean)
                ),
                Label::Negative => println!("Negative"),
            }
        }
    }
    Ok(())
}

fn missing_to_data(error: Error) -> CliError {
    match error {
        Error::MissingValue { .. } => CliError::data(format!(
            "{error}; pass --tolerant to let a cascade skip subtrees that need the value"
        )),
        other => CliError::data(other),
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    if args.folds < 2 {
        return Err(CliError::usage(format!(
            "--folds must be at least 2, got {}",
            args.folds
        )));
    }
    validate_theta(args.theta)?;
    if args.max_depth == 0 {
        return Err(CliError::usage("--max-depth must be at least 1"));
    }
    let criterion = parse_criterion(&args.criterion)?;
    let dataset = args.data.load()?;
    let name = Path::new(&args.data.data)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| args.data.data.clone());

    let mut specs = vec![
        ModelSpec::classic(None),
        ModelSpec::classic(Some(args.max_depth)),
        ModelSpec::cascade(args.theta, args.max_depth),
    ];
    for spec in &mut specs {
        spec.criterion = criterion;
        spec.min_samples_leaf = args.min_samples_leaf;
    }

    let reports: Result<Vec<_>, CliError> = specs
        .iter()
        .map(|spec| {
            cross_validate(&dataset, &name, args.folds, args.seed, spec).map_err(CliError::run)
        })
        .collect();
    let comparison = compare_report(&reports?).map_err(CliError::run)?;

    let text = comparison.render_text();
    print!("{text}");
    if let Some(prefix) = &args.out {
        let txt_path = prefix.with_extension("txt");
        let jsonl_path = prefix.with_extension("jsonl");
        std::fs::write(&txt_path, &text)
            .map_err(|e| CliError::run(format!("{}: {e}", txt_path.display())))?;
        std::fs::write(&jsonl_path, comparison.render_jsonl())
            .map_err(|e| CliError::run(format!("{}: {e}", jsonl_path.display())))?;
        println!("reports written to {} and {}", txt_path.display(), jsonl_path.display());
    }
    Ok(())
}

fn cmd_check_validity(args: &CheckValidityArgs) -> Result<(), CliError> {
    let (model, _) = load_model(&args.model).map_err(CliError::data)?;
    let dataset = args.data.load()?;
    if dataset.feature_count() != model.feature_count() {
        return Err(CliError::data(format!(
            "dataset has {} features but the model expects {}",
            dataset.feature_count(),
            model.feature_count()
        )));
    }
    if !dataset.is_boolean() || dataset.has_missing() {
        return Err(CliError::data(
            "exhaustive validity checking is defined for Boolean datasets (0/1 feature values); \
             numeric datasets get depth statistics via `eval` instead",
        ));
    }
    if dataset.feature_count() > args.cap {
        return Err(CliError::data(format!(
            "{} features exceed the cap of {} (the check enumerates up to 2^k perturbations)",
            dataset.feature_count(),
            args.cap
        )));
    }

    // The explanation of each Positive prediction, checked against the
    // model's own classification function.
    let mut positives = 0usize;
    let mut valid = 0usize;
    let mut failures = Vec::new();
    for (row, _) in dataset.iter() {
        let (label, path) = match &model {
            TrainedModel::Cascade(cascade) => match cascade.predict(row).map_err(CliError::run)? {
                CascadePrediction::Positive { path, .. } => (Label::Positive, path),
                CascadePrediction::Negative => (Label::Negative, vec![]),
            },
            TrainedModel::Classic(classic) => {
                let routed = classic.tree.predict(row).map_err(CliError::run)?;
                (majority_label(&routed.counts), routed.path)
            }
        };
        if label != Label::Positive {
            continue;
        }
        positives += 1;
        let mask = mask_from_path(&path, dataset.feature_count()).map_err(CliError::run)?;
        let report = match &model {
            TrainedModel::Cascade(cascade) => check_validity(
                |v| cascade.predict(v).expect("complete Boolean sample").label(),
                &mask,
                row,
                args.cap,
            ),
            TrainedModel::Classic(classic) => check_validity(
                |v| classic.tree.predict_label(v).expect("complete Boolean sample"),
                &mask,
                row,
                args.cap,
            ),
        }
        .map_err(CliError::run)?;
        if report.is_valid() {
            valid += 1;
        } else {
            failures.push(format!(
                "sample {row:?}: counterexample {:?}",
                report.counterexample().unwrap()
            ));
        }
    }

    println!("{valid}/{positives} positive explanations valid");
    if !failures.is_empty() {
        for failure in &failures {
            eprintln!("invalid explanation: {failure}");
        }
        return Err(CliError::run(format!("{} invalid explanations", failures.len())));
    }
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let dataset = args.data.load()?;
    dataset.save_csv(&args.out).map_err(CliError::data)?;
    println!(
        "wrote {} samples x {} features to {}",
        dataset.len(),
        dataset.feature_count(),
        args.out.display()
    );
    Ok(())
}

/// Parses argv and runs the selected command; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too and must exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::CheckValidity(args) => cmd_check_validity(args),
        Command::Export(args) => cmd_export(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
