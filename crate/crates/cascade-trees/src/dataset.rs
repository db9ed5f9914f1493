//! Labeled numeric datasets: CSV loading, export, fold splitting.
//!
//! The CSV dialect is comma-separated UTF-8 with an optional header row and
//! the class label in one column (any column; the rest are features).
//! Feature cells parse as a real number, a Boolean written `T`/`F`,
//! `True`/`False` (case-insensitive) or `1`/`0`, or a missing value written
//! as an empty cell or `?`. Missing values are carried as the IEEE NaN
//! sentinel; see [`is_missing`].

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng;

/// Binary class label. `Positive` is the class explanations are produced for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => write!(f, "Positive"),
            Label::Negative => write!(f, "Negative"),
        }
    }
}

/// Missing-value sentinel used in feature vectors.
pub const MISSING: f64 = f64::NAN;

/// True if a feature value is the missing sentinel.
pub fn is_missing(value: f64) -> bool {
    value.is_nan()
}

/// An immutable labeled dataset: an n×k matrix of feature values plus one
/// binary label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    samples: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl Dataset {
    /// Builds a dataset, validating shape invariants: at least one row, at
    /// least one feature, every row of width k, one label per row.
    pub fn new(
        feature_names: Vec<String>,
        samples: Vec<Vec<f64>>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let k = feature_names.len();
        if k == 0 {
            return Err(Error::Domain("dataset must have at least one feature".into()));
        }
        if let Some(bad) = samples.iter().position(|row| row.len() != k) {
            return Err(Error::Domain(format!(
                "sample {bad} has {} feature values, expected {k}",
                samples[bad].len()
            )));
        }
        if labels.len() != samples.len() {
            return Err(Error::Domain(format!(
                "{} labels for {} samples",
                labels.len(),
                samples.len()
            )));
        }
        Ok(Self { feature_names, samples, labels })
    }

    /// Number of samples n.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of features k.
    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sample(&self, index: usize) -> &[f64] {
        &self.samples[index]
    }

    pub fn label(&self, index: usize) -> Label {
        self.labels[index]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> {
        self.samples.iter().map(|r| r.as_slice()).zip(self.labels.iter().copied())
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Positive).count()
    }

    pub fn negative_count(&self) -> usize {
        self.len() - self.positive_count()
    }

    /// True if every non-missing feature value is 0.0 or 1.0. Such datasets
    /// support Boolean rendering of conditions and exhaustive validity
    /// checking.
    pub fn is_boolean(&self) -> bool {
        self.samples
            .iter()
            .flatten()
            .all(|&v| is_missing(v) || v == 0.0 || v == 1.0)
    }

    /// True if any feature value is the missing sentinel.
    pub fn has_missing(&self) -> bool {
        self.samples.iter().flatten().any(|&v| is_missing(v))
    }

    /// New dataset holding the given rows (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Domain(format!("row index {bad} out of range")));
        }
        Dataset::new(
            self.feature_names.clone(),
            indices.iter().map(|&i| self.samples[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// Retains exactly the rows for which the predicate is true.
    pub fn filter(&self, mut keep: impl FnMut(usize, &[f64], Label) -> bool) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| keep(i, &self.samples[i], self.labels[i]))
            .collect()
    }

    /// FNV-1a hash of names, values, and labels; used to tell whether two
    /// evaluation reports were produced from the same data.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for name in &self.feature_names {
            eat(name.as_bytes());
            eat(&[0]);
        }
        for (row, label) in self.iter() {
            for &v in row {
                // Canonicalize NaN so any missing sentinel hashes alike.
                let bits = if is_missing(v) { f64::NAN.to_bits() } else { v.to_bits() };
                eat(&bits.to_le_bytes());
            }
            eat(&[match label {
                Label::Positive => 1,
                Label::Negative => 0,
            }]);
        }
        h
    }

    /// Writes the dataset in the dialect `load_csv` reads: a header row of
    /// feature names plus a final `Label` column, numbers in shortest
    /// round-trip decimal form, missing values as `?`, labels as
    /// `Positive`/`Negative`.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("Label");
        writer.write_record(&header).map_err(|e| io_err(path, e))?;
        for (row, label) in self.iter() {
            let mut record: Vec<String> = row
                .iter()
                .map(|&v| if is_missing(v) { "?".to_string() } else { format!("{v}") })
                .collect();
            record.push(label.to_string());
            writer.write_record(&record).map_err(|e| io_err(path, e))?;
        }
        writer.flush().map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(())
    }
}

fn io_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.display().to_string(), source },
        other => Error::Parse { line: 0, message: format!("{other:?}") },
    }
}

/// Which column of the CSV carries the class label.
#[derive(Debug, Clone)]
pub enum LabelColumn {
    /// Column name; requires a header row.
    Name(String),
    /// 0-based column index.
    Index(usize),
    /// The last column.
    Last,
}

impl LabelColumn {
    /// Parses a CLI-style argument: a decimal integer is an index, anything
    /// else a column name.
    pub fn parse(text: &str) -> Self {
        match text.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(text.to_string()),
        }
    }
}

/// Parses one feature cell: a real number, `T`/`F`/`True`/`False`
/// (case-insensitive), or a missing marker (empty or `?`).
pub fn parse_feature_value(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() || cell == "?" {
        return Some(MISSING);
    }
    match cell.to_ascii_lowercase().as_str() {
        "t" | "true" => return Some(1.0),
        "f" | "false" => return Some(0.0),
        _ => {}
    }
    cell.parse::<f64>().ok()
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    parse_feature_value(cell).ok_or_else(|| Error::Parse {
        line,
        message: format!("column {column}: cannot interpret {:?} as a feature value", cell.trim()),
    })
}

/// Loads a labeled dataset from CSV.
///
/// Every cell of `label_column` equal to `positive_label` (exact match after
/// trimming) becomes [`Label::Positive`]; every other value becomes
/// [`Label::Negative`]. Column order is preserved. Rows whose field count
/// differs from the first row are a parse error carrying the 1-based line
/// number.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    positive_label: &str,
    has_header: bool,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;

    let mut records = reader.records();
    let mut line = 0usize;

    let header: Option<Vec<String>> = if has_header {
        match records.next() {
            Some(rec) => {
                line += 1;
                let rec = rec.map_err(|e| io_err(path, e))?;
                Some(rec.iter().map(|s| s.trim().to_string()).collect())
            }
            None => return Err(Error::EmptyDataset),
        }
    } else {
        None
    };

    let mut width: Option<usize> = header.as_ref().map(|h| h.len());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in records {
        line += 1;
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => Error::Parse {
                line,
                message: "row has a different number of fields than the first row".into(),
            },
            _ => io_err(path, e),
        })?;
        let row: Vec<String> = rec.iter().map(|s| s.to_string()).collect();
        match width {
            None => width = Some(row.len()),
            Some(w) if row.len() != w => {
                return Err(Error::Parse {
                    line,
                    message: format!("row has {} fields, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let width = width.unwrap();
    if width < 2 {
        return Err(Error::Domain(
            "dataset needs a label column and at least one feature".into(),
        ));
    }

    let label_index = match label_column {
        LabelColumn::Index(i) => {
            if *i >= width {
                return Err(Error::Config(format!(
                    "label column index {i} out of range for {width} columns"
                )));
            }
            *i
        }
        LabelColumn::Name(name) => match &header {
            Some(h) => h.iter().position(|c| c == name).ok_or_else(|| {
                Error::Config(format!("label column {name:?} not found in header"))
            })?,
            None => {
                return Err(Error::Config(
                    "label column by name requires a header row".into(),
                ))
            }
        },
        LabelColumn::Last => width - 1,
    };

    let feature_names: Vec<String> = match &header {
        Some(h) => h
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_index)
            .map(|(_, name)| name.clone())
            .collect(),
        None => (0..width)
            .filter(|i| *i != label_index)
            .enumerate()
            .map(|(ordinal, _)| format!("f{}", ordinal + 1))
            .collect(),
    };

    let header_lines = if has_header { 1 } else { 0 };
    let mut samples = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let line = r + 1 + header_lines;
        let mut features = Vec::with_capacity(width - 1);
        for (c, cell) in row.iter().enumerate() {
            if c == label_index {
                labels.push(if cell.trim() == positive_label {
                    Label::Positive
                } else {
                    Label::Negative
                });
            } else {
                features.push(parse_cell(cell, line, c)?);
            }
        }
        samples.push(features);
    }

    Dataset::new(feature_names, samples, labels)
}

/// Assignment of every sample to one of `fold_count` cross-validation folds.
///
/// Produced by a seeded Fisher–Yates permutation of the row indices
/// (SplitMix64, see [`crate::rng`]) followed by round-robin assignment: the
/// i-th row of the shuffled order goes to fold `i % fold_count`. Fold sizes
/// therefore differ by at most one, and the assignment is a pure function of
/// `(n, fold_count, seed)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    fold_count: usize,
    assignments: Vec<usize>,
    seed: u64,
}

impl FoldSplit {
    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    /// Fold index per row, aligned with the dataset's row order.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Splits rows into folds; see [`FoldSplit`] for the exact (pinned) scheme.
pub fn make_folds(dataset: &Dataset, fold_count: usize, seed: u64) -> Result<FoldSplit> {
    let n = dataset.len();
    if fold_count < 2 {
        return Err(Error::Config(format!("fold count must be at least 2, got {fold_count}")));
    }
    if fold_count > n {
        return Err(Error::Config(format!(
            "fold count {fold_count} exceeds the {n} available samples"
        )));
    }
    let order = rng::permutation(n, seed);
    let mut assignments = vec![0usize; n];
    for (position, &row) in order.iter().enumerate() {
        assignments[row] = position % fold_count;
    }
    Ok(FoldSplit { fold_count, assignments, seed })
}

/// Partitions the dataset into (train, test) for one held-out fold.
///
/// Row order within each part follows the dataset's original order, so the
/// split is deterministic given the fold assignment.
pub fn split_by_fold(
    dataset: &Dataset,
    folds: &FoldSplit,
    test_fold: usize,
) -> Result<(Dataset, Dataset)> {
    if folds.assignments.len() != dataset.len() {
        return Err(Error::Config(format!(
            "fold split covers {} rows but the dataset has {}",
            folds.assignments.len(),
            dataset.len()
        )));
    }
    if test_fold >= folds.fold_count {
        return Err(Error::Config(format!(
            "test fold {test_fold} out of range for {} folds",
            folds.fold_count
        )));
    }
    let test_rows: Vec<usize> = (0..dataset.len())
        .filter(|&i| folds.assignments[i] == test_fold)
        .collect();
    let train_rows: Vec<usize> = (0..dataset.len())
        .filter(|&i| folds.assignments[i] != test_fold)
        .collect();
    Ok((dataset.subset(&train_rows)?, dataset.subset(&test_rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

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
    fn loads_synthetic_table() {
        let ds = table1();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.feature_count(), 4);
        assert_eq!(ds.positive_count(), 6);
        assert_eq!(ds.negative_count(), 4);
        assert!(ds.is_boolean());
        // Sample5 = (F, F, F, T)
        assert_eq!(ds.sample(4), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(ds.label(4), Label::Positive);
    }

    #[test]
    fn loads_single_row_by_index() {
        let f = write_temp("1.0,2.0,Positive\n");
        let ds = load_csv(f.path(), &LabelColumn::Index(2), "Positive", false).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.feature_count(), 2);
        assert_eq!(ds.label(0), Label::Positive);
        assert_eq!(ds.sample(0), &[1.0, 2.0]);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let f = write_temp("a,b,Label\n1,2,Positive\n1,2,3,Negative\n");
        let err = load_csv(f.path(), &LabelColumn::Last, "Positive", true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_line_number() {
        let f = write_temp("a,b,Label\n1,frog,Positive\n");
        let err = load_csv(f.path(), &LabelColumn::Last, "Positive", true).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("frog"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_column_is_config_error() {
        let f = write_temp("a,b,Label\n1,2,Positive\n");
        let err = load_csv(f.path(), &LabelColumn::Name("Class".into()), "x", true).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let f = write_temp("a,b,Label\n");
        let err = load_csv(f.path(), &LabelColumn::Last, "x", true).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn missing_markers_become_sentinel() {
        let f = write_temp("a,b,Label\n?,,Positive\n1,2,Negative\n");
        let ds = load_csv(f.path(), &LabelColumn::Last, "Positive", true).unwrap();
        assert!(is_missing(ds.sample(0)[0]));
        assert!(is_missing(ds.sample(0)[1]));
        assert!(ds.has_missing());
    }

    #[test]
    fn boolean_spellings() {
        let f = write_temp("a,b,Label\nT,False,Positive\ntrue,0,Negative\n");
        let ds = load_csv(f.path(), &LabelColumn::Last, "Positive", true).unwrap();
        assert_eq!(ds.sample(0), &[1.0, 0.0]);
        assert_eq!(ds.sample(1), &[1.0, 0.0]);
        assert!(ds.is_boolean());
    }

    #[test]
    fn even_folds() {
        let ds = table1();
        let folds = make_folds(&ds, 5, 42).unwrap();
        let mut sizes = vec![0usize; 5];
        for &f in folds.assignments() {
            sizes[f] += 1;
        }
        assert_eq!(sizes, vec![2; 5]);
    }

    #[test]
    fn uneven_folds_differ_by_at_most_one() {
        let names = vec!["x".to_string()];
        let samples: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64]).collect();
        let labels = vec![Label::Negative; 11];
        let ds = Dataset::new(names, samples, labels).unwrap();
        let folds = make_folds(&ds, 5, 1).unwrap();
        let mut sizes = vec![0usize; 5];
        for &f in folds.assignments() {
            sizes[f] += 1;
        }
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn folds_deterministic() {
        let names = vec!["x".to_string()];
        let samples: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels = vec![Label::Negative; 100];
        let ds = Dataset::new(names, samples, labels).unwrap();
        assert_eq!(make_folds(&ds, 5, 42).unwrap(), make_folds(&ds, 5, 42).unwrap());
    }

    #[test]
    fn fold_count_exceeding_n_rejected() {
        let ds = table1();
        assert!(matches!(make_folds(&ds, 11, 0), Err(Error::Config(_))));
        assert!(matches!(make_folds(&ds, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn split_partitions_dataset() {
        let ds = table1();
        let folds = make_folds(&ds, 5, 9).unwrap();
        let (train, test) = split_by_fold(&ds, &folds, 0).unwrap();
        assert_eq!(test.len(), 2);
        assert_eq!(train.len(), 8);

        // Union over all test folds reproduces every row exactly once.
        let mut seen = 0usize;
        for fold in 0..5 {
            let (_, test) = split_by_fold(&ds, &folds, fold).unwrap();
            seen += test.len();
        }
        assert_eq!(seen, ds.len());
        assert!(matches!(split_by_fold(&ds, &folds, 5), Err(Error::Config(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.1, MISSING], vec![1.0 / 3.0, 2e-17]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        ds.save_csv(&path).unwrap();
        let reloaded = load_csv(&path, &LabelColumn::Name("Label".into()), "Positive", true).unwrap();
        assert_eq!(reloaded.feature_names(), ds.feature_names());
        assert_eq!(reloaded.labels(), ds.labels());
        for i in 0..ds.len() {
            for (a, b) in ds.sample(i).iter().zip(reloaded.sample(i)) {
                assert!((is_missing(*a) && is_missing(*b)) || a == b);
            }
        }
    }

    #[test]
    fn fingerprint_distinguishes_data() {
        let ds = table1();
        let other = ds.subset(&(0..9).collect::<Vec<_>>()).unwrap();
        assert_ne!(ds.fingerprint(), other.fingerprint());
        assert_eq!(ds.fingerprint(), ds.clone().fingerprint());
    }
}
