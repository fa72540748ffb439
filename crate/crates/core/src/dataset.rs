//! Dataset types and the plain-text file formats around them.
//!
//! All files are comma-separated UTF-8 with a header row and `.` as the
//! decimal separator:
//!
//! | file          | header                          |
//! |---------------|---------------------------------|
//! | features      | `id,f0,...,f{d-1}`              |
//! | labels/truth  | `id,label`                      |
//! | pseudo-labels | `id,label,confidence,source`    |
//! | prior mask    | `id,allowed` (`;`-separated)    |
//!
//! Reports are single JSON objects, see [`write_report`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde_json::Value;

use crate::error::{Error, Result};

/// `n` objects with `d` finite features each, keyed by unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    ids: Vec<String>,
    features: Array2<f64>,
    index: HashMap<String, usize>,
}

impl FeatureSet {
    pub fn new(ids: Vec<String>, features: Array2<f64>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!("feature matrix must be non-empty, got {n}x{d}")));
        }
        if ids.len() != n {
            return Err(Error::Shape(format!("{} ids for {n} feature rows", ids.len())));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() {
                return Err(Error::MalformedRow {
                    row: i + 1,
                    reason: "empty id".into(),
                });
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (i, row) in features.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedFeature { row: i + 1 });
            }
        }
        Ok(Self { ids, features, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Restricts the set to the given row positions, in that order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let ids = rows.iter().map(|&i| self.ids[i].clone()).collect::<Vec<_>>();
        let features = self.features.select(ndarray::Axis(0), rows);
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Self { ids, features, index }
    }
}

/// Class names, sorted by byte order; a class index is its sorted position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCatalog {
    names: Vec<String>,
}

impl ClassCatalog {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        if names.len() < 2 {
            return Err(Error::DegenerateCatalog(names.len()));
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class: usize) -> &str {
        &self.names[class]
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }
}

/// Seed labels over the objects of a [`FeatureSet`]: every object is either
/// labeled (the set L) or unlabeled (the set U).
#[derive(Debug, Clone, PartialEq)]
pub struct PartialLabeling {
    ids: Vec<String>,
    seeds: Vec<Option<usize>>,
    catalog: ClassCatalog,
}

impl PartialLabeling {
    pub fn new(ids: Vec<String>, seeds: Vec<Option<usize>>, catalog: ClassCatalog) -> Result<Self> {
        if ids.len() != seeds.len() {
            return Err(Error::Shape(format!(
                "{} ids for {} seed slots",
                ids.len(),
                seeds.len()
            )));
        }
        let m = catalog.len();
        if let Some(bad) = seeds.iter().flatten().find(|&&c| c >= m) {
            return Err(Error::Shape(format!("class index {bad} out of range for {m} classes")));
        }
        if seeds.iter().all(Option::is_none) {
            return Err(Error::NoSeeds);
        }
        Ok(Self { ids, seeds, catalog })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.catalog.len()
    }

    pub fn catalog(&self) -> &ClassCatalog {
        &self.catalog
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Seed class per object position, `None` for unlabeled objects.
    pub fn seeds(&self) -> &[Option<usize>] {
        &self.seeds
    }

    pub fn seed(&self, i: usize) -> Option<usize> {
        self.seeds[i]
    }

    pub fn num_labeled(&self) -> usize {
        self.seeds.iter().filter(|s| s.is_some()).count()
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.ids
            .iter()
            .zip(&self.seeds)
            .filter_map(|(id, s)| s.map(|c| (id.as_str(), c)))
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = &str> + '_ {
        self.ids
            .iter()
            .zip(&self.seeds)
            .filter(|(_, s)| s.is_none())
            .map(|(id, _)| id.as_str())
    }
}

/// Full ground truth for a feature set (synthetic data, evaluation).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub ids: Vec<String>,
    pub classes: Vec<usize>,
    pub catalog: ClassCatalog,
}

impl GroundTruth {
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            classes: rows.iter().map(|&i| self.classes[i]).collect(),
            catalog: self.catalog.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelSource {
    Given,
    Propagated,
    Unpropagated,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::Given => "given",
            LabelSource::Propagated => "propagated",
            LabelSource::Unpropagated => "unpropagated",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "given" => Some(LabelSource::Given),
            "propagated" => Some(LabelSource::Propagated),
            "unpropagated" => Some(LabelSource::Unpropagated),
            _ => None,
        }
    }
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabel {
    pub id: String,
    pub class: usize,
    pub confidence: f64,
    pub source: LabelSource,
}

/// Output of a propagation run, one entry per object in feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelResult {
    pub labels: Vec<PseudoLabel>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

impl PseudoLabelResult {
    pub fn classes(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.class).collect()
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_owned(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn csv_err(path: &Path, row: usize, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::Read {
            path: path.to_owned(),
            source,
        },
        other => Error::MalformedRow {
            row,
            reason: format!("{other:?}"),
        },
    }
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let header = reader.headers().map_err(|e| csv_err(path, 0, e))?;
    Ok(header.iter().map(str::to_owned).collect())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let header = headers(path, &mut reader)?;
    if header.first().map(String::as_str) != Some("id") || header.len() < 2 {
        return Err(Error::MalformedRow {
            row: 0,
            reason: "header must be `id,f0,...,f{d-1}`".into(),
        });
    }
    let d = header.len() - 1;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(path, row, e))?;
        if record.len() != d + 1 {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", d + 1, record.len()),
            });
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty id".into(),
            });
        }
        if seen.insert(id.to_owned(), row).is_some() {
            return Err(Error::DuplicateId(id.to_owned()));
        }
        ids.push(id.to_owned());
        for field in record.iter().skip(1) {
            match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => return Err(Error::MalformedFeature { row }),
            }
        }
    }
    let n = ids.len();
    let features = Array2::from_shape_vec((n, d), values).expect("row lengths checked");
    FeatureSet::new(ids, features)
}

pub fn write_features(features: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    write_with(path.as_ref(), |w| {
        write!(w, "id")?;
        for j in 0..features.dim() {
            write!(w, ",f{j}")?;
        }
        writeln!(w)?;
        for (id, row) in features.ids().iter().zip(features.features().rows()) {
            write!(w, "{id}")?;
            for v in row {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

/// One row of a label-bearing file. `source` is present only for
/// pseudo-label files.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub id: String,
    pub label: String,
    pub source: Option<LabelSource>,
}

/// Reads `id,label` files, and `id,label,confidence,source` files.
pub fn read_label_rows(path: impl AsRef<Path>) -> Result<Vec<LabelRow>> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let header = headers(path, &mut reader)?;
    if header.len() < 2 || header[0] != "id" || header[1] != "label" {
        return Err(Error::MalformedRow {
            row: 0,
            reason: "header must start with `id,label`".into(),
        });
    }
    let source_col = header.iter().position(|h| h == "source");
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(path, row, e))?;
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let source = match source_col {
            Some(c) => Some(LabelSource::parse(&record[c]).ok_or_else(|| Error::MalformedRow {
                row,
                reason: format!("unknown source `{}`", &record[c]),
            })?),
            None => None,
        };
        if record[0].is_empty() || record[1].is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty id or label".into(),
            });
        }
        rows.push(LabelRow {
            id: record[0].to_owned(),
            label: record[1].to_owned(),
            source,
        });
    }
    Ok(rows)
}

/// Reads seed labels for `features`. The catalog is the sorted set of
/// observed labels merged with `classes`. Rows marked `unpropagated` in a
/// pseudo-label file are skipped.
pub fn read_labels(
    path: impl AsRef<Path>,
    features: &FeatureSet,
    classes: Option<&[String]>,
) -> Result<PartialLabeling> {
    let rows = read_label_rows(path)?;
    let rows: Vec<_> = rows
        .into_iter()
        .filter(|r| r.source != Some(LabelSource::Unpropagated))
        .collect();
    let catalog = ClassCatalog::new(
        rows.iter()
            .map(|r| r.label.clone())
            .chain(classes.into_iter().flatten().cloned()),
    )?;
    let mut seeds = vec![None; features.len()];
    for r in &rows {
        let i = features.position(&r.id).ok_or_else(|| Error::UnknownId(r.id.clone()))?;
        if seeds[i].is_some() {
            return Err(Error::DuplicateId(r.id.clone()));
        }
        seeds[i] = catalog.index(&r.label);
    }
    PartialLabeling::new(features.ids().to_vec(), seeds, catalog)
}

/// Reads a label file that must cover every object in `features`.
pub fn read_truth(path: impl AsRef<Path>, features: &FeatureSet) -> Result<GroundTruth> {
    let labeling = read_labels(path, features, None)?;
    if let Some(missing) = labeling.unlabeled().next() {
        return Err(Error::UnknownId(missing.to_owned()));
    }
    Ok(GroundTruth {
        ids: labeling.ids().to_vec(),
        classes: labeling.seeds().iter().map(|s| s.expect("all labeled")).collect(),
        catalog: labeling.catalog().clone(),
    })
}

pub fn write_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    write_with(path.as_ref(), |w| {
        writeln!(w, "id,label")?;
        for (id, &c) in truth.ids.iter().zip(&truth.classes) {
            writeln!(w, "{id},{}", truth.catalog.name(c))?;
        }
        Ok(())
    })
}

pub fn write_pseudo_labels(result: &PseudoLabelResult, catalog: &ClassCatalog, path: impl AsRef<Path>) -> Result<()> {
    write_with(path.as_ref(), |w| {
        writeln!(w, "id,label,confidence,source")?;
        for l in &result.labels {
            writeln!(w, "{},{},{:.6},{}", l.id, catalog.name(l.class), l.confidence, l.source)?;
        }
        Ok(())
    })
}

/// Reads a prior mask file: `id,allowed` with `;`-separated class names.
pub fn read_prior_mask(
    path: impl AsRef<Path>,
    features: &FeatureSet,
    catalog: &ClassCatalog,
) -> Result<BTreeMap<usize, Vec<usize>>> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    let header = headers(path, &mut reader)?;
    if header != ["id", "allowed"] {
        return Err(Error::MalformedRow {
            row: 0,
            reason: "header must be `id,allowed`".into(),
        });
    }
    let mut mask = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(path, row, e))?;
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                row,
                reason: "expected 2 fields".into(),
            });
        }
        let pos = features
            .position(&record[0])
            .ok_or_else(|| Error::UnknownId(record[0].to_owned()))?;
        let mut allowed = Vec::new();
        for name in record[1].split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let c = catalog.index(name).ok_or_else(|| Error::MalformedRow {
                row,
                reason: format!("unknown class `{name}`"),
            })?;
            allowed.push(c);
        }
        if mask.insert(pos, allowed).is_some() {
            return Err(Error::DuplicateId(record[0].to_owned()));
        }
    }
    Ok(mask)
}

/// A JSON object of named metrics, as accepted by [`write_report`].
pub type MetricMap = serde_json::Map<String, Value>;

pub const REQUIRED_REPORT_KEYS: [&str; 7] = [
    "method",
    "labeled_fraction",
    "accuracy",
    "macro_f1",
    "iterations",
    "converged",
    "config",
];

/// Writes `metrics` as one compact JSON object. Every key in
/// [`REQUIRED_REPORT_KEYS`] must be present (`null` is allowed where a value
/// does not apply, e.g. `iterations` for a baseline).
pub fn write_report(metrics: &MetricMap, path: impl AsRef<Path>) -> Result<()> {
    if let Some(key) = REQUIRED_REPORT_KEYS.iter().find(|k| !metrics.contains_key(**k)) {
        return Err(Error::MissingMetric((*key).to_owned()));
    }
    let json = serde_json::to_string(metrics).expect("JSON values always serialize");
    write_with(path.as_ref(), |w| writeln!(w, "{json}"))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<MetricMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedRow {
        row: e.line(),
        reason: e.to_string(),
    })
}

pub(crate) fn write_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let wrap = |source| Error::Write {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}
