//! End-to-end pipelines: propagation from files, and the labeled-fraction
//! comparison between the game and the first-order baselines.
//!
//! Pseudo-label quality is measured on the unlabeled part of the training
//! split, which is what propagation produces directly. Every report says so
//! in its `protocol` field.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::baselines::{nearest_neighbor_propagate, predict_linear, train_linear_ovr, LinearHyper};
use crate::dataset::{
    write_report, write_with, FeatureSet, GroundTruth, MetricMap, PartialLabeling, PseudoLabelResult,
};
use crate::error::{Error, Result};
use crate::evaluation::{accuracy, confusion, macro_f1, relative_improvement};
use crate::game::{extract_labels, run_gtg, GtgConfig, GtgRun, PriorMask};
use crate::similarity::similarity_graph;
use crate::synthetic::{sample_partial_labeling, train_test_split};

pub const PROTOCOL: &str = "metrics on the unlabeled part of the training split (pseudo-label quality)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gtg,
    Linear,
    Knn,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gtg => "gtg",
            Method::Linear => "linear",
            Method::Knn => "knn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gtg" => Ok(Method::Gtg),
            "linear" => Ok(Method::Linear),
            "knn" => Ok(Method::Knn),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Similarity graph, game and argmax extraction in one call.
pub fn propagate(
    features: &FeatureSet,
    labeling: &PartialLabeling,
    config: &GtgConfig,
    prior_mask: Option<&PriorMask>,
) -> Result<(PseudoLabelResult, GtgRun)> {
    config.validate()?;
    let graph = similarity_graph(features, config.scale_k, config.sparsify_k)?;
    let run = run_gtg(&graph, labeling, config, prior_mask)?;
    Ok((extract_labels(&run, labeling), run))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub fractions: Vec<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub test_fraction: f64,
    pub gtg: GtgConfig,
    pub linear: LinearHyper,
    /// Neighbour count of the nearest-seed baseline.
    pub knn_k: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.02, 0.05, 0.10],
            methods: vec![Method::Gtg, Method::Linear, Method::Knn],
            seed: 0,
            test_fraction: 0.30,
            gtg: GtgConfig::default(),
            linear: LinearHyper::default(),
            knn_k: 1,
        }
    }
}

/// splitmix64 finaliser; gives each sampling stage its own seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Metrics of one (fraction, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub fraction: f64,
    pub method: Method,
    pub seeds: usize,
    pub evaluated: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub confusion: Vec<Vec<u64>>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

/// Labels every training object with `method` and scores the unlabeled ones.
pub fn run_cell(
    features: &FeatureSet,
    truth: &GroundTruth,
    labeling: &PartialLabeling,
    fraction: f64,
    method: Method,
    config: &ExperimentConfig,
) -> Result<CellResult> {
    let (pred, iterations, converged) = match method {
        Method::Gtg => {
            let (result, run) = propagate(features, labeling, &config.gtg, None)?;
            (result.classes(), Some(run.iterations), Some(run.converged))
        }
        Method::Linear => {
            let model = train_linear_ovr(features, labeling, config.linear)?;
            (predict_linear(&model, features)?, None, None)
        }
        Method::Knn => (
            nearest_neighbor_propagate(features, labeling, config.knn_k)?,
            None,
            None,
        ),
    };
    let unlabeled: Vec<usize> = (0..labeling.len()).filter(|&i| labeling.seed(i).is_none()).collect();
    let p: Vec<usize> = unlabeled.iter().map(|&i| pred[i]).collect();
    let t: Vec<usize> = unlabeled.iter().map(|&i| truth.classes[i]).collect();
    let m = truth.catalog.len();
    Ok(CellResult {
        fraction,
        method,
        seeds: labeling.num_labeled(),
        evaluated: unlabeled.len(),
        accuracy: accuracy(&p, &t)?,
        macro_f1: macro_f1(&p, &t, m)?,
        confusion: confusion(&p, &t, m)?.to_rows(),
        iterations,
        converged,
    })
}

/// Runs every fraction x method cell on the training split.
pub fn run_experiment(
    features: &FeatureSet,
    truth: &GroundTruth,
    config: &ExperimentConfig,
) -> Result<Vec<CellResult>> {
    if config.fractions.is_empty() || config.methods.is_empty() {
        return Err(Error::InvalidConfig("need at least one fraction and one method".into()));
    }
    if features.ids() != truth.ids.as_slice() {
        return Err(Error::Shape("truth ids do not match feature ids".into()));
    }
    let split = train_test_split(
        features.len(),
        config.test_fraction,
        derive_seed(config.seed, 0),
        Some((&truth.classes, truth.catalog.len())),
    )?;
    let train_features = features.subset(&split.train);
    let train_truth = truth.subset(&split.train);
    let mut cells = Vec::with_capacity(config.fractions.len() * config.methods.len());
    for (k, &fraction) in config.fractions.iter().enumerate() {
        let labeling = sample_partial_labeling(&train_truth, fraction, derive_seed(config.seed, 1 + k as u64))?;
        for &method in &config.methods {
            let mut cfg = config.clone();
            cfg.linear.seed = derive_seed(config.seed, 1000 + k as u64);
            cells.push(run_cell(
                &train_features,
                &train_truth,
                &labeling,
                fraction,
                method,
                &cfg,
            )?);
        }
    }
    Ok(cells)
}

/// Resolved inputs of a command; reports refer to it by file name and
/// digest. The timestamp is excluded from the digest.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Value,
    pub config: Value,
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Value, config: Value) -> Self {
        // SOURCE_DATE_EPOCH pins the timestamp for reproducible builds.
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            });
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            inputs,
            config,
            timestamp,
        }
    }

    pub fn digest(&self) -> String {
        let body = json!({
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "inputs": self.inputs,
            "config": self.config,
        });
        let hash = Sha256::digest(body.to_string().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn reference(&self, file: &str) -> Value {
        json!({ "file": file, "digest": self.digest() })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string(self).expect("manifest serializes");
        write_with(path.as_ref(), |w| writeln!(w, "{json}"))
    }
}

pub fn report_file_name(fraction: f64, method: Method) -> String {
    format!("report_{fraction}_{method}.json")
}

fn cell_report(cell: &CellResult, cells: &[CellResult], config: &ExperimentConfig, manifest: &Value) -> MetricMap {
    let mut r = MetricMap::new();
    r.insert("method".into(), json!(cell.method));
    r.insert("labeled_fraction".into(), json!(cell.fraction));
    r.insert("accuracy".into(), json!(cell.accuracy));
    r.insert("macro_f1".into(), json!(cell.macro_f1));
    r.insert("iterations".into(), json!(cell.iterations));
    r.insert("converged".into(), json!(cell.converged));
    r.insert("config".into(), json!(config.gtg));
    r.insert("seeds".into(), json!(cell.seeds));
    r.insert("evaluated".into(), json!(cell.evaluated));
    r.insert("confusion".into(), json!(cell.confusion));
    r.insert("protocol".into(), json!(PROTOCOL));
    r.insert("manifest".into(), manifest.clone());
    if cell.method == Method::Gtg {
        let mut rel = serde_json::Map::new();
        for other in cells
            .iter()
            .filter(|c| c.fraction == cell.fraction && c.method != Method::Gtg)
        {
            let v = relative_improvement(cell.accuracy, other.accuracy).ok();
            rel.insert(other.method.to_string(), json!(v));
        }
        if !rel.is_empty() {
            r.insert("relative_improvement".into(), Value::Object(rel));
        }
    }
    r
}

/// Writes `manifest.json`, one report per cell and `summary.csv`.
pub fn write_experiment(
    cells: &[CellResult],
    config: &ExperimentConfig,
    manifest: &RunManifest,
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Write {
        path: out_dir.to_owned(),
        source,
    })?;
    manifest.write(out_dir.join("manifest.json"))?;
    let reference = manifest.reference("manifest.json");
    for cell in cells {
        let report = cell_report(cell, cells, config, &reference);
        write_report(&report, out_dir.join(report_file_name(cell.fraction, cell.method)))?;
    }
    write_with(&out_dir.join("summary.csv"), |w| {
        writeln!(w, "fraction,method,accuracy,macro_f1")?;
        for c in cells {
            writeln!(w, "{},{},{:?},{:?}", c.fraction, c.method, c.accuracy, c.macro_f1)?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{gaussian_blobs, BlobSpec};

    #[test]
    fn methods_parse() {
        assert_eq!("knn".parse::<Method>().unwrap(), Method::Knn);
        assert!(matches!("svm".parse::<Method>(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..5).map(|s| derive_seed(1, s)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 5);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn experiment_cells_and_seed_counts() {
        let (fs, truth) = gaussian_blobs(&BlobSpec {
            n: 300,
            d: 2,
            m: 3,
            separation: 6.0,
            seed: 2,
        })
        .unwrap();
        let config = ExperimentConfig::default();
        let cells = run_experiment(&fs, &truth, &config).unwrap();
        assert_eq!(cells.len(), 9);
        let seeds: Vec<usize> = cells.iter().step_by(3).map(|c| c.seeds).collect();
        // 210 training objects, 70 per class: ceil(1.4)=2, ceil(3.5)=4, 7
        assert_eq!(seeds, [6, 12, 21]);
        for c in &cells {
            assert_eq!(c.evaluated + c.seeds, 210);
            assert!(c.accuracy > 0.9, "{c:?}");
        }
    }

    #[test]
    fn manifest_digest_ignores_timestamp() {
        let mut a = RunManifest::new("experiment", json!({"features": "f.csv"}), json!({"seed": 1}));
        let d = a.digest();
        a.timestamp += 100;
        assert_eq!(a.digest(), d);
        a.config = json!({"seed": 2});
        assert_ne!(a.digest(), d);
    }
}
