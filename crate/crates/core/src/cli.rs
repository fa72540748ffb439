//! Command-line front end: `synth`, `propagate`, `eval` and `experiment`.
//!
//! Exit codes: 0 on success, 1 for runtime or input failures, 2 for usage
//! errors (including invalid option values).

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::dataset::{
    read_features, read_label_rows, read_labels, read_prior_mask, read_truth, write_features, write_pseudo_labels,
    write_report, write_truth, write_with, ClassCatalog, LabelSource, MetricMap,
};
use crate::error::{Error, Result};
use crate::evaluation::{accuracy, confusion, macro_f1};
use crate::experiment::{propagate, run_experiment, write_experiment, ExperimentConfig, Method, RunManifest};
use crate::game::GtgConfig;
use crate::similarity::similarity_graph;
use crate::synthetic::{gaussian_blobs, BlobSpec};

#[derive(Debug, Parser)]
#[command(name = "gtg", version, about = "Label augmentation by graph transduction games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Gaussian blob dataset (features.csv, truth.csv)
    Synth(SynthArgs),
    /// Propagate seed labels over a feature set
    Propagate(PropagateArgs),
    /// Score predictions against ground truth
    Eval(EvalArgs),
    /// Compare methods across labeled fractions
    Experiment(ExperimentArgs),
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn unit_fraction(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Err(format!("`{s}` is not in (0, 1]")),
    }
}

fn open_fraction(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("`{s}` is not in (0, 1)")),
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_parser = positive_f64)]
    pub separation: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct GtgArgs {
    /// Neighbour rank for local scaling
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
    pub scale_k: u64,
    /// Sparsify to the mutual kNN union (0 keeps the graph dense)
    #[arg(long, default_value_t = 0)]
    pub knn: usize,
    /// Convergence tolerance on the Frobenius norm between iterations
    #[arg(long, default_value_t = 1e-5, value_parser = positive_f64)]
    pub eps: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
}

impl GtgArgs {
    pub fn config(&self) -> GtgConfig {
        GtgConfig {
            epsilon: self.eps,
            max_iterations: self.max_iter as usize,
            scale_k: self.scale_k as usize,
            sparsify_k: self.knn,
        }
    }
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Extra class names, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<String>,
    #[command(flatten)]
    pub gtg: GtgArgs,
    /// Prior mask file (`id,allowed`, classes separated by `;`)
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration residuals as `iter,residual`
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Run report (defaults to `<out>.report.json`)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Dump the weight matrix as CSV
    #[arg(long)]
    pub dump_weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Restrict {
    /// Only objects that were not seeds
    Unlabeled,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value_t = Restrict::Unlabeled)]
    pub restrict: Restrict,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Gtg,
    Linear,
    Knn,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gtg => Method::Gtg,
            MethodArg::Linear => Method::Linear,
            MethodArg::Knn => Method::Knn,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.10", value_parser = unit_fraction)]
    pub fractions: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gtg,linear,knn")]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.30, value_parser = open_fraction)]
    pub test_fraction: f64,
    /// Neighbours consulted by the nearest-seed baseline
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub nn_k: u64,
    #[command(flatten)]
    pub gtg: GtgArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Propagate(args) => cmd_propagate(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Experiment(args) => cmd_experiment(&args),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.to_owned(),
        source,
    })
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = BlobSpec {
        n: args.n,
        d: args.d,
        m: args.m,
        separation: args.separation,
        seed: args.seed,
    };
    let (features, truth) = gaussian_blobs(&spec)?;
    create_dir(&args.out_dir)?;
    write_features(&features, args.out_dir.join("features.csv"))?;
    write_truth(&truth, args.out_dir.join("truth.csv"))
}

pub fn cmd_propagate(args: &PropagateArgs) -> Result<()> {
    let config = args.gtg.config();
    config.validate()?;
    let features = read_features(&args.features)?;
    let classes = (!args.classes.is_empty()).then_some(args.classes.as_slice());
    let labeling = read_labels(&args.labels, &features, classes)?;
    let mask = args
        .mask
        .as_ref()
        .map(|p| read_prior_mask(p, &features, labeling.catalog()))
        .transpose()?;

    if let Some(path) = &args.dump_weights {
        similarity_graph(&features, config.scale_k, config.sparsify_k)?.write_csv(path)?;
    }
    let (result, run) = propagate(&features, &labeling, &config, mask.as_ref())?;
    write_pseudo_labels(&result, labeling.catalog(), &args.out)?;

    if let Some(path) = &args.trace {
        write_with(path, |w| {
            writeln!(w, "iter,residual")?;
            for (t, r) in run.trace.iter().enumerate() {
                writeln!(w, "{},{r:?}", t + 1)?;
            }
            Ok(())
        })?;
    }

    let manifest = RunManifest::new(
        "propagate",
        json!({
            "features": path_str(&args.features),
            "labels": path_str(&args.labels),
            "mask": args.mask.as_deref().map(path_str),
            "out": path_str(&args.out),
        }),
        json!({ "gtg": config, "classes": labeling.catalog().names() }),
    );
    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".report.json");
        p.into()
    });
    let manifest_path = report_path.with_extension("manifest.json");
    manifest.write(&manifest_path)?;

    let mut counts: HashMap<LabelSource, usize> = HashMap::new();
    for l in &result.labels {
        *counts.entry(l.source).or_default() += 1;
    }
    let mut report = MetricMap::new();
    report.insert("method".into(), json!("gtg"));
    report.insert(
        "labeled_fraction".into(),
        json!(labeling.num_labeled() as f64 / labeling.len() as f64),
    );
    report.insert("accuracy".into(), json!(null));
    report.insert("macro_f1".into(), json!(null));
    report.insert("iterations".into(), json!(run.iterations));
    report.insert("converged".into(), json!(run.converged));
    report.insert("residual".into(), json!(run.residual));
    report.insert("config".into(), json!(config));
    report.insert(
        "given".into(),
        json!(counts.get(&LabelSource::Given).copied().unwrap_or(0)),
    );
    report.insert(
        "propagated".into(),
        json!(counts.get(&LabelSource::Propagated).copied().unwrap_or(0)),
    );
    report.insert(
        "unpropagated".into(),
        json!(counts.get(&LabelSource::Unpropagated).copied().unwrap_or(0)),
    );
    let file_name = manifest_path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    report.insert("manifest".into(), manifest.reference(&file_name));
    write_report(&report, &report_path)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let pred = read_label_rows(&args.pred)?;
    let truth = read_label_rows(&args.truth)?;
    let truth_by_id: HashMap<&str, &str> = truth.iter().map(|r| (r.id.as_str(), r.label.as_str())).collect();
    if truth_by_id.len() != truth.len() {
        return Err(Error::DuplicateId("truth file has repeated ids".into()));
    }
    let pred_ids: std::collections::HashSet<&str> = pred.iter().map(|r| r.id.as_str()).collect();
    if pred_ids.len() != pred.len() {
        return Err(Error::DuplicateId("prediction file has repeated ids".into()));
    }
    if let Some(r) = pred.iter().find(|r| !truth_by_id.contains_key(r.id.as_str())) {
        return Err(Error::UnknownId(r.id.clone()));
    }
    if let Some(r) = truth.iter().find(|r| !pred_ids.contains(r.id.as_str())) {
        return Err(Error::UnknownId(r.id.clone()));
    }
    let catalog = ClassCatalog::new(pred.iter().chain(&truth).map(|r| r.label.clone()))?;
    let given = pred.iter().filter(|r| r.source == Some(LabelSource::Given)).count();
    let rows: Vec<_> = pred
        .iter()
        .filter(|r| args.restrict == Restrict::All || r.source != Some(LabelSource::Given))
        .collect();
    let idx = |name: &str| catalog.index(name).expect("catalog covers all labels");
    let p: Vec<usize> = rows.iter().map(|r| idx(&r.label)).collect();
    let t: Vec<usize> = rows.iter().map(|r| idx(truth_by_id[r.id.as_str()])).collect();
    let m = catalog.len();

    let mut report = MetricMap::new();
    report.insert("method".into(), json!("eval"));
    report.insert("labeled_fraction".into(), json!(given as f64 / pred.len() as f64));
    report.insert("accuracy".into(), json!(accuracy(&p, &t)?));
    report.insert("macro_f1".into(), json!(macro_f1(&p, &t, m)?));
    report.insert("iterations".into(), json!(null));
    report.insert("converged".into(), json!(null));
    report.insert("config".into(), json!(null));
    report.insert("restrict".into(), json!(format!("{:?}", args.restrict).to_lowercase()));
    report.insert("evaluated".into(), json!(p.len()));
    report.insert("classes".into(), json!(catalog.names()));
    report.insert("confusion".into(), json!(confusion(&p, &t, m)?.to_rows()));
    report.insert(
        "manifest".into(),
        json!({ "pred": path_str(&args.pred), "truth": path_str(&args.truth) }),
    );
    write_report(&report, &args.out)
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let gtg = args.gtg.config();
    gtg.validate()?;
    let features = read_features(&args.features)?;
    let truth = read_truth(&args.truth, &features)?;
    let config = ExperimentConfig {
        fractions: args.fractions.clone(),
        methods: args.methods.iter().map(|&m| m.into()).collect(),
        seed: args.seed,
        test_fraction: args.test_fraction,
        gtg,
        knn_k: args.nn_k as usize,
        ..ExperimentConfig::default()
    };
    let cells = run_experiment(&features, &truth, &config)?;
    let manifest = RunManifest::new(
        "experiment",
        json!({ "features": path_str(&args.features), "truth": path_str(&args.truth) }),
        json!(config),
    );
    write_experiment(&cells, &config, &manifest, &args.out_dir)
}
