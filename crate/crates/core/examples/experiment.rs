//! Full comparison: every method at every labeled fraction on one split,
//! with reports and a summary written to disk.
//!
//! cargo run --release --example experiment -- [out_dir]

use gtg::experiment::{run_experiment, write_experiment, ExperimentConfig, RunManifest};
use gtg::prelude::*;
use serde_json::json;

fn main() -> Result<()> {
    let (features, truth) = gaussian_blobs(&BlobSpec {
        n: 600,
        d: 2,
        m: 4,
        separation: 2.5,
        seed: 0,
    })?;
    let config = ExperimentConfig::default();
    let cells = run_experiment(&features, &truth, &config)?;
    println!(
        "{:>8} {:>7} {:>6} {:>9} {:>9}",
        "fraction", "method", "seeds", "accuracy", "macro-F1"
    );
    for c in &cells {
        println!(
            "{:>8} {:>7} {:>6} {:>9.4} {:>9.4}",
            c.fraction,
            c.method.as_str(),
            c.seeds,
            c.accuracy,
            c.macro_f1
        );
    }

    if let Some(dir) = std::env::args().nth(1) {
        let manifest = RunManifest::new(
            "example",
            json!({ "blobs": "n=600 d=2 m=4 separation=2.5 seed=0" }),
            json!(config),
        );
        write_experiment(&cells, &config, &manifest, &dir)?;
        println!("reports in {dir}");
    }
    Ok(())
}
