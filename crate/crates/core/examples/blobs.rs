//! Generate a blob dataset, draw stratified seeds and a train/test split.
//!
//! cargo run --example blobs -- [out_dir]

use gtg::dataset::{write_features, write_truth};
use gtg::prelude::*;

fn main() -> Result<()> {
    let spec = BlobSpec {
        n: 120,
        d: 2,
        m: 3,
        separation: 6.0,
        seed: 1,
    };
    let (features, truth) = gaussian_blobs(&spec)?;
    println!(
        "{} objects, {} dims, classes {:?}",
        features.len(),
        features.dim(),
        truth.catalog.names()
    );

    let seeds = sample_partial_labeling(&truth, 0.05, 7)?;
    println!("seeds at 5%: {}", seeds.num_labeled());
    for (id, class) in seeds.labeled() {
        println!("  {id} -> {}", seeds.catalog().name(class));
    }

    let split = train_test_split(features.len(), 0.3, 7, Some((&truth.classes, truth.catalog.len())))?;
    println!("split: {} train / {} test", split.train.len(), split.test.len());

    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir).map_err(|source| Error::Write {
            path: dir.clone().into(),
            source,
        })?;
        write_features(&features, format!("{dir}/features.csv"))?;
        write_truth(&truth, format!("{dir}/truth.csv"))?;
        println!("wrote {dir}/features.csv and {dir}/truth.csv");
    }
    Ok(())
}
