//! Locally scaled similarity: distances, per-object scales, dense and
//! sparsified graphs.

use gtg::dataset::FeatureSet;
use gtg::similarity::{build_similarity, local_scales, pairwise_distances, sparsify_knn};
use ndarray::array;

fn main() -> gtg::Result<()> {
    // a tight cluster and a loose one
    let features = FeatureSet::new(
        (0..6).map(|i| format!("o{i}")).collect(),
        array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [6.0, 5.0], [5.0, 6.5]],
    )?;
    let d = pairwise_distances(&features);
    let scales = local_scales(&d, 2)?;
    println!("scales: {:?}", scales.as_slice());

    let dense = build_similarity(&d, &scales)?;
    for i in 0..dense.len() {
        let row: Vec<String> = (0..dense.len()).map(|j| format!("{:.3}", dense.weight(i, j))).collect();
        println!("  {}", row.join(" "));
    }

    let sparse = sparsify_knn(&dense, 2)?;
    println!("dense nnz {}, 2-NN union nnz {}", dense.nnz(), sparse.nnz());
    Ok(())
}
