//! Spread a few seed labels with the transduction game, with and without a
//! prior restricting which classes some objects may take.

use gtg::game::{potential, Replicator};
use gtg::prelude::*;

fn main() -> Result<()> {
    let (features, truth) = gaussian_blobs(&BlobSpec {
        n: 150,
        d: 2,
        m: 3,
        separation: 5.0,
        seed: 3,
    })?;
    let seeds = sample_partial_labeling(&truth, 0.04, 3)?;
    let config = GtgConfig::default();
    let graph = similarity_graph(&features, config.scale_k, config.sparsify_k)?;

    let run = run_gtg(&graph, &seeds, &config, None)?;
    let labels = extract_labels(&run, &seeds);
    println!(
        "{} seeds, {} iterations (converged: {}, residual {:.2e}), accuracy {:.3}",
        seeds.num_labeled(),
        run.iterations,
        run.converged,
        run.residual,
        accuracy(&labels.classes(), &truth.classes)?
    );

    // watch the potential climb for the first few steps
    let mut rep = Replicator::new(&graph, &seeds, None)?;
    for _ in 0..5 {
        let r = rep.step();
        println!(
            "  iter {}: residual {r:.4}, potential {:.4}",
            rep.iterations(),
            potential(&graph, rep.state())
        );
    }

    // a coarse prior narrowing every unlabeled object to two candidate classes
    let mask: PriorMask = (0..seeds.len())
        .filter(|&i| seeds.seed(i).is_none())
        .map(|i| {
            let t = truth.classes[i];
            let mut allowed = vec![t, (t + 1) % 3];
            allowed.sort_unstable();
            (i, allowed)
        })
        .collect();
    let masked = extract_labels(&run_gtg(&graph, &seeds, &config, Some(&mask))?, &seeds);
    let outside = mask
        .iter()
        .filter(|(&i, allowed)| !allowed.contains(&masked.labels[i].class))
        .count();
    println!(
        "with a two-class prior: accuracy {:.3}, labels outside the prior: {outside}",
        accuracy(&masked.classes(), &truth.classes)?
    );
    Ok(())
}
