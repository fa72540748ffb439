//! The linear one-vs-rest and nearest-seed baselines next to the game.

use gtg::baselines::train_linear_ovr_with;
use gtg::prelude::*;

fn main() -> Result<()> {
    let (features, truth) = gaussian_blobs(&BlobSpec {
        n: 400,
        d: 2,
        m: 4,
        separation: 2.5,
        seed: 0,
    })?;
    let seeds = sample_partial_labeling(&truth, 0.05, 0)?;
    let unlabeled: Vec<usize> = (0..seeds.len()).filter(|&i| seeds.seed(i).is_none()).collect();
    let score = |pred: &[usize]| -> Result<f64> {
        let p: Vec<usize> = unlabeled.iter().map(|&i| pred[i]).collect();
        let t: Vec<usize> = unlabeled.iter().map(|&i| truth.classes[i]).collect();
        accuracy(&p, &t)
    };

    let mut objective = Vec::new();
    let model = train_linear_ovr_with(&features, &seeds, LinearHyper::default(), |_, m| {
        objective.push(m.objective(&features, &seeds))
    })?;
    println!(
        "linear: objective {:.4} (epoch 1) -> {:.4}, accuracy {:.3}",
        objective[0],
        objective[objective.len() - 1],
        score(&predict_linear(&model, &features)?)?
    );

    for k in [1, 3] {
        println!(
            "{k}-nn:   accuracy {:.3}",
            score(&nearest_neighbor_propagate(&features, &seeds, k)?)?
        );
    }

    let config = GtgConfig::default();
    let graph = similarity_graph(&features, config.scale_k, 0)?;
    let gtg = extract_labels(&run_gtg(&graph, &seeds, &config, None)?, &seeds);
    println!("gtg:    accuracy {:.3}", score(&gtg.classes())?);
    Ok(())
}
