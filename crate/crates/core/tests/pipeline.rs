use gtg::dataset::{read_label_rows, write_pseudo_labels, PartialLabeling};
use gtg::experiment::propagate;
use gtg::prelude::*;
use proptest::prelude::*;

fn blobs(n: usize, m: usize, separation: f64, seed: u64) -> (FeatureSet, GroundTruth) {
    gaussian_blobs(&BlobSpec {
        n,
        d: 2,
        m,
        separation,
        seed,
    })
    .unwrap()
}

fn permuted(labeling: &PartialLabeling, perm: &[usize]) -> PartialLabeling {
    let seeds = labeling.seeds().iter().map(|s| s.map(|c| perm[c])).collect();
    PartialLabeling::new(labeling.ids().to_vec(), seeds, labeling.catalog().clone()).unwrap()
}

#[test]
fn pseudo_labels_survive_a_file_round_trip() {
    let (features, truth) = blobs(60, 3, 6.0, 4);
    let seeds = sample_partial_labeling(&truth, 0.1, 4).unwrap();
    let (result, _) = propagate(&features, &seeds, &GtgConfig::default(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.csv");
    write_pseudo_labels(&result, seeds.catalog(), &path).unwrap();
    let rows = read_label_rows(&path).unwrap();
    assert_eq!(rows.len(), 60);
    for (row, label) in rows.iter().zip(&result.labels) {
        assert_eq!(row.id, label.id);
        assert_eq!(row.label, seeds.catalog().name(label.class));
        assert_eq!(row.source, Some(label.source));
    }
}

#[test]
fn identical_across_thread_counts() {
    let (features, truth) = blobs(240, 4, 3.0, 9);
    let seeds = sample_partial_labeling(&truth, 0.05, 9).unwrap();
    let config = GtgConfig::default();
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| propagate(&features, &seeds, &config, None).unwrap())
    };
    let (labels1, run1) = run_with(1);
    for threads in [2, 5] {
        let (labels, run) = run_with(threads);
        assert_eq!(labels, labels1);
        assert_eq!(run.trace, run1.trace);
        assert_eq!(run.strategies.as_array(), run1.strategies.as_array());
    }
}

#[test]
fn sparsified_graph_still_labels_blobs() {
    let (features, truth) = blobs(150, 3, 6.0, 2);
    let seeds = sample_partial_labeling(&truth, 0.1, 2).unwrap();
    let config = GtgConfig {
        sparsify_k: 10,
        ..GtgConfig::default()
    };
    let (result, run) = propagate(&features, &seeds, &config, None).unwrap();
    assert!(run.stalled.iter().all(|&s| !s));
    // a pruned graph can lock a small pocket of one blob into a neighbouring
    // class (here 14 of 150 points), so this is looser than the dense case
    let acc = accuracy(&result.classes(), &truth.classes).unwrap();
    assert!(acc > 0.9, "accuracy {acc}, {} iterations", run.iterations);
    let (dense, _) = propagate(&features, &seeds, &GtgConfig::default(), None).unwrap();
    assert_eq!(accuracy(&dense.classes(), &truth.classes).unwrap(), 1.0);
}

#[test]
fn baselines_and_game_share_the_seed_contract() {
    let (features, truth) = blobs(90, 3, 5.0, 6);
    let seeds = sample_partial_labeling(&truth, 0.1, 6).unwrap();
    let linear = predict_linear(
        &train_linear_ovr(&features, &seeds, LinearHyper::default()).unwrap(),
        &features,
    )
    .unwrap();
    let knn = nearest_neighbor_propagate(&features, &seeds, 1).unwrap();
    let (game, _) = propagate(&features, &seeds, &GtgConfig::default(), None).unwrap();
    for (i, seed) in seeds.seeds().iter().enumerate() {
        if let Some(c) = *seed {
            assert_eq!(knn[i], c);
            assert_eq!(game.labels[i].class, c);
            assert_eq!(game.labels[i].source, LabelSource::Given);
        }
    }
    assert_eq!(linear.len(), 90);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn given_rows_keep_their_seed(seed in 0u64..1000, fraction in 0.05f64..0.5) {
        let (features, truth) = blobs(45, 3, 3.0, seed);
        let seeds = sample_partial_labeling(&truth, fraction, seed).unwrap();
        let config = GtgConfig { max_iterations: 30, ..GtgConfig::default() };
        let (result, run) = propagate(&features, &seeds, &config, None).unwrap();
        for (i, label) in result.labels.iter().enumerate() {
            match seeds.seed(i) {
                Some(c) => {
                    prop_assert_eq!(label.class, c);
                    prop_assert_eq!(label.source, LabelSource::Given);
                    prop_assert_eq!(label.confidence, 1.0);
                    prop_assert_eq!(run.strategies.row(i)[c], 1.0);
                }
                None => prop_assert_ne!(label.source, LabelSource::Given),
            }
        }
    }

    #[test]
    fn class_permutation_is_equivariant(seed in 0u64..1000, perm_idx in 0usize..6) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let perm = perms[perm_idx];
        let (features, truth) = blobs(36, 3, 3.0, seed);
        let seeds = sample_partial_labeling(&truth, 0.2, seed).unwrap();
        let config = GtgConfig { max_iterations: 25, ..GtgConfig::default() };
        let graph = similarity_graph(&features, config.scale_k, 0).unwrap();
        let a = run_gtg(&graph, &seeds, &config, None).unwrap();
        let b = run_gtg(&graph, &permuted(&seeds, &perm), &config, None).unwrap();
        prop_assert_eq!(a.iterations, b.iterations);
        for i in 0..seeds.len() {
            for (h, &ph) in perm.iter().enumerate() {
                let (x, y) = (a.strategies.row(i)[h], b.strategies.row(i)[ph]);
                prop_assert!((x - y).abs() <= 1e-12, "row {} class {}: {} vs {}", i, h, x, y);
            }
            // compare labels only where the argmax is not a near-tie
            let row = a.strategies.row(i);
            let mut sorted: Vec<f64> = row.to_vec();
            sorted.sort_by(|p, q| q.total_cmp(p));
            if sorted[0] - sorted[1] > 1e-9 {
                let la = extract_labels(&a, &seeds).labels[i].class;
                let lb = extract_labels(&b, &permuted(&seeds, &perm)).labels[i].class;
                prop_assert_eq!(perm[la], lb);
            }
        }
    }
}
