//! Transductive label augmentation.
//!
//! A handful of seed labels are spread over a larger unlabeled feature set
//! by playing a graph transduction game: objects are players, labels are
//! strategies, and replicator dynamics drive the players towards a
//! consistent labeling. The crate also ships the first-order baselines,
//! metrics and synthetic data needed to compare the two.
//!
//! ```no_run
//! use gtg::prelude::*;
//!
//! let (features, truth) = gaussian_blobs(&BlobSpec { n: 300, d: 2, m: 3, separation: 6.0, seed: 1 })?;
//! let seeds = sample_partial_labeling(&truth, 0.05, 1)?;
//! let config = GtgConfig::default();
//! let graph = similarity_graph(&features, config.scale_k, config.sparsify_k)?;
//! let run = run_gtg(&graph, &seeds, &config, None)?;
//! let labels = extract_labels(&run, &seeds);
//! println!("{} iterations, accuracy {}", run.iterations, accuracy(&labels.classes(), &truth.classes)?);
//! # Ok::<(), gtg::Error>(())
//! ```

pub mod baselines;
pub mod cli;
pub mod dataset;
mod error;
pub mod evaluation;
pub mod experiment;
pub mod game;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::baselines::{
        nearest_neighbor_propagate, predict_linear, train_linear_ovr, LinearHyper, LinearModel,
    };
    pub use crate::dataset::{
        ClassCatalog, FeatureSet, GroundTruth, LabelSource, PartialLabeling, PseudoLabel, PseudoLabelResult,
    };
    pub use crate::evaluation::{accuracy, confusion, macro_f1, relative_improvement, ConfusionMatrix};
    pub use crate::game::{extract_labels, run_gtg, GtgConfig, GtgRun, PriorMask, StrategySpace};
    pub use crate::similarity::{similarity_graph, SimilarityGraph};
    pub use crate::synthetic::{gaussian_blobs, sample_partial_labeling, train_test_split, BlobSpec};
    pub use crate::{Error, Result};
}
