//! First-order propagators used as comparison points: a one-vs-rest linear
//! max-margin classifier fitted on the seeds, and k-nearest-seed voting.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSet, PartialLabeling};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LinearHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// One weight vector and bias per class; the score of class `h` is
/// `w_h . f + b_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub hyper: LinearHyper,
    /// Classes that had no seed and were fitted on negatives only.
    pub unseen_classes: Vec<usize>,
}

impl LinearModel {
    pub fn zeros(classes: usize, dim: usize, hyper: LinearHyper) -> Self {
        Self {
            weights: Array2::zeros((classes, dim)),
            bias: Array1::zeros(classes),
            hyper,
            unseen_classes: Vec::new(),
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn scores(&self, f: ArrayView1<'_, f64>) -> Array1<f64> {
        self.weights.dot(&f) + &self.bias
    }

    /// Regularised one-vs-rest hinge loss over the seeds, summed over classes.
    pub fn objective(&self, features: &FeatureSet, labeling: &PartialLabeling) -> f64 {
        let seeds: Vec<(usize, usize)> = labeling
            .seeds()
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|c| (i, c)))
            .collect();
        let mut total = 0.0;
        for h in 0..self.classes() {
            let w = self.weights.row(h);
            let reg = 0.5 * self.hyper.l2 * w.dot(&w);
            let hinge: f64 = seeds
                .iter()
                .map(|&(i, c)| {
                    let t = if c == h { 1.0 } else { -1.0 };
                    (1.0 - t * (w.dot(&features.row(i)) + self.bias[h])).max(0.0)
                })
                .sum();
            total += reg + hinge / seeds.len() as f64;
        }
        total
    }
}

pub fn train_linear_ovr(features: &FeatureSet, labeling: &PartialLabeling, hyper: LinearHyper) -> Result<LinearModel> {
    train_linear_ovr_with(features, labeling, hyper, |_, _| {})
}

/// Stochastic subgradient descent on the hinge loss, one binary problem per
/// class. `on_epoch(e, model)` runs after every epoch. A fresh permutation of
/// the seeds is drawn per epoch from a ChaCha8 stream seeded by
/// `hyper.seed`, so a fixed seed fixes the result.
pub fn train_linear_ovr_with(
    features: &FeatureSet,
    labeling: &PartialLabeling,
    hyper: LinearHyper,
    mut on_epoch: impl FnMut(usize, &LinearModel),
) -> Result<LinearModel> {
    if features.len() != labeling.len() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} labels",
            features.len(),
            labeling.len()
        )));
    }
    let mut order: Vec<(usize, usize)> = labeling
        .seeds()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|c| (i, c)))
        .collect();
    if order.is_empty() {
        return Err(Error::NoSeeds);
    }
    let m = labeling.num_classes();
    let mut model = LinearModel::zeros(m, features.dim(), hyper);
    model.unseen_classes = (0..m).filter(|h| order.iter().all(|&(_, c)| c != *h)).collect();

    let lr = hyper.learning_rate;
    let decay = 1.0 - lr * hyper.l2;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &(i, c) in &order {
            let f = features.row(i);
            for h in 0..m {
                let t = if c == h { 1.0 } else { -1.0 };
                let mut w = model.weights.row_mut(h);
                let margin = t * (w.dot(&f) + model.bias[h]);
                w *= decay;
                if margin < 1.0 {
                    w.scaled_add(lr * t, &f);
                    model.bias[h] += lr * t;
                }
            }
        }
        on_epoch(epoch, &model);
    }
    Ok(model)
}

/// Highest-scoring class per object, lowest index on ties.
pub fn predict_linear(model: &LinearModel, features: &FeatureSet) -> Result<Vec<usize>> {
    if features.dim() != model.dim() {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.dim(),
            features.dim()
        )));
    }
    Ok((0..features.len())
        .into_par_iter()
        .map(|i| first_max(model.scores(features.row(i)).iter().copied()))
        .collect())
}

fn first_max(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (h, v) in values.enumerate() {
        if v > best.1 {
            best = (h, v);
        }
    }
    best.0
}

/// Majority class among the `k` nearest seeds (Euclidean). Equidistant seeds
/// are ranked by class, then position; vote ties go to the lowest class.
/// Seeds keep their own label.
pub fn nearest_neighbor_propagate(features: &FeatureSet, labeling: &PartialLabeling, k: usize) -> Result<Vec<usize>> {
    if features.len() != labeling.len() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} labels",
            features.len(),
            labeling.len()
        )));
    }
    let seeds: Vec<(usize, usize)> = labeling
        .seeds()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|c| (i, c)))
        .collect();
    if seeds.is_empty() {
        return Err(Error::NoSeeds);
    }
    if k == 0 || k > seeds.len() {
        return Err(Error::InvalidK { k, n: seeds.len() });
    }
    let m = labeling.num_classes();
    Ok((0..features.len())
        .into_par_iter()
        .map(|i| {
            if let Some(c) = labeling.seed(i) {
                return c;
            }
            let fi = features.row(i);
            let mut near: Vec<(f64, usize, usize)> = seeds
                .iter()
                .map(|&(j, c)| {
                    let d: f64 = fi.iter().zip(features.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, j, c)
                })
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; m];
            for &(_, _, c) in &near[..k] {
                votes[c] += 1;
            }
            first_max(votes.into_iter().map(|v| v as f64))
        })
        .collect())
}
