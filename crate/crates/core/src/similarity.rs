//! Weighted object graph built from features with a locally scaled
//! exponential kernel: `w(i, j) = exp(-|f_i - f_j| / (s_i * s_j))`, where
//! `s_i` is the distance from `i` to its k-th nearest neighbour.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::dataset::{write_with, FeatureSet};
use crate::error::{Error, Result};

/// Lower bound applied to every local scale.
pub const MIN_SCALE: f64 = 1e-12;

/// Neighbour rank used for local scaling unless configured otherwise.
pub const DEFAULT_SCALE_K: usize = 7;

/// Symmetric matrix of pairwise Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Array2<f64>);

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Per-object kernel bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScales(Vec<f64>);

impl LocalScales {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Weights {
    Dense(Array2<f64>),
    /// Per row, `(column, weight)` pairs in ascending column order.
    Sparse(Vec<Vec<(usize, f64)>>),
}

/// Symmetric non-negative weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    n: usize,
    weights: Weights,
}

impl SimilarityGraph {
    /// Wraps a dense weight matrix after checking the graph invariants.
    pub fn from_dense(w: Array2<f64>) -> Result<Self> {
        let (n, cols) = w.dim();
        if n != cols {
            return Err(Error::Shape(format!("weight matrix must be square, got {n}x{cols}")));
        }
        for i in 0..n {
            if w[[i, i]] != 0.0 {
                return Err(Error::Shape(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let v = w[[i, j]];
                if !(v.is_finite() && v >= 0.0) || v != w[[j, i]] {
                    return Err(Error::Shape(format!("weights at ({i},{j}) not symmetric non-negative")));
                }
            }
        }
        Ok(Self {
            n,
            weights: Weights::Dense(w),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.weights, Weights::Sparse(_))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match &self.weights {
            Weights::Dense(w) => w[[i, j]],
            Weights::Sparse(rows) => rows[i]
                .binary_search_by_key(&j, |&(c, _)| c)
                .map_or(0.0, |p| rows[i][p].1),
        }
    }

    /// Calls `f(j, w_ij)` for every stored entry of row `i` in ascending `j`.
    /// Dense rows include zero entries.
    #[inline]
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match &self.weights {
            Weights::Dense(w) => w.row(i).iter().enumerate().for_each(|(j, &v)| f(j, v)),
            Weights::Sparse(rows) => rows[i].iter().for_each(|&(j, v)| f(j, v)),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match &self.weights {
            Weights::Dense(w) => w.clone(),
            Weights::Sparse(rows) => {
                let mut w = Array2::zeros((self.n, self.n));
                for (i, row) in rows.iter().enumerate() {
                    for &(j, v) in row {
                        w[[i, j]] = v;
                    }
                }
                w
            }
        }
    }

    /// Number of stored non-zero off-diagonal entries.
    pub fn nnz(&self) -> usize {
        match &self.weights {
            Weights::Dense(w) => w.iter().filter(|&&v| v != 0.0).count(),
            Weights::Sparse(rows) => rows.iter().map(|r| r.iter().filter(|e| e.1 != 0.0).count()).sum(),
        }
    }

    /// Every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let weights = match &self.weights {
            Weights::Dense(w) => Weights::Dense(w * c),
            Weights::Sparse(rows) => Weights::Sparse(
                rows.iter()
                    .map(|r| r.iter().map(|&(j, v)| (j, v * c)).collect())
                    .collect(),
            ),
        };
        Self { n: self.n, weights }
    }

    /// Debug dump of the dense weight matrix, one comma-separated row per line.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = self.to_dense();
        write_with(path.as_ref(), |out| {
            for row in w.rows() {
                let line = row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",");
                writeln!(out, "{line}")?;
            }
            Ok(())
        })
    }
}

pub fn pairwise_distances(features: &FeatureSet) -> DistanceMatrix {
    let n = features.len();
    let x = features.features();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fi = x.row(i);
            (i + 1..n)
                .map(|j| {
                    fi.iter()
                        .zip(x.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let mut d = Array2::zeros((n, n));
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    DistanceMatrix(d)
}

/// Distance from each object to its `k`-th nearest other object, ties broken
/// by lower index, clamped below by [`MIN_SCALE`].
pub fn local_scales(distances: &DistanceMatrix, k: usize) -> Result<LocalScales> {
    let n = distances.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let scales = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (distances.get(i, j), j)).collect();
            let (_, kth, _) = others.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            kth.0.max(MIN_SCALE)
        })
        .collect();
    Ok(LocalScales(scales))
}

/// Dense kernel matrix with a zero diagonal.
pub fn build_similarity(distances: &DistanceMatrix, scales: &LocalScales) -> Result<SimilarityGraph> {
    let n = distances.len();
    let s = scales.as_slice();
    if s.len() != n {
        return Err(Error::Shape(format!("{} scales for {n} objects", s.len())));
    }
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = (-distances.get(i, j) / (s[i] * s[j])).exp();
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    Ok(SimilarityGraph {
        n,
        weights: Weights::Dense(w),
    })
}

/// Keeps `w_ij` when `j` is among the `k` strongest neighbours of `i` or vice
/// versa; everything else is dropped.
pub fn sparsify_knn(graph: &SimilarityGraph, k: usize) -> Result<SimilarityGraph> {
    let n = graph.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let w = graph.to_dense();
    let mut keep = vec![Vec::with_capacity(2 * k); n];
    for i in 0..n {
        let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        cand.sort_by(|&a, &b| w[[i, b]].total_cmp(&w[[i, a]]).then(a.cmp(&b)));
        for &j in &cand[..k] {
            keep[i].push(j);
            keep[j].push(i);
        }
    }
    let rows = keep
        .into_iter()
        .enumerate()
        .map(|(i, mut cols)| {
            cols.sort_unstable();
            cols.dedup();
            cols.into_iter().map(|j| (j, w[[i, j]])).collect()
        })
        .collect();
    Ok(SimilarityGraph {
        n,
        weights: Weights::Sparse(rows),
    })
}

/// Distances, local scales, kernel and optional sparsification in one call.
/// `sparsify_k == 0` keeps the graph dense.
pub fn similarity_graph(features: &FeatureSet, scale_k: usize, sparsify_k: usize) -> Result<SimilarityGraph> {
    let d = pairwise_distances(features);
    let s = local_scales(&d, scale_k)?;
    let g = build_similarity(&d, &s)?;
    if sparsify_k == 0 {
        Ok(g)
    } else {
        sparsify_knn(&g, sparsify_k)
    }
}
