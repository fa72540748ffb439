//! The graph transduction game.
//!
//! Every object is a player whose pure strategies are the class labels.
//! Player `i` holds a mixed strategy `x_i` on the probability simplex and
//! the coupling between two players is `w_ij * I`, so the payoff of label
//! `h` for player `i` is
//!
//! ```text
//! u_i(h) = sum_{j != i} w_ij * x_j(h)
//! u_i(x) = sum_h x_i(h) * u_i(h)
//! ```
//!
//! Labeled players hold one-hot strategies that never change, which makes
//! this identical to splitting the sum into an unlabeled part and a part that
//! counts the labeled neighbours carrying label `h`. Equilibria are found
//! with discrete replicator dynamics,
//! `x_i(h) <- x_i(h) * u_i(h) / u_i(x)`, applied synchronously to every
//! unlabeled player until successive strategy matrices are within
//! `epsilon` in Frobenius norm.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelSource, PartialLabeling, PseudoLabel, PseudoLabelResult};
use crate::error::{Error, Result};
use crate::similarity::{SimilarityGraph, DEFAULT_SCALE_K};

/// Allowed classes per unlabeled object position.
pub type PriorMask = BTreeMap<usize, Vec<usize>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtgConfig {
    /// Stop once `|X(t+1) - X(t)|_F <= epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Neighbour rank for local scaling.
    pub scale_k: usize,
    /// 0 keeps the graph dense, otherwise the mutual kNN union.
    pub sparsify_k: usize,
}

impl Default for GtgConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iterations: 100,
            scale_k: DEFAULT_SCALE_K,
            sparsify_k: 0,
        }
    }
}

impl GtgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.scale_k == 0 {
            return Err(Error::InvalidConfig("scale_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// `n x m` row-stochastic matrix of mixed strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpace(Array2<f64>);

impl StrategySpace {
    /// Wraps a matrix without checking the simplex constraint.
    pub fn from_array(x: Array2<f64>) -> Self {
        Self(x)
    }

    pub fn players(&self) -> usize {
        self.0.nrows()
    }

    pub fn strategies(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &StrategySpace) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Payoffs of every pure strategy (`pure[[i, h]] = u_i(h)`) and of the
/// current mixed strategy (`mixed[i] = u_i(x)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffState {
    pub pure: Array2<f64>,
    pub mixed: Vec<f64>,
}

/// One-hot rows for labeled players, uniform rows for the rest. A mask entry
/// restricts an unlabeled player to a uniform distribution over its allowed
/// classes.
pub fn init_strategies(labeling: &PartialLabeling, prior_mask: Option<&PriorMask>) -> Result<StrategySpace> {
    let n = labeling.len();
    let m = labeling.num_classes();
    let mut x = Array2::from_elem((n, m), 1.0 / m as f64);
    for (i, seed) in labeling.seeds().iter().enumerate() {
        if let Some(c) = *seed {
            x.row_mut(i).fill(0.0);
            x[[i, c]] = 1.0;
        }
    }
    for (&i, allowed) in prior_mask.into_iter().flatten() {
        let id = labeling
            .ids()
            .get(i)
            .ok_or_else(|| Error::Shape(format!("prior mask position {i} out of range")))?;
        if labeling.seed(i).is_some() {
            return Err(Error::MaskConflict(id.clone()));
        }
        let mut allowed = allowed.clone();
        allowed.sort_unstable();
        allowed.dedup();
        if allowed.is_empty() {
            return Err(Error::EmptyPrior(id.clone()));
        }
        if let Some(&bad) = allowed.iter().find(|&&c| c >= m) {
            return Err(Error::Shape(format!("prior class {bad} out of range for {m} classes")));
        }
        let mut row = x.row_mut(i);
        row.fill(0.0);
        let p = 1.0 / allowed.len() as f64;
        for c in allowed {
            row[c] = p;
        }
    }
    Ok(StrategySpace(x))
}

pub fn compute_payoffs(graph: &SimilarityGraph, x: &StrategySpace) -> Result<PayoffState> {
    let (n, m) = x.0.dim();
    if graph.len() != n {
        return Err(Error::Shape(format!(
            "graph has {} nodes, strategy space {n} players",
            graph.len()
        )));
    }
    let layout = x.0.as_standard_layout();
    let xs = layout.as_slice().expect("standard layout");
    let mut pure = vec![0.0; n * m];
    pure.par_chunks_mut(m).enumerate().for_each(|(i, u)| {
        graph.for_each_in_row(i, |j, w| {
            if w != 0.0 && j != i {
                for (uh, xh) in u.iter_mut().zip(&xs[j * m..(j + 1) * m]) {
                    *uh += w * xh;
                }
            }
        });
    });
    let mixed = pure
        .chunks(m)
        .zip(xs.chunks(m))
        .map(|(u, xi)| u.iter().zip(xi).map(|(a, b)| a * b).sum())
        .collect();
    Ok(PayoffState {
        pure: Array2::from_shape_vec((n, m), pure).expect("n*m payoffs"),
        mixed,
    })
}

/// Result of a single synchronous replicator update.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next: StrategySpace,
    /// Unlabeled rows whose mixed payoff was zero; they are left unchanged.
    pub stalled: Vec<bool>,
}

pub fn replicator_step(x: &StrategySpace, payoffs: &PayoffState, labeling: &PartialLabeling) -> Result<Step> {
    let (n, m) = x.0.dim();
    if payoffs.pure.dim() != (n, m) || payoffs.mixed.len() != n || labeling.len() != n {
        return Err(Error::Shape("strategy, payoff and labeling sizes disagree".into()));
    }
    let mut next = x.0.clone();
    let mut stalled = vec![false; n];
    for (i, stall) in stalled.iter_mut().enumerate() {
        if labeling.seed(i).is_some() {
            continue;
        }
        let mixed = payoffs.mixed[i];
        if mixed <= 0.0 {
            *stall = true;
            continue;
        }
        let mut row = next.row_mut(i);
        for (h, v) in row.iter_mut().enumerate() {
            *v *= payoffs.pure[[i, h]] / mixed;
        }
        let total: f64 = row.iter().sum();
        row.mapv_inplace(|v| v / total);
    }
    Ok(Step {
        next: StrategySpace(next),
        stalled,
    })
}

/// Potential `1/2 * sum_ij w_ij <x_i, x_j>`; non-decreasing under the
/// dynamics when the weights are symmetric.
pub fn potential(graph: &SimilarityGraph, x: &StrategySpace) -> f64 {
    let m = x.strategies();
    let mut total = 0.0;
    for i in 0..x.players() {
        let xi = x.row(i);
        graph.for_each_in_row(i, |j, w| {
            if w != 0.0 {
                let dot: f64 = (0..m).map(|h| xi[h] * x.0[[j, h]]).sum();
                total += w * dot;
            }
        });
    }
    0.5 * total
}

/// Stepwise driver for the dynamics; [`run_gtg`] runs it to completion.
#[derive(Debug, Clone)]
pub struct Replicator<'a> {
    graph: &'a SimilarityGraph,
    labeling: &'a PartialLabeling,
    state: StrategySpace,
    stalled: Vec<bool>,
    iterations: usize,
}

impl<'a> Replicator<'a> {
    pub fn new(
        graph: &'a SimilarityGraph,
        labeling: &'a PartialLabeling,
        prior_mask: Option<&PriorMask>,
    ) -> Result<Self> {
        if graph.len() != labeling.len() {
            return Err(Error::Shape(format!(
                "graph has {} nodes, labeling {} objects",
                graph.len(),
                labeling.len()
            )));
        }
        let state = init_strategies(labeling, prior_mask)?;
        let stalled = vec![false; labeling.len()];
        Ok(Self {
            graph,
            labeling,
            state,
            stalled,
            iterations: 0,
        })
    }

    pub fn state(&self) -> &StrategySpace {
        &self.state
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn stalled(&self) -> &[bool] {
        &self.stalled
    }

    /// Advances one iteration and returns the Frobenius residual.
    pub fn step(&mut self) -> f64 {
        let payoffs = compute_payoffs(self.graph, &self.state).expect("sizes checked in new");
        let step = replicator_step(&self.state, &payoffs, self.labeling).expect("sizes checked in new");
        let residual = step.next.distance(&self.state);
        for (s, now) in self.stalled.iter_mut().zip(step.stalled) {
            *s |= now;
        }
        self.state = step.next;
        self.iterations += 1;
        residual
    }

    pub fn finish(self, converged: bool, residual: f64, trace: Vec<f64>) -> GtgRun {
        GtgRun {
            strategies: self.state,
            iterations: self.iterations,
            converged,
            residual,
            stalled: self.stalled,
            trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtgRun {
    pub strategies: StrategySpace,
    pub iterations: usize,
    pub converged: bool,
    /// Residual of the last iteration.
    pub residual: f64,
    pub stalled: Vec<bool>,
    /// Residual after each iteration, starting at iteration 1.
    pub trace: Vec<f64>,
}

pub fn run_gtg(
    graph: &SimilarityGraph,
    labeling: &PartialLabeling,
    config: &GtgConfig,
    prior_mask: Option<&PriorMask>,
) -> Result<GtgRun> {
    config.validate()?;
    let mut rd = Replicator::new(graph, labeling, prior_mask)?;
    let mut trace = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while rd.iterations() < config.max_iterations {
        residual = rd.step();
        trace.push(residual);
        if residual <= config.epsilon {
            converged = true;
            break;
        }
    }
    Ok(rd.finish(converged, residual, trace))
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: ArrayView1<'_, f64>) -> (usize, f64) {
    let mut best = (0, row[0]);
    for (h, &v) in row.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (h, v);
        }
    }
    best
}

/// Pseudo-labels by argmax of the final strategies; seeds pass through.
pub fn extract_labels(run: &GtgRun, labeling: &PartialLabeling) -> PseudoLabelResult {
    let labels = labeling
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let (class, confidence, source) = match labeling.seed(i) {
                Some(c) => (c, 1.0, LabelSource::Given),
                None => {
                    let (c, p) = argmax(run.strategies.row(i));
                    let source = if run.stalled.get(i).copied().unwrap_or(false) {
                        LabelSource::Unpropagated
                    } else {
                        LabelSource::Propagated
                    };
                    (c, p, source)
                }
            };
            PseudoLabel {
                id: id.clone(),
                class,
                confidence,
                source,
            }
        })
        .collect();
    PseudoLabelResult {
        labels,
        iterations: run.iterations,
        converged: run.converged,
        residual: run.residual,
    }
}
