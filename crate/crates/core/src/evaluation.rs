//! Classification metrics.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Counts indexed by `(true class, predicted class)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix(Array2<u64>);

impl ConfusionMatrix {
    pub fn counts(&self) -> &Array2<u64> {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.sum()
    }

    pub fn trace(&self) -> u64 {
        self.0.diag().sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.0.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

fn check(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truth labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyEval);
    }
    Ok(())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

pub fn confusion(pred: &[usize], truth: &[usize], m: usize) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truth labels",
            pred.len(),
            truth.len()
        )));
    }
    let mut counts = Array2::zeros((m, m));
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= m || t >= m {
            return Err(Error::Shape(format!("class index out of range for {m} classes")));
        }
        counts[[t, p]] += 1;
    }
    Ok(ConfusionMatrix(counts))
}

/// Unweighted mean of per-class F1. Classes where precision or recall is
/// undefined, or both are zero, score 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], m: usize) -> Result<f64> {
    check(pred, truth)?;
    let c = confusion(pred, truth, m)?;
    let counts = c.counts();
    let mut total = 0.0;
    for h in 0..m {
        let tp = counts[[h, h]] as f64;
        let predicted = counts.column(h).sum() as f64;
        let actual = counts.row(h).sum() as f64;
        if tp > 0.0 {
            let precision = tp / predicted;
            let recall = tp / actual;
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    Ok(total / m as f64)
}

/// `(candidate - reference) / reference`.
pub fn relative_improvement(candidate: f64, reference: f64) -> Result<f64> {
    if reference.is_nan() || reference <= 0.0 {
        return Err(Error::InvalidReference(reference));
    }
    Ok((candidate - reference) / reference)
}
