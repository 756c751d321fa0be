//! Classification, recovery and stability metrics.

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::glm_loss::Dataset;

/// The four recovery errors reported for a single estimate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationErrors {
    /// `||beta_les - beta*||`
    pub les_coef: f64,
    /// `||beta_pre - beta*||`
    pub pre_coef: f64,
    /// `||X beta_les - X beta*||`
    pub les_fit: f64,
    /// `||X beta_pre - X beta*||`
    pub pre_fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub auc: f64,
    pub mdc: Option<f64>,
    pub support_size_mean: f64,
    pub estimation_errors: Option<EstimationErrors>,
}

fn check_scores(scores: &DVector<f64>, labels: &DVector<f64>) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scores"));
    }
    check_len("labels", scores.len(), labels.len())?;
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &v)| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidLabel { index, value });
    }
    Ok(())
}

/// Fraction of samples where `sign(score)` equals the label; a zero score
/// predicts `+1`.
pub fn accuracy(scores: &DVector<f64>, labels: &DVector<f64>) -> Result<f64> {
    check_scores(scores, labels)?;
    let hits = scores
        .iter()
        .zip(labels.iter())
        .filter(|(&s, &l)| (if s >= 0.0 { 1.0 } else { -1.0 }) == l)
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Mann-Whitney AUC by exact pair counting; ties count one half.
pub fn auc(scores: &DVector<f64>, labels: &DVector<f64>) -> Result<f64> {
    check_scores(scores, labels)?;
    let pos: Vec<f64> = scores.iter().zip(labels.iter()).filter(|(_, &l)| l > 0.0).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels.iter()).filter(|(_, &l)| l < 0.0).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("auc needs both classes"));
    }
    let mut wins = 0.0;
    for &a in &pos {
        for &b in &neg {
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// Multi-set Dice coefficient `K |intersection| / sum |S_k|`, defined as 0
/// when every set is empty.
pub fn mdc<S: AsRef<[usize]>>(supports: &[S]) -> Result<f64> {
    if supports.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "mdc needs at least two sets, got {}",
            supports.len()
        )));
    }
    let sets: Vec<BTreeSet<usize>> = supports.iter().map(|s| s.as_ref().iter().copied().collect()).collect();
    let total: usize = sets.iter().map(BTreeSet::len).sum();
    if total == 0 {
        return Ok(0.0);
    }
    let common = sets[0].iter().filter(|i| sets[1..].iter().all(|s| s.contains(i))).count();
    Ok((sets.len() * common) as f64 / total as f64)
}

pub fn estimation_errors(beta_pre: &DVector<f64>, beta_les: &DVector<f64>, data: &Dataset) -> Result<EstimationErrors> {
    let beta_star = data
        .beta_star
        .as_ref()
        .ok_or(Error::MissingTruth("estimation errors need beta_star"))?;
    check_len("beta_pre", data.p(), beta_pre.len())?;
    check_len("beta_les", data.p(), beta_les.len())?;
    let les = beta_les - beta_star;
    let pre = beta_pre - beta_star;
    Ok(EstimationErrors {
        les_coef: les.norm(),
        pre_coef: pre.norm(),
        les_fit: (&data.x * &les).norm(),
        pre_fit: (&data.x * &pre).norm(),
    })
}

/// True when `gamma` and `signed_truth` have the same nonzero pattern and
/// agree in sign on it.
pub fn sign_consistency(gamma: &DVector<f64>, signed_truth: &DVector<f64>) -> Result<bool> {
    check_len("signed truth", gamma.len(), signed_truth.len())?;
    Ok(gamma.iter().zip(signed_truth.iter()).all(|(&g, &t)| {
        if t == 0.0 {
            g == 0.0
        } else {
            g != 0.0 && g.signum() == t.signum()
        }
    }))
}
