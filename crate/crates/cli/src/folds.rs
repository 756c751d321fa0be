//! Stratified K-fold assignment.

use gsplit_core::rng;
use rand::seq::SliceRandom;

use crate::error::{CliError, Result};

/// Fold index in `0..k` for every sample.
///
/// Each class is shuffled on its own and dealt round-robin, with the dealer
/// position carried over from one class to the next. Every fold then holds
/// `floor` or `ceil` of `n_c / k` samples of each class `c`, and fold sizes
/// differ by at most one. The result depends only on `seed` and `labels`.
pub fn stratified_folds(labels: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(CliError::config(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(CliError::config(format!("{k} folds for {} samples", labels.len())));
    }
    if let Some(i) = labels.iter().position(|v| !v.is_finite()) {
        return Err(CliError::config(format!("label of sample {} is not finite", i + 1)));
    }
    let mut classes: Vec<f64> = labels.to_vec();
    classes.sort_by(f64::total_cmp);
    classes.dedup();

    let mut r = rng::seeded(seed);
    let mut folds = vec![0; labels.len()];
    let mut dealer = 0;
    for class in classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut r);
        for i in members {
            folds[i] = dealer % k;
            dealer += 1;
        }
    }
    Ok(folds)
}

/// Rejects any fold whose training split misses a class present overall.
pub fn check_training_classes(labels: &[f64], folds: &[usize], k: usize) -> Result<()> {
    let mut classes: Vec<f64> = labels.to_vec();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    for f in 0..k {
        for &c in &classes {
            if !labels.iter().zip(folds).any(|(&l, &g)| g != f && l == c) {
                return Err(CliError::config(format!(
                    "fold {}: training split has no samples of class {c}",
                    f + 1
                )));
            }
        }
    }
    Ok(())
}
