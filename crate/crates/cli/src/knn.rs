//! Stratified cross-validated 1-nearest-neighbour accuracy from a distance matrix.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distance::DistanceMatrix;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvScore {
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Assigns every item to one of `folds` folds, spreading each class evenly.
///
/// Classes are visited in increasing order; the members of a class are
/// shuffled and dealt round-robin, continuing where the previous class
/// stopped so fold sizes differ by at most one.
pub fn stratified_folds(classes: &[i64], folds: usize, seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &c) in classes.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; classes.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Index of the nearest training item; ties go to the lowest index.
fn nearest(dm: &DistanceMatrix, query: usize, train: &[usize]) -> usize {
    let row = dm.entries().row(query);
    let mut best = train[0];
    for &j in &train[1..] {
        if row[j] < row[best] {
            best = j;
        }
    }
    best
}

pub fn knn_classify(dm: &DistanceMatrix, classes: &[i64], folds: usize, seed: u64) -> Result<CvScore> {
    let n = dm.len();
    if classes.len() != n {
        return Err(HarnessError::InvalidArgument(format!("{} classes for a {n}x{n} matrix", classes.len())));
    }
    if folds < 2 {
        return Err(HarnessError::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(HarnessError::InvalidArgument(format!("{folds} folds for {n} items")));
    }
    let assignment = stratified_folds(classes, folds, seed);
    let mut accuracies = Vec::with_capacity(folds);
    for fold in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == fold);
        let train_classes: BTreeSet<i64> = train.iter().map(|&i| classes[i]).collect();
        if let Some(&missing) = test.iter().map(|&i| &classes[i]).find(|c| !train_classes.contains(c)) {
            return Err(HarnessError::DegenerateFold { fold, class: missing });
        }
        let correct = test.iter().filter(|&&i| classes[nearest(dm, i, &train)] == classes[i]).count();
        accuracies.push(correct as f64 / test.len() as f64);
    }
    let mean = accuracies.iter().sum::<f64>() / folds as f64;
    let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / folds as f64;
    Ok(CvScore { mean, std: var.sqrt(), fold_accuracies: accuracies })
}

/// Accuracy of always predicting the most frequent class.
pub fn majority_baseline(classes: &[i64]) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &c in classes {
        *counts.entry(c).or_default() += 1;
    }
    counts.values().max().map_or(0.0, |&m| m as f64 / classes.len() as f64)
}
