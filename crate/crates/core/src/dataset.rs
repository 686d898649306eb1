//! Labeled / unlabeled pixel partitions.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::rng::{stream, stream_rng};

/// Disjoint labeled and unlabeled pixel indices covering `0..n`, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn n_pixels(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    /// Checks disjointness and coverage of `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = alloc::vec![false; n];
        for &i in self.labeled.iter().chain(&self.unlabeled) {
            if i >= n || seen[i] {
                bail!(Contract, "split index {i} repeated or outside 0..{n}");
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            bail!(Contract, "split does not cover every pixel");
        }
        Ok(())
    }
}

/// Number of labeled pixels: `labeled_fraction · n` rounded half-up.
pub fn labeled_count(n_pixels: usize, labeled_fraction: f64) -> usize {
    libm::floor(labeled_fraction * n_pixels as f64 + 0.5) as usize
}

/// Randomly marks `round(labeled_fraction · n)` pixels as labeled.
pub fn split_dataset(n_pixels: usize, labeled_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(labeled_fraction > 0.0 && labeled_fraction < 1.0) {
        bail!(Config, "labeled fraction must lie in (0, 1), got {labeled_fraction}");
    }
    let k = labeled_count(n_pixels, labeled_fraction);
    let mut order: Vec<usize> = (0..n_pixels).collect();
    order.shuffle(&mut stream_rng(seed, stream::DATASET_SPLIT));
    let mut labeled = order[..k].to_vec();
    let mut unlabeled = order[k..].to_vec();
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    Ok(DatasetSplit { labeled, unlabeled, seed })
}
