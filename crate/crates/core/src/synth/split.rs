//! Random split of superpixel blocks, doubling the number of abundance maps.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::Open01;
use rand::Rng;

use crate::cube::AbundanceSet;
use crate::error::{bail, Result};
use crate::rng::keyed_rng;
use crate::synth::slic::SuperpixelLabeling;

/// Split only when the first draw reaches this threshold.
pub const SPLIT_THRESHOLD: f64 = 0.5;
/// Values at or above `1 − PURE_TOLERANCE` count as pure.
pub const PURE_TOLERANCE: f64 = 1e-6;

pub fn is_pure(v: f64) -> bool {
    v >= 1.0 - PURE_TOLERANCE
}

/// Splits one block's values into the kept part and the part moved to the paired map.
///
/// `alpha1 ≥ 0.5` and no pure pixel: `((1 − α₂)·P, α₂·P)`; otherwise `(P, 0)`.
pub fn split_block(values: &[f64], alpha1: f64, alpha2: f64) -> (Vec<f64>, Vec<f64>) {
    if alpha1 >= SPLIT_THRESHOLD && !values.iter().any(|&v| is_pure(v)) {
        (values.iter().map(|v| (1.0 - alpha2) * v).collect(), values.iter().map(|v| alpha2 * v).collect())
    } else {
        (values.to_vec(), vec![0.0; values.len()])
    }
}

/// The `(α₁, α₂)` pair governing block `block` of map `map`.
pub fn block_draws(seed: u64, map: usize, block: usize) -> (f64, f64) {
    let mut rng = keyed_rng(seed, map as u64, block as u64);
    (rng.sample(Open01), rng.sample(Open01))
}

/// Maps `0..p` keep the retained parts; map `p + j` receives what was split off map `j`.
pub fn split_superpixels(maps: &AbundanceSet, labelings: &[SuperpixelLabeling], seed: u64) -> Result<AbundanceSet> {
    let p = maps.endmembers();
    if labelings.len() != p {
        bail!(Dimension, "{} labelings for {p} maps", labelings.len());
    }
    if let Some(l) = labelings.iter().find(|l| l.rows != maps.rows() || l.cols != maps.cols()) {
        bail!(Dimension, "labeling {}x{} does not match maps {}x{}", l.rows, l.cols, maps.rows(), maps.cols());
    }
    let n = maps.n_pixels();
    let mut kept: Vec<Vec<f64>> = (0..p).map(|j| maps.map(j)).collect();
    let mut moved: Vec<Vec<f64>> = vec![vec![0.0; n]; p];
    for (j, labeling) in labelings.iter().enumerate() {
        for (b, block) in labeling.blocks().iter().enumerate() {
            let values: Vec<f64> = block.iter().map(|&i| kept[j][i]).collect();
            let (a1, a2) = block_draws(seed, j, b);
            let (p1, p2) = split_block(&values, a1, a2);
            for (k, &i) in block.iter().enumerate() {
                kept[j][i] = p1[k];
                moved[j][i] = p2[k];
            }
        }
    }
    kept.extend(moved);
    AbundanceSet::from_maps(maps.rows(), maps.cols(), &kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_threshold_keeps_block() {
        let (p1, p2) = split_block(&[0.4, 0.6], 0.3, 0.9);
        assert_eq!(p1, vec![0.4, 0.6]);
        assert_eq!(p2, vec![0.0, 0.0]);
    }

    #[test]
    fn pure_block_never_splits() {
        let (p1, p2) = split_block(&[1.0, 0.2], 0.99, 0.5);
        assert_eq!(p1, vec![1.0, 0.2]);
        assert_eq!(p2, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_split() {
        let (p1, p2) = split_block(&[0.6], 0.8, 0.3);
        assert!((p1[0] - 0.42).abs() < 1e-15);
        assert!((p2[0] - 0.18).abs() < 1e-15);
        assert!((p1[0] + p2[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn draws_are_keyed_and_in_open_interval() {
        assert_eq!(block_draws(3, 1, 7), block_draws(3, 1, 7));
        assert_ne!(block_draws(3, 1, 7), block_draws(3, 1, 8));
        assert_ne!(block_draws(3, 1, 7), block_draws(3, 2, 7));
        for b in 0..200 {
            let (a, c) = block_draws(0, 0, b);
            assert!(a > 0.0 && a < 1.0 && c > 0.0 && c < 1.0);
        }
    }
}
