//! Spatially smooth starting abundances built from isotropic bumps.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::cube::AbundanceSet;
use crate::error::{bail, Result};
use crate::rng::{stream, stream_rng};

/// Floor added to every bump field so far-away pixels become even mixtures.
const BACKGROUND: f64 = 1e-3;

/// Default bump width for a grid of `n_pixels` shared by `p · blob_count` bumps.
pub fn default_width(n_pixels: usize, p: usize, blob_count: usize) -> f64 {
    0.5 * libm::sqrt(n_pixels as f64 / (p * blob_count.max(1)) as f64)
}

/// Random bump placement: `blob_count` bumps per endmember.
///
/// The first bump of every endmember lands on a distinct pixel which is
/// then made pure, so each map contains at least one abundance of exactly 1.
pub fn seed_abundance(rows: usize, cols: usize, p: usize, blob_count: usize, seed: u64) -> Result<AbundanceSet> {
    if p < 2 {
        bail!(Config, "need at least two endmembers, got {p}");
    }
    if rows == 0 || cols == 0 {
        bail!(Dimension, "empty grid");
    }
    if blob_count >= 1 && p > rows * cols {
        bail!(Config, "cannot place {p} pure pixels on {} pixels", rows * cols);
    }
    let mut rng = stream_rng(seed, stream::ABUNDANCE_SEED);
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut centers = Vec::with_capacity(p);
    for _ in 0..p {
        let mut bumps = Vec::with_capacity(blob_count);
        for b in 0..blob_count {
            loop {
                let r = rng.random_range(0..rows);
                let c = rng.random_range(0..cols);
                if b > 0 || !taken.contains(&(r, c)) {
                    if b == 0 {
                        taken.push((r, c));
                    }
                    bumps.push((r as f64, c as f64));
                    break;
                }
            }
        }
        centers.push(bumps);
    }
    seed_abundance_at(rows, cols, &centers, default_width(rows * cols, p, blob_count))
}

/// Deterministic variant with explicit bump centres `(row, col)` per endmember.
///
/// The pixel nearest each endmember's first centre is set pure; if two
/// endmembers share that pixel the later one wins.
pub fn seed_abundance_at(rows: usize, cols: usize, centers: &[Vec<(f64, f64)>], width: f64) -> Result<AbundanceSet> {
    let p = centers.len();
    if p < 2 {
        bail!(Config, "need at least two endmembers, got {p}");
    }
    if !(width > 0.0) {
        bail!(Config, "bump width must be positive");
    }
    let n = rows * cols;
    let inv = 1.0 / (2.0 * width * width);
    let mut data = vec![0.0; n * p];
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            let px = &mut data[i * p..(i + 1) * p];
            for (j, bumps) in centers.iter().enumerate() {
                px[j] = BACKGROUND
                    + bumps
                        .iter()
                        .map(|&(br, bc)| {
                            let d2 = (r as f64 - br) * (r as f64 - br) + (c as f64 - bc) * (c as f64 - bc);
                            libm::exp(-d2 * inv)
                        })
                        .sum::<f64>();
            }
            let total: f64 = px.iter().sum();
            px.iter_mut().for_each(|v| *v /= total);
        }
    }
    for (j, bumps) in centers.iter().enumerate() {
        if let Some(&(br, bc)) = bumps.first() {
            let r = (libm::round(br).max(0.0) as usize).min(rows - 1);
            let c = (libm::round(bc).max(0.0) as usize).min(cols - 1);
            let i = r * cols + c;
            data[i * p..(i + 1) * p].iter_mut().enumerate().for_each(|(k, v)| *v = if k == j { 1.0 } else { 0.0 });
        }
    }
    AbundanceSet::new(rows, cols, p, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_corner_bumps_are_pure() {
        let a = seed_abundance_at(20, 20, &[vec![(0.0, 0.0)], vec![(19.0, 19.0)]], 3.0).unwrap();
        assert!(a.get(0, 0) >= 0.99);
        assert!(a.get(399, 1) >= 0.99);
        // A pixel next to the corner is still dominated by its bump.
        assert!(a.get(1, 0) >= 0.99);
    }

    #[test]
    fn sums_to_one_and_has_pure_pixel_per_endmember() {
        let a = seed_abundance(30, 25, 4, 3, 9).unwrap();
        for i in 0..a.n_pixels() {
            assert!((a.pixel(i).iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        for j in 0..4 {
            assert!(a.map(j).contains(&1.0), "endmember {j} has no pure pixel");
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(seed_abundance(12, 12, 3, 2, 5).unwrap(), seed_abundance(12, 12, 3, 2, 5).unwrap());
    }

    #[test]
    fn needs_two_endmembers() {
        assert!(matches!(seed_abundance(5, 5, 1, 1, 0), Err(crate::Error::Config(_))));
    }
}
