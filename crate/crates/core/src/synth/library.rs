//! Endmember libraries: a built-in generator of smooth reflectance spectra
//! and seeded selection of well-separated members.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cube::EndmemberMatrix;
use crate::error::{bail, Result};
use crate::rng::{stream, stream_rng};

/// Candidates more similar than this (cosine) to an already chosen member are skipped.
pub const MAX_COSINE: f64 = 0.995;

/// Mineral-like spectra on `bands` evenly spaced channels: a sloped
/// continuum with a few Gaussian absorption and reflectance features,
/// clamped to `[0.01, 1]`.
pub fn synthetic_library(bands: usize, count: usize, seed: u64) -> Result<EndmemberMatrix> {
    if bands == 0 || count == 0 {
        bail!(Config, "library needs at least one band and one spectrum");
    }
    let mut rng = stream_rng(seed, stream::LIBRARY);
    let mut columns = Vec::with_capacity(count);
    for _ in 0..count {
        let base: f64 = rng.random_range(0.15..0.65);
        let slope: f64 = rng.random_range(-0.45..0.45);
        let curve: f64 = rng.random_range(-0.3..0.3);
        let n_features = rng.random_range(2..6);
        let features: Vec<(f64, f64, f64)> = (0..n_features)
            .map(|_| {
                let amp: f64 = rng.random_range(0.08..0.4);
                let sign = if rng.random_bool(0.7) { -1.0 } else { 1.0 };
                (sign * amp, rng.random_range(0.0..1.0), rng.random_range(0.02..0.15))
            })
            .collect();
        let spectrum = (0..bands)
            .map(|b| {
                let t = if bands == 1 { 0.5 } else { b as f64 / (bands - 1) as f64 };
                let mut v = base + slope * (t - 0.5) + curve * (t - 0.5) * (t - 0.5);
                for &(amp, center, width) in &features {
                    let d = (t - center) / width;
                    v += amp * libm::exp(-0.5 * d * d);
                }
                v.clamp(0.01, 1.0)
            })
            .collect();
        columns.push(spectrum);
    }
    let names = (0..count).map(|j| format!("mineral_{j:02}")).collect();
    EndmemberMatrix::from_columns(&columns, names)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    dot / libm::sqrt(na * nb)
}

/// Draws `k` members without replacement in a seeded order, skipping any
/// candidate whose cosine similarity to a chosen member exceeds [`MAX_COSINE`].
pub fn select_endmembers(library: &EndmemberMatrix, k: usize, seed: u64) -> Result<EndmemberMatrix> {
    if library.endmembers() < k {
        bail!(Config, "library has {} spectra, need {k}", library.endmembers());
    }
    let mut order: Vec<usize> = (0..library.endmembers()).collect();
    order.shuffle(&mut stream_rng(seed, stream::ENDMEMBER_PICK));
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in order {
        if chosen.len() == k {
            break;
        }
        let col = library.column(j);
        if columns.iter().all(|c| cosine(c, &col) <= MAX_COSINE) {
            chosen.push(j);
            columns.push(col);
        }
    }
    if chosen.len() < k {
        bail!(Config, "only {} sufficiently distinct spectra in the library, need {k}", chosen.len());
    }
    let names = chosen.iter().map(|&j| library.names()[j].clone()).collect();
    EndmemberMatrix::from_columns(&columns, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_is_valid_and_deterministic() {
        let a = synthetic_library(64, 12, 1).unwrap();
        assert_eq!(a, synthetic_library(64, 12, 1).unwrap());
        assert!(a.data().iter().all(|&v| (0.01..=1.0).contains(&v)));
    }

    #[test]
    fn selection_rejects_near_duplicates() {
        let base: Vec<f64> = (0..10).map(|b| 0.1 + 0.05 * b as f64).collect();
        let scaled: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let other: Vec<f64> = (0..10).map(|b| 0.9 - 0.08 * b as f64).collect();
        let lib = EndmemberMatrix::from_columns_unnamed(&[base, scaled, other]).unwrap();
        let picked = select_endmembers(&lib, 2, 5).unwrap();
        assert!(cosine(&picked.column(0), &picked.column(1)) < MAX_COSINE);
        assert!(select_endmembers(&lib, 3, 5).is_err());
    }

    #[test]
    fn default_library_supports_eight_distinct_members() {
        let lib = synthetic_library(198, 16, 0).unwrap();
        let m = select_endmembers(&lib, 8, 3).unwrap();
        assert_eq!((m.bands(), m.endmembers()), (198, 8));
    }
}
