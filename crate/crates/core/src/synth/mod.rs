//! Structured synthetic scenes: seeded abundances, SLIC superpixels on each
//! map, random block split (`p → 2p` maps), generalized bilinear mixing and
//! SNR-calibrated noise.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cube::{AbundanceSet, EndmemberMatrix, HsiCube};
use crate::error::Result;
use crate::par::map_indices;

pub mod gbm;
pub mod library;
pub mod noise;
pub mod seed;
pub mod slic;
pub mod split;

pub use gbm::{gbm_mix, gbm_pixel, GbmParams};
pub use library::{select_endmembers, synthetic_library};
pub use noise::{add_gaussian_noise, measured_snr_db};
pub use seed::{seed_abundance, seed_abundance_at};
pub use slic::{slic_segment, SlicParams, SuperpixelLabeling};
pub use split::split_superpixels;

/// Interaction coefficients: one value for every pair, or the full pair list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Uniform(f64),
    Pairs(Vec<f64>),
}

impl GammaSpec {
    pub fn resolve(&self, endmembers: usize) -> Result<GbmParams> {
        match self {
            GammaSpec::Uniform(g) => GbmParams::uniform(endmembers, *g),
            GammaSpec::Pairs(v) => GbmParams::new(endmembers, v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rows: usize,
    pub cols: usize,
    /// Maps before the split; the scene ends up with twice as many endmembers.
    pub p_initial: usize,
    /// Bumps per endmember in the seed abundances.
    pub blob_count: usize,
    pub slic: SlicParams,
    /// Coefficients over the final `2 · p_initial` endmembers.
    pub gamma: GammaSpec,
    /// `None` means noise-free.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 100,
            cols: 100,
            p_initial: 4,
            blob_count: 3,
            slic: SlicParams::default_for(100 * 100),
            gamma: GammaSpec::Uniform(0.2),
            snr_db: Some(20.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    /// Observed cube, noise included.
    pub cube: HsiCube,
    /// The same mixture before noise.
    pub clean: HsiCube,
    pub abundances: AbundanceSet,
    pub endmembers: EndmemberMatrix,
    pub gbm: GbmParams,
}

/// SLIC labeling of every map, evaluated per map.
pub fn segment_maps(maps: &AbundanceSet, params: &SlicParams) -> Result<Vec<SuperpixelLabeling>> {
    map_indices(maps.endmembers(), |j| slic_segment(&maps.map(j), maps.rows(), maps.cols(), params)).into_iter().collect()
}

/// Runs the whole pipeline, drawing `2 · p_initial` endmembers from `library`.
pub fn synthesize_dataset(cfg: &SynthConfig, library: &EndmemberMatrix) -> Result<SyntheticDataset> {
    let p = 2 * cfg.p_initial;
    let gbm = cfg.gamma.resolve(p)?;
    let seeds = seed_abundance(cfg.rows, cfg.cols, cfg.p_initial, cfg.blob_count, cfg.seed)?;
    let labelings = segment_maps(&seeds, &cfg.slic)?;
    let abundances = split_superpixels(&seeds, &labelings, cfg.seed)?;
    let endmembers = select_endmembers(library, p, cfg.seed)?;
    let clean = gbm_mix(&endmembers, &abundances, &gbm)?;
    let cube = add_gaussian_noise(&clean, cfg.snr_db, cfg.seed)?;
    Ok(SyntheticDataset { cube, clean, abundances, endmembers, gbm })
}
