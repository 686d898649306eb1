//! Generalized bilinear mixing.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cube::{AbundanceSet, EndmemberMatrix, HsiCube};
use crate::error::{bail, Result};

/// Interaction coefficients `γ_{i,j}` for every unordered pair `i < j`,
/// ordered `(0,1), (0,2), …, (0,p−1), (1,2), …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    endmembers: usize,
    gamma: Vec<f64>,
}

pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

impl GbmParams {
    pub fn new(endmembers: usize, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != pair_count(endmembers) {
            bail!(Dimension, "{} coefficients for {} endmember pairs", gamma.len(), pair_count(endmembers));
        }
        if let Some(g) = gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            bail!(Constraint, "gamma {g} outside [0, 1]");
        }
        Ok(Self { endmembers, gamma })
    }

    /// The same coefficient for every pair.
    pub fn uniform(endmembers: usize, gamma: f64) -> Result<Self> {
        Self::new(endmembers, vec![gamma; pair_count(endmembers)])
    }

    /// `γ ≡ 0`: the linear mixing model.
    pub fn linear(endmembers: usize) -> Self {
        Self { endmembers, gamma: vec![0.0; pair_count(endmembers)] }
    }

    pub fn endmembers(&self) -> usize {
        self.endmembers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.gamma
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        // Pairs before row i: Σ_{k<i} (p − 1 − k).
        let offset = i * (2 * self.endmembers - i - 1) / 2;
        self.gamma[offset + (j - i - 1)]
    }
}

/// `x = M·a + Σ_{i<j} γ_ij · a_i · a_j · (m_i ⊙ m_j)` for one pixel.
pub fn gbm_pixel(m: &EndmemberMatrix, a: &[f64], g: &GbmParams) -> Vec<f64> {
    let p = m.endmembers();
    let mut x = m.mix_linear(a);
    for (b, xb) in x.iter_mut().enumerate() {
        let row = &m.data()[b * p..(b + 1) * p];
        let mut k = 0;
        for i in 0..p {
            for j in i + 1..p {
                *xb += g.coefficients()[k] * a[i] * a[j] * row[i] * row[j];
                k += 1;
            }
        }
    }
    x
}

/// Applies [`gbm_pixel`] to every pixel without checking ANC/ASC.
pub fn mix_pixels(m: &EndmemberMatrix, a: &AbundanceSet, g: &GbmParams) -> Result<HsiCube> {
    if m.endmembers() != a.endmembers() || g.endmembers() != a.endmembers() {
        bail!(Dimension, "endmember counts differ: matrix {}, abundances {}, gamma {}", m.endmembers(), a.endmembers(), g.endmembers());
    }
    let mut data = Vec::with_capacity(a.n_pixels() * m.bands());
    for i in 0..a.n_pixels() {
        data.extend(gbm_pixel(m, a.pixel(i), g));
    }
    HsiCube::new(a.rows(), a.cols(), m.bands(), data)
}

/// Noise-free generalized bilinear mixture of a constrained abundance set.
pub fn gbm_mix(m: &EndmemberMatrix, a: &AbundanceSet, g: &GbmParams) -> Result<HsiCube> {
    a.validate()?;
    mix_pixels(m, a, g)
}
