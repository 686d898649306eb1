//! Core data model: observed cubes, endmember matrices and abundance sets.
//!
//! All containers store pixels in row-major order with the spectral (or
//! endmember) channel varying fastest.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{bail, Result};

/// Per-pixel sum-to-one tolerance used by [`AbundanceSet::validate`].
pub const ASC_TOLERANCE: f64 = 1e-6;

fn check_finite(data: &[f64], what: &str) -> Result<()> {
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        bail!(Constraint, "{what}: non-finite value at flat index {i}");
    }
    Ok(())
}

/// An `rows × cols` image with `bands` spectral channels per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    rows: usize,
    cols: usize,
    bands: usize,
    data: Vec<f64>,
}

impl HsiCube {
    pub fn new(rows: usize, cols: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || bands == 0 {
            bail!(Dimension, "cube must be non-empty, got {rows}x{cols}x{bands}");
        }
        if data.len() != rows * cols * bands {
            bail!(Dimension, "cube {rows}x{cols}x{bands} needs {} values, got {}", rows * cols * bands, data.len());
        }
        check_finite(&data, "cube")?;
        Ok(Self { rows, cols, bands, data })
    }

    pub fn zeros(rows: usize, cols: usize, bands: usize) -> Result<Self> {
        Self::new(rows, cols, bands, vec![0.0; rows * cols * bands])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Spectrum of the pixel with row-major index `i`.
    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.data[i * self.bands..(i + 1) * self.bands]
    }

    pub fn pixel_at(&self, row: usize, col: usize) -> &[f64] {
        self.pixel(row * self.cols + col)
    }

    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.data[(row * self.cols + col) * self.bands + band]
    }

    /// Copy of the interior `rows × cols` window starting at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, rows: usize, cols: usize) -> Result<Self> {
        if top + rows > self.rows || left + cols > self.cols {
            bail!(Bounds, "crop {rows}x{cols} at ({top},{left}) exceeds {}x{}", self.rows, self.cols);
        }
        let mut data = Vec::with_capacity(rows * cols * self.bands);
        for r in top..top + rows {
            let start = (r * self.cols + left) * self.bands;
            data.extend_from_slice(&self.data[start..start + cols * self.bands]);
        }
        Self::new(rows, cols, self.bands, data)
    }

    /// The listed pixels as a `1 × n` strip, in the given order.
    pub fn select_pixels(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.bands);
        for &i in indices {
            if i >= self.n_pixels() {
                bail!(Bounds, "pixel {i} outside {} pixels", self.n_pixels());
            }
            data.extend_from_slice(self.pixel(i));
        }
        Self::new(1, indices.len(), self.bands, data)
    }

    /// Mean squared value over every entry.
    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64
    }
}

/// `bands × endmembers` matrix of nonnegative spectra (one column per material).
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberMatrix {
    bands: usize,
    endmembers: usize,
    /// Band-major: `data[band * endmembers + j]`.
    data: Vec<f64>,
    names: Vec<String>,
}

impl EndmemberMatrix {
    pub fn new(bands: usize, endmembers: usize, data: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if bands == 0 || endmembers == 0 {
            bail!(Dimension, "endmember matrix must be non-empty");
        }
        if data.len() != bands * endmembers {
            bail!(Dimension, "endmember matrix {bands}x{endmembers} needs {} values, got {}", bands * endmembers, data.len());
        }
        if names.len() != endmembers {
            bail!(Dimension, "{} names for {endmembers} endmembers", names.len());
        }
        check_finite(&data, "endmember matrix")?;
        if let Some(i) = data.iter().position(|&v| v < 0.0) {
            bail!(Constraint, "negative reflectance in band {} of endmember {}", i / endmembers, i % endmembers);
        }
        for j in 0..endmembers {
            if (0..bands).all(|b| data[b * endmembers + j] == 0.0) {
                bail!(Constraint, "endmember {j} ({}) is identically zero", names[j]);
            }
        }
        Ok(Self { bands, endmembers, data, names })
    }

    /// Builds the matrix from per-endmember spectra.
    pub fn from_columns(columns: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let Some(first) = columns.first() else {
            bail!(Dimension, "no endmember columns");
        };
        let bands = first.len();
        if columns.iter().any(|c| c.len() != bands) {
            bail!(Dimension, "endmember columns have differing lengths");
        }
        let p = columns.len();
        let mut data = vec![0.0; bands * p];
        for (j, col) in columns.iter().enumerate() {
            for (b, &v) in col.iter().enumerate() {
                data[b * p + j] = v;
            }
        }
        Self::new(bands, p, data, names)
    }

    /// Columns named `em0, em1, …`.
    pub fn from_columns_unnamed(columns: &[Vec<f64>]) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("em{j}")).collect();
        Self::from_columns(columns, names)
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn endmembers(&self) -> usize {
        self.endmembers
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, band: usize, j: usize) -> f64 {
        self.data[band * self.endmembers + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.bands).map(|b| self.get(b, j)).collect()
    }

    /// `M · a` for one abundance vector.
    pub fn mix_linear(&self, a: &[f64]) -> Vec<f64> {
        (0..self.bands)
            .map(|b| {
                let row = &self.data[b * self.endmembers..(b + 1) * self.endmembers];
                row.iter().zip(a).map(|(m, x)| m * x).sum()
            })
            .collect()
    }
}

/// `p` abundance maps over an `rows × cols` grid.
///
/// Sets built with [`AbundanceSet::new`] satisfy ANC (every value ≥ 0) and
/// ASC (each pixel sums to one within [`ASC_TOLERANCE`]). Unconstrained
/// estimates, such as sparse regression without the sum-to-one row, use
/// [`AbundanceSet::from_raw`] and only guarantee finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceSet {
    rows: usize,
    cols: usize,
    endmembers: usize,
    data: Vec<f64>,
}

impl AbundanceSet {
    pub fn new(rows: usize, cols: usize, endmembers: usize, data: Vec<f64>) -> Result<Self> {
        let set = Self::from_raw(rows, cols, endmembers, data)?;
        set.validate()?;
        Ok(set)
    }

    pub fn from_raw(rows: usize, cols: usize, endmembers: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || endmembers == 0 {
            bail!(Dimension, "abundance set must be non-empty, got {rows}x{cols}x{endmembers}");
        }
        if data.len() != rows * cols * endmembers {
            bail!(Dimension, "abundance set {rows}x{cols}x{endmembers} needs {} values, got {}", rows * cols * endmembers, data.len());
        }
        check_finite(&data, "abundance set")?;
        Ok(Self { rows, cols, endmembers, data })
    }

    /// Assembles a set from `p` maps, each `rows · cols` long.
    pub fn from_maps(rows: usize, cols: usize, maps: &[Vec<f64>]) -> Result<Self> {
        let p = maps.len();
        let n = rows * cols;
        if maps.iter().any(|m| m.len() != n) {
            bail!(Dimension, "every map must hold {n} values");
        }
        let mut data = vec![0.0; n * p];
        for (j, map) in maps.iter().enumerate() {
            for (i, &v) in map.iter().enumerate() {
                data[i * p + j] = v;
            }
        }
        Self::new(rows, cols, p, data)
    }

    /// Checks ANC and ASC.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n_pixels() {
            let px = self.pixel(i);
            if let Some(j) = px.iter().position(|&v| v < 0.0) {
                bail!(Constraint, "ANC violated at pixel {i}, endmember {j}: {}", px[j]);
            }
            let sum: f64 = px.iter().sum();
            if (sum - 1.0).abs() > ASC_TOLERANCE {
                bail!(Constraint, "ASC violated at pixel {i}: sum {sum}");
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn endmembers(&self) -> usize {
        self.endmembers
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.data[i * self.endmembers..(i + 1) * self.endmembers]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.endmembers + j]
    }

    /// Map of endmember `j` in row-major pixel order.
    pub fn map(&self, j: usize) -> Vec<f64> {
        (0..self.n_pixels()).map(|i| self.get(i, j)).collect()
    }

    /// Keeps only the listed pixels, as a `1 × indices.len()` strip.
    pub fn select_pixels(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.endmembers);
        for &i in indices {
            if i >= self.n_pixels() {
                bail!(Bounds, "pixel {i} outside {} pixels", self.n_pixels());
            }
            data.extend_from_slice(self.pixel(i));
        }
        Self::from_raw(1, indices.len(), self.endmembers, data)
    }

    /// Constant `1/p` prediction with this set's geometry.
    pub fn uniform(rows: usize, cols: usize, endmembers: usize) -> Result<Self> {
        Self::new(rows, cols, endmembers, vec![1.0 / endmembers as f64; rows * cols * endmembers])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_rejects_nan_and_shape_mismatch() {
        assert!(matches!(HsiCube::new(1, 1, 2, vec![0.0, f64::NAN]), Err(crate::Error::Constraint(_))));
        assert!(matches!(HsiCube::new(2, 2, 1, vec![0.0; 3]), Err(crate::Error::Dimension(_))));
        assert!(HsiCube::new(0, 2, 1, vec![]).is_err());
    }

    #[test]
    fn endmember_invariants() {
        assert!(EndmemberMatrix::from_columns_unnamed(&[vec![0.1, 0.2], vec![0.0, 0.0]]).is_err());
        assert!(EndmemberMatrix::from_columns_unnamed(&[vec![0.1, -0.2]]).is_err());
        let m = EndmemberMatrix::from_columns_unnamed(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(m.get(1, 0), 0.2);
        assert_eq!(m.column(1), vec![0.3, 0.4]);
        assert_eq!(m.mix_linear(&[0.5, 0.5]), vec![0.2, 0.30000000000000004]);
    }

    #[test]
    fn abundance_validation() {
        assert!(AbundanceSet::new(1, 1, 2, vec![0.5, 0.5]).is_ok());
        assert!(AbundanceSet::new(1, 1, 2, vec![0.5, 0.5 + 2e-6]).is_err());
        assert!(AbundanceSet::new(1, 1, 2, vec![1.1, -0.1]).is_err());
        assert!(AbundanceSet::from_raw(1, 1, 2, vec![1.1, -0.1]).is_ok());
        let a = AbundanceSet::from_maps(1, 2, &[vec![1.0, 0.25], vec![0.0, 0.75]]).unwrap();
        assert_eq!(a.pixel(1), &[0.25, 0.75]);
        assert_eq!(a.map(0), vec![1.0, 0.25]);
    }

    #[test]
    fn crop_interior() {
        let cube = HsiCube::new(2, 3, 1, (0..6).map(f64::from).collect()).unwrap();
        let c = cube.crop(1, 1, 1, 2).unwrap();
        assert_eq!(c.data(), &[4.0, 5.0]);
        assert!(cube.crop(1, 2, 1, 2).is_err());
    }
}
