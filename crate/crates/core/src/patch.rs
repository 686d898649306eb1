//! Mirror padding and sliding-window patch extraction.

use alloc::vec::Vec;

use crate::cube::HsiCube;
use crate::error::{bail, Result};

/// Reflects `i` into `0..n` without repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

/// Pads every side by `margin` pixels using symmetric reflection that
/// excludes the edge pixel: padded offset `k` outside the border copies
/// the interior pixel `k` steps inside it.
pub fn mirror_pad(cube: &HsiCube, margin: usize) -> Result<HsiCube> {
    let (rows, cols, bands) = (cube.rows(), cube.cols(), cube.bands());
    if margin > rows.min(cols) - 1 {
        bail!(Dimension, "margin {margin} too large for a {rows}x{cols} cube");
    }
    if margin == 0 {
        return Ok(cube.clone());
    }
    let (pr, pc) = (rows + 2 * margin, cols + 2 * margin);
    let m = margin as isize;
    let mut data = Vec::with_capacity(pr * pc * bands);
    for r in 0..pr {
        let sr = reflect(r as isize - m, rows);
        for c in 0..pc {
            let sc = reflect(c as isize - m, cols);
            data.extend_from_slice(cube.pixel_at(sr, sc));
        }
    }
    HsiCube::new(pr, pc, bands, data)
}

/// A mirror-padded cube together with the margin it was padded by.
#[derive(Debug, Clone)]
pub struct PaddedCube {
    padded: HsiCube,
    margin: usize,
    rows: usize,
    cols: usize,
}

impl PaddedCube {
    pub fn new(cube: &HsiCube, margin: usize) -> Result<Self> {
        Ok(Self { padded: mirror_pad(cube, margin)?, margin, rows: cube.rows(), cols: cube.cols() })
    }

    /// Pads just enough for windows of side `s`.
    pub fn for_window(cube: &HsiCube, s: usize) -> Result<Self> {
        check_window(s)?;
        Self::new(cube, (s - 1) / 2)
    }

    pub fn padded(&self) -> &HsiCube {
        &self.padded
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Unpadded row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Unpadded column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bands(&self) -> usize {
        self.padded.bands()
    }
}

/// An `s × s × L` window centred on one pixel of the source cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    size: usize,
    bands: usize,
    /// Token-major: pixel `(dr, dc)` occupies `[(dr*s + dc)*L, … + L)`.
    values: Vec<f64>,
    center: (usize, usize),
}

impl Patch {
    pub fn new(size: usize, bands: usize, values: Vec<f64>, center: (usize, usize)) -> Result<Self> {
        check_window(size)?;
        if values.len() != size * size * bands {
            bail!(Dimension, "patch {size}x{size}x{bands} needs {} values", size * size * bands);
        }
        Ok(Self { size, bands, values, center })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Centre coordinates in the unpadded cube.
    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    pub fn n_tokens(&self) -> usize {
        self.size * self.size
    }

    /// Token index of the central pixel, `(s² − 1) / 2`.
    pub fn center_token(&self) -> usize {
        (self.size * self.size - 1) / 2
    }

    pub fn pixel(&self, dr: usize, dc: usize) -> &[f64] {
        let t = dr * self.size + dc;
        &self.values[t * self.bands..(t + 1) * self.bands]
    }
}

fn check_window(s: usize) -> Result<()> {
    if s == 0 || s.is_multiple_of(2) {
        bail!(Config, "window side must be odd, got {s}");
    }
    Ok(())
}

/// Cuts the `s × s` window centred on unpadded pixel `(center_row, center_col)`.
pub fn extract_patch(padded: &PaddedCube, center_row: usize, center_col: usize, s: usize) -> Result<Patch> {
    check_window(s)?;
    let half = (s - 1) / 2;
    if half > padded.margin {
        bail!(Contract, "window {s} needs margin {half}, cube padded by {}", padded.margin);
    }
    if center_row >= padded.rows || center_col >= padded.cols {
        bail!(Bounds, "centre ({center_row},{center_col}) outside {}x{} interior", padded.rows, padded.cols);
    }
    let top = center_row + padded.margin - half;
    let left = center_col + padded.margin - half;
    let bands = padded.bands();
    let cube = &padded.padded;
    let mut values = Vec::with_capacity(s * s * bands);
    for r in top..top + s {
        let start = (r * cube.cols() + left) * bands;
        values.extend_from_slice(&cube.data()[start..start + s * bands]);
    }
    Ok(Patch { size: s, bands, values, center: (center_row, center_col) })
}

/// Row-major iterator over one patch per pixel.
pub struct PatchIter {
    padded: PaddedCube,
    s: usize,
    next: usize,
}

impl Iterator for PatchIter {
    type Item = Patch;

    fn next(&mut self) -> Option<Patch> {
        let n = self.padded.rows * self.padded.cols;
        if self.next >= n {
            return None;
        }
        let (r, c) = (self.next / self.padded.cols, self.next % self.padded.cols);
        self.next += 1;
        // Centre is in range and margin fits by construction.
        extract_patch(&self.padded, r, c, self.s).ok()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.padded.rows * self.padded.cols - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PatchIter {}

/// Every pixel as the centre of exactly one patch, in row-major order.
pub fn iterate_patches(cube: &HsiCube, s: usize) -> Result<PatchIter> {
    Ok(PatchIter { padded: PaddedCube::for_window(cube, s)?, s, next: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ramp(rows: usize, cols: usize, bands: usize) -> HsiCube {
        HsiCube::new(rows, cols, bands, (0..rows * cols * bands).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn zero_margin_is_identity() {
        let cube = ramp(3, 4, 2);
        assert_eq!(mirror_pad(&cube, 0).unwrap(), cube);
    }

    #[test]
    fn row_reflection_excludes_edge() {
        // [a, b, c] = [1, 2, 3] → [b, a, b, c, b]
        let cube = HsiCube::new(2, 3, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let p = mirror_pad(&cube, 1).unwrap();
        assert_eq!((p.rows(), p.cols()), (4, 5));
        let row1: Vec<f64> = (0..5).map(|c| p.get(1, c, 0)).collect();
        assert_eq!(row1, vec![2.0, 1.0, 2.0, 3.0, 2.0]);
    }

    #[test]
    fn corner_of_margin_two() {
        let cube = ramp(3, 3, 1);
        let p = mirror_pad(&cube, 2).unwrap();
        assert_eq!(p.get(0, 0, 0), cube.get(2, 2, 0));
        assert_eq!(p.get(0, 6, 0), cube.get(2, 0, 0));
        assert_eq!(p.get(6, 0, 0), cube.get(0, 2, 0));
    }

    #[test]
    fn margin_too_large() {
        assert!(matches!(mirror_pad(&ramp(3, 5, 1), 3), Err(crate::Error::Dimension(_))));
    }

    #[test]
    fn patch_errors() {
        let padded = PaddedCube::new(&ramp(3, 3, 1), 1).unwrap();
        assert!(matches!(extract_patch(&padded, 1, 1, 2), Err(crate::Error::Config(_))));
        assert!(matches!(extract_patch(&padded, 3, 0, 3), Err(crate::Error::Bounds(_))));
        assert!(matches!(extract_patch(&padded, 1, 1, 5), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn unit_window_is_center_spectrum() {
        let cube = ramp(4, 4, 3);
        let padded = PaddedCube::new(&cube, 0).unwrap();
        let p = extract_patch(&padded, 2, 1, 1).unwrap();
        assert_eq!(p.values(), cube.pixel_at(2, 1));
    }

    #[test]
    fn interior_window_matches_sub_block() {
        let cube = ramp(5, 5, 2);
        let padded = PaddedCube::new(&cube, 1).unwrap();
        let p = extract_patch(&padded, 2, 3, 3).unwrap();
        for dr in 0..3 {
            for dc in 0..3 {
                assert_eq!(p.pixel(dr, dc), cube.pixel_at(1 + dr, 2 + dc));
            }
        }
        assert_eq!(p.center_token(), 4);
    }

    #[test]
    fn corner_window_by_index_table() {
        // 3×3 values 0..9; centre (0,0), s = 3. Rows/cols −1 reflect to 1.
        let cube = ramp(3, 3, 1);
        let padded = PaddedCube::new(&cube, 1).unwrap();
        let p = extract_patch(&padded, 0, 0, 3).unwrap();
        assert_eq!(p.values(), &[4.0, 3.0, 4.0, 1.0, 0.0, 1.0, 4.0, 3.0, 4.0]);
    }

    #[test]
    fn patch_counts_and_order() {
        let patches: Vec<_> = iterate_patches(&ramp(10, 10, 1), 3).unwrap().collect();
        assert_eq!(patches.len(), 100);
        assert_eq!(patches[0].center(), (0, 0));
        assert_eq!(patches[99].center(), (9, 9));
        let urban = HsiCube::zeros(307, 307, 1).unwrap();
        assert_eq!(iterate_patches(&urban, 1).unwrap().len(), 94249);
    }

    proptest! {
        #[test]
        fn pad_then_crop_is_identity(rows in 1usize..7, cols in 1usize..7, bands in 1usize..3, m in 0usize..6) {
            let cube = ramp(rows, cols, bands);
            let margin = m.min(rows.min(cols) - 1);
            let p = mirror_pad(&cube, margin).unwrap();
            prop_assert_eq!(p.crop(margin, margin, rows, cols).unwrap(), cube);
        }

        #[test]
        fn every_pixel_centres_one_patch(rows in 3usize..8, cols in 3usize..8, half in 0usize..2) {
            let s = 2 * half + 1;
            let cube = ramp(rows, cols, 1);
            let centers: Vec<_> = iterate_patches(&cube, s).unwrap().map(|p| p.center()).collect();
            let expected: Vec<_> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
            prop_assert_eq!(centers, expected);
        }
    }
}
