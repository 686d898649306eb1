//! SLIC superpixels on a single abundance map.
//!
//! Centres carry `(value, row, col)`. Each iteration assigns every pixel to
//! the centre minimizing the abundance distance among centres whose
//! `2S × 2S` window covers the pixel, then moves centres to their cluster
//! means. Pixels no window covers fall back to the globally nearest centre.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicParams {
    /// Target superpixel count.
    #[serde(rename = "K")]
    pub k: usize,
    /// Maximum abundance-value distance within a cluster.
    pub q: f64,
    pub iterations: usize,
}

impl SlicParams {
    /// `K = N / 100` (at least one), `q = 0.5`, ten iterations.
    pub fn default_for(n_pixels: usize) -> Self {
        Self { k: (n_pixels / 100).max(1), q: 0.5, iterations: 10 }
    }

    pub fn validate(&self, n_pixels: usize) -> Result<()> {
        if self.k == 0 || self.k > n_pixels {
            bail!(Config, "K must lie in 1..={n_pixels}, got {}", self.k);
        }
        if !(self.q > 0.0) {
            bail!(Config, "q must be positive, got {}", self.q);
        }
        if self.iterations == 0 {
            bail!(Config, "SLIC needs at least one iteration");
        }
        Ok(())
    }

    /// Grid interval `S = sqrt(N / K)`.
    pub fn interval(&self, n_pixels: usize) -> f64 {
        libm::sqrt(n_pixels as f64 / self.k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub value: f64,
    pub row: f64,
    pub col: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelLabeling {
    pub rows: usize,
    pub cols: usize,
    /// Compact ids `0..K′` in row-major pixel order.
    pub labels: Vec<usize>,
    /// Final centre of each compact id.
    pub centers: Vec<Center>,
}

impl SuperpixelLabeling {
    pub fn n_superpixels(&self) -> usize {
        self.centers.len()
    }

    /// Pixel indices of every superpixel.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.centers.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            blocks[l].push(i);
        }
        blocks
    }
}

/// One assignment step: the centres it used and the raw centre index chosen per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicIteration {
    pub centers: Vec<Center>,
    pub assignment: Vec<usize>,
}

/// `D_a = sqrt((d_c / q)² + (d_s / S)²)`.
pub fn abundance_distance(value_distance: f64, spatial_distance: f64, q: f64, interval: f64) -> f64 {
    let a = value_distance / q;
    let b = spatial_distance / interval;
    libm::sqrt(a * a + b * b)
}

/// Distance from pixel `(row, col)` holding `value` to `center`.
pub fn pixel_center_distance(value: f64, row: usize, col: usize, center: &Center, q: f64, interval: f64) -> f64 {
    let dr = row as f64 - center.row;
    let dc = col as f64 - center.col;
    abundance_distance(libm::fabs(value - center.value), libm::sqrt(dr * dr + dc * dc), q, interval)
}

/// Whether `center`'s `2S × 2S` search window contains pixel `(row, col)`.
pub fn window_covers(center: &Center, row: usize, col: usize, interval: f64) -> bool {
    libm::fabs(row as f64 - center.row) <= interval && libm::fabs(col as f64 - center.col) <= interval
}

/// Grid of `nr × nc ≤ K` seeds whose cells are closest to square.
fn grid_shape(rows: usize, cols: usize, k: usize) -> (usize, usize) {
    let mut best = (1, 1);
    let mut best_score = (0usize, f64::INFINITY);
    for nr in 1..=k.min(rows) {
        let nc = (k / nr).min(cols);
        if nc == 0 {
            continue;
        }
        let aspect = libm::fabs(libm::log((rows as f64 / nr as f64) / (cols as f64 / nc as f64)));
        let count = nr * nc;
        if count > best_score.0 || (count == best_score.0 && aspect < best_score.1) {
            best = (nr, nc);
            best_score = (count, aspect);
        }
    }
    best
}

fn gradient(map: &[f64], rows: usize, cols: usize, r: usize, c: usize) -> f64 {
    let at = |r: usize, c: usize| map[r * cols + c];
    let dv = at((r + 1).min(rows - 1), c) - at(r.saturating_sub(1), c);
    let dh = at(r, (c + 1).min(cols - 1)) - at(r, c.saturating_sub(1));
    dv * dv + dh * dh
}

/// Seeds at the cell centres of a regular grid. A seed moves to the
/// lowest-gradient pixel of the 3×3 neighbourhood around its nearest pixel
/// when that pixel's gradient is strictly lower; otherwise it keeps its
/// exact grid position.
pub fn initial_centers(map: &[f64], rows: usize, cols: usize, k: usize) -> Vec<Center> {
    let (nr, nc) = grid_shape(rows, cols, k);
    let mut centers = Vec::with_capacity(nr * nc);
    for i in 0..nr {
        let gr = (i as f64 + 0.5) * rows as f64 / nr as f64 - 0.5;
        let r0 = (libm::round(gr) as usize).min(rows - 1);
        for j in 0..nc {
            let gc = (j as f64 + 0.5) * cols as f64 / nc as f64 - 0.5;
            let c0 = (libm::round(gc) as usize).min(cols - 1);
            let mut best: Option<(usize, usize)> = None;
            let mut bg = gradient(map, rows, cols, r0, c0);
            for r in r0.saturating_sub(1)..=(r0 + 1).min(rows - 1) {
                for c in c0.saturating_sub(1)..=(c0 + 1).min(cols - 1) {
                    let g = gradient(map, rows, cols, r, c);
                    if g < bg {
                        best = Some((r, c));
                        bg = g;
                    }
                }
            }
            centers.push(match best {
                Some((r, c)) => Center { value: map[r * cols + c], row: r as f64, col: c as f64 },
                None => Center { value: map[r0 * cols + c0], row: gr, col: gc },
            });
        }
    }
    centers
}

/// Windowed assignment, scanning each centre's window in centre order.
pub fn assign(map: &[f64], rows: usize, cols: usize, centers: &[Center], q: f64, interval: f64) -> Vec<usize> {
    let n = rows * cols;
    let mut best = vec![f64::INFINITY; n];
    let mut label = vec![usize::MAX; n];
    let reach = libm::ceil(interval) as isize + 1;
    for (k, center) in centers.iter().enumerate() {
        let cr = libm::round(center.row) as isize;
        let cc = libm::round(center.col) as isize;
        let r_lo = (cr - reach).max(0) as usize;
        let r_hi = ((cr + reach) as usize).min(rows - 1);
        let c_lo = (cc - reach).max(0) as usize;
        let c_hi = ((cc + reach) as usize).min(cols - 1);
        for r in r_lo..=r_hi {
            for c in c_lo..=c_hi {
                if !window_covers(center, r, c, interval) {
                    continue;
                }
                let i = r * cols + c;
                let d = pixel_center_distance(map[i], r, c, center, q, interval);
                if d < best[i] {
                    best[i] = d;
                    label[i] = k;
                }
            }
        }
    }
    for i in 0..n {
        if label[i] == usize::MAX {
            let (r, c) = (i / cols, i % cols);
            let mut bd = f64::INFINITY;
            for (k, center) in centers.iter().enumerate() {
                let d = pixel_center_distance(map[i], r, c, center, q, interval);
                if d < bd {
                    bd = d;
                    label[i] = k;
                }
            }
        }
    }
    label
}

/// Moves each non-empty centre to the mean `(value, row, col)` of its members.
pub fn update_centers(map: &[f64], cols: usize, assignment: &[usize], centers: &[Center]) -> Vec<Center> {
    let mut sums = vec![(0.0, 0.0, 0.0, 0usize); centers.len()];
    for (i, &k) in assignment.iter().enumerate() {
        let s = &mut sums[k];
        s.0 += map[i];
        s.1 += (i / cols) as f64;
        s.2 += (i % cols) as f64;
        s.3 += 1;
    }
    sums.iter()
        .zip(centers)
        .map(|(&(v, r, c, n), old)| {
            if n == 0 {
                *old
            } else {
                let n = n as f64;
                Center { value: v / n, row: r / n, col: c / n }
            }
        })
        .collect()
}

fn check_map(map: &[f64], rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 || map.is_empty() {
        bail!(Dimension, "empty abundance map");
    }
    if map.len() != rows * cols {
        bail!(Dimension, "map holds {} values for a {rows}x{cols} grid", map.len());
    }
    if map.iter().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v)) {
        bail!(Constraint, "abundance map values must lie in [0, 1]");
    }
    Ok(())
}

/// Runs SLIC and records every assignment step.
pub fn slic_trace(map: &[f64], rows: usize, cols: usize, params: &SlicParams) -> Result<Vec<SlicIteration>> {
    check_map(map, rows, cols)?;
    params.validate(rows * cols)?;
    let interval = params.interval(rows * cols);
    let mut centers = initial_centers(map, rows, cols, params.k);
    let mut trace = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        let assignment = assign(map, rows, cols, &centers, params.q, interval);
        let next = update_centers(map, cols, &assignment, &centers);
        trace.push(SlicIteration { centers, assignment });
        centers = next;
    }
    Ok(trace)
}

/// Superpixel segmentation of one abundance map.
pub fn slic_segment(map: &[f64], rows: usize, cols: usize, params: &SlicParams) -> Result<SuperpixelLabeling> {
    let trace = slic_trace(map, rows, cols, params)?;
    let last = trace.last().expect("at least one iteration");
    let final_centers = update_centers(map, cols, &last.assignment, &last.centers);
    let mut used = vec![false; final_centers.len()];
    for &k in &last.assignment {
        used[k] = true;
    }
    let mut compact = vec![usize::MAX; final_centers.len()];
    let mut centers = Vec::new();
    for k in (0..used.len()).filter(|&k| used[k]) {
        compact[k] = centers.len();
        centers.push(final_centers[k]);
    }
    let labels = last.assignment.iter().map(|&k| compact[k]).collect();
    Ok(SuperpixelLabeling { rows, cols, labels, centers })
}
