use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::linalg::{endmember_matrix, gather, indices, principal, require_full_rank};
use crate::cube::{AbundanceSet, EndmemberMatrix, HsiCube};
use crate::error::{bail, Result};
use crate::par::map_indices;

/// Bound on the scaled KKT residual of a converged FCLS solve.
pub const KKT_TOLERANCE: f64 = 1e-8;

/// Weight of the sum-to-one row appended for the NNLS warm start.
const ASC_WEIGHT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FclsDiagnostics {
    /// Active-set iterations of the refinement stage.
    pub iterations: usize,
    /// Largest violation among stationarity, complementarity and feasibility,
    /// relative to `max(1, ‖Mᵀx‖∞)`.
    pub kkt_residual: f64,
}

/// Precomputed solver for one endmember matrix.
#[derive(Debug, Clone)]
pub struct Fcls {
    m: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl Fcls {
    pub fn new(m: &EndmemberMatrix) -> Result<Self> {
        let m = endmember_matrix(m);
        require_full_rank(&m)?;
        Ok(Self { gram: m.transpose() * &m, m })
    }

    pub fn endmembers(&self) -> usize {
        self.m.ncols()
    }

    /// `argmin ‖x − M·a‖₂` subject to `a ≥ 0`, `Σa = 1`.
    pub fn solve(&self, x: &[f64]) -> Result<(Vec<f64>, FclsDiagnostics)> {
        if x.len() != self.m.nrows() {
            bail!(Dimension, "pixel has {} bands, endmembers have {}", x.len(), self.m.nrows());
        }
        let h = self.m.transpose() * DVector::from_column_slice(x);
        let p = self.endmembers();

        // Warm start: NNLS on [M; δ·1ᵀ] a ≈ [x; δ], in normal-equation form.
        let w2 = ASC_WEIGHT * ASC_WEIGHT;
        let aug_g = &self.gram + DMatrix::from_element(p, p, w2);
        let aug_h = &h + DVector::from_element(p, w2);
        let mut a = nnls_gram(&aug_g, &aug_h)?;
        let s = a.sum();
        if s > 0.0 {
            a /= s;
        } else {
            a = DVector::from_element(p, 1.0 / p as f64);
        }
        let (a, iterations) = self.refine(a, &h)?;
        let kkt_residual = self.kkt_residual(&a, &h);
        Ok((a.iter().copied().collect(), FclsDiagnostics { iterations, kkt_residual }))
    }

    /// Primal active-set method for the simplex-constrained quadratic,
    /// started from a feasible point.
    fn refine(&self, mut a: DVector<f64>, h: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
        let p = a.len();
        let scale = h.amax().max(1.0);
        let mut bound: Vec<bool> = a.iter().map(|&v| v <= 0.0).collect();
        for (v, &b) in a.iter_mut().zip(&bound) {
            if b {
                *v = 0.0;
            }
        }
        let max_iter = 20 * p + 20;
        for it in 0..max_iter {
            let free = indices(&bound, false);
            let cand = self.equality_solve(&free, h)?;
            let step = free
                .iter()
                .zip(cand.iter())
                .filter(|(&i, &c)| c < a[i])
                .map(|(&i, &c)| (a[i] / (a[i] - c), i))
                .fold((1.0, usize::MAX), |best, cur| if cur.0 < best.0 { cur } else { best });
            if step.0 < 1.0 && step.1 != usize::MAX && cand.iter().any(|&c| c < 0.0) {
                for (&i, &c) in free.iter().zip(cand.iter()) {
                    a[i] += step.0 * (c - a[i]);
                }
                a[step.1] = 0.0;
                bound[step.1] = true;
                continue;
            }
            for (&i, &c) in free.iter().zip(cand.iter()) {
                a[i] = c.max(0.0);
            }
            // Multipliers of the active bounds: λ = g + ν·1 with ν = −g on the free set.
            let g = &self.gram * &a - h;
            let nu = -free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64;
            let worst = indices(&bound, true).into_iter().map(|i| (g[i] + nu, i)).fold((0.0, usize::MAX), |b, c| if c.0 < b.0 { c } else { b });
            if worst.1 == usize::MAX || worst.0 >= -1e-14 * scale {
                return Ok((a, it + 1));
            }
            bound[worst.1] = false;
        }
        bail!(Numerical, "FCLS active set did not settle in {max_iter} iterations");
    }

    /// Minimiser over the affine face `{a_F free, Σa_F = 1, rest 0}`.
    fn equality_solve(&self, free: &[usize], h: &DVector<f64>) -> Result<DVector<f64>> {
        let chol = principal(&self.gram, free)
            .cholesky()
            .ok_or_else(|| crate::Error::Conditioning("endmember Gram submatrix is not positive definite".into()))?;
        let u = chol.solve(&gather(h, free));
        let v = chol.solve(&DVector::from_element(free.len(), 1.0));
        let nu = (u.sum() - 1.0) / v.sum();
        Ok(u - v * nu)
    }

    fn kkt_residual(&self, a: &DVector<f64>, h: &DVector<f64>) -> f64 {
        let scale = h.amax().max(1.0);
        let g = &self.gram * a - h;
        let free: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
        let nu = if free.is_empty() { 0.0 } else { -free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64 };
        let mut r = libm::fabs(a.sum() - 1.0);
        for i in 0..a.len() {
            let lambda = g[i] + nu;
            let v = if a[i] > 0.0 { libm::fabs(lambda) / scale } else { (-lambda).max(0.0) / scale };
            r = r.max(v).max(-a[i]);
        }
        r
    }
}

/// Lawson–Hanson NNLS for `min ½aᵀGa − hᵀa`, `a ≥ 0`, with `G` positive definite.
fn nnls_gram(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
    let p = h.len();
    let tol = 1e-12 * h.amax().max(1.0);
    let mut passive = vec![false; p];
    let mut a = DVector::zeros(p);
    for _ in 0..3 * p + 3 {
        let w = h - g * &a;
        let enter = (0..p).filter(|&i| !passive[i]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match enter {
            Some(i) if w[i] > tol => passive[i] = true,
            _ => return Ok(a),
        }
        loop {
            let set = indices(&passive, true);
            let s = principal(g, &set)
                .cholesky()
                .ok_or_else(|| crate::Error::Conditioning("NNLS normal matrix is not positive definite".into()))?
                .solve(&gather(h, &set));
            if s.iter().all(|&v| v > 0.0) {
                a.fill(0.0);
                for (&i, &v) in set.iter().zip(s.iter()) {
                    a[i] = v;
                }
                break;
            }
            let alpha = set.iter().zip(s.iter()).filter(|(_, &v)| v <= 0.0).map(|(&i, &v)| a[i] / (a[i] - v)).fold(f64::INFINITY, f64::min);
            for (&i, &v) in set.iter().zip(s.iter()) {
                a[i] += alpha * (v - a[i]);
                if a[i] <= tol * 1e-3 {
                    a[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    Ok(a)
}

fn check_bands(cube: &HsiCube, m: &EndmemberMatrix) -> Result<()> {
    if cube.bands() != m.bands() {
        bail!(Dimension, "cube has {} bands, endmembers have {}", cube.bands(), m.bands());
    }
    Ok(())
}

pub fn fcls_pixel(x: &[f64], m: &EndmemberMatrix) -> Result<Vec<f64>> {
    Ok(Fcls::new(m)?.solve(x)?.0)
}

pub fn fcls_unmix_with_diagnostics(cube: &HsiCube, m: &EndmemberMatrix) -> Result<(AbundanceSet, Vec<FclsDiagnostics>)> {
    check_bands(cube, m)?;
    let solver = Fcls::new(m)?;
    let solved = map_indices(cube.n_pixels(), |i| solver.solve(cube.pixel(i)));
    let mut data = Vec::with_capacity(cube.n_pixels() * m.endmembers());
    let mut diags = Vec::with_capacity(cube.n_pixels());
    for r in solved {
        let (a, d) = r?;
        data.extend(a);
        diags.push(d);
    }
    Ok((AbundanceSet::new(cube.rows(), cube.cols(), m.endmembers(), data)?, diags))
}

/// Per-pixel FCLS over the whole cube.
pub fn fcls_unmix(cube: &HsiCube, m: &EndmemberMatrix) -> Result<AbundanceSet> {
    Ok(fcls_unmix_with_diagnostics(cube, m)?.0)
}

/// FCLS estimates used as approximate training labels when no ground truth exists.
pub fn bootstrap_labels(cube: &HsiCube, m: &EndmemberMatrix) -> Result<AbundanceSet> {
    fcls_unmix(cube, m)
}
