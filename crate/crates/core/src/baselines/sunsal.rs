use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::endmember_matrix;
use crate::cube::{AbundanceSet, EndmemberMatrix, HsiCube};
use crate::error::{bail, Result};
use crate::par::map_indices;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    pub lambda: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    /// Enforce `Σa = 1` in addition to `a ≥ 0`.
    pub sum_to_one: bool,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self { lambda: 1e-3, rho: 1.0, max_iters: 1000, primal_tol: 1e-6, dual_tol: 1e-6, sum_to_one: true }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.rho > 0.0) || !(self.primal_tol > 0.0) || !(self.dual_tol > 0.0) {
            bail!(Config, "ADMM needs lambda >= 0 and positive rho and tolerances: {self:?}");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunsalDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// `‖a − z‖` at exit.
    pub primal: f64,
    /// `ρ·‖z − z_prev‖` at exit.
    pub dual: f64,
}

#[derive(Debug, Clone)]
pub struct SunsalResult {
    pub abundances: AbundanceSet,
    pub diagnostics: Vec<SunsalDiagnostics>,
}

impl SunsalResult {
    pub fn n_unconverged(&self) -> usize {
        self.diagnostics.iter().filter(|d| !d.converged).count()
    }
}

/// Precomputed ADMM solver for one library.
#[derive(Debug, Clone)]
pub struct Sunsal {
    m: DMatrix<f64>,
    b_inv: DMatrix<f64>,
    b_inv_ones: DVector<f64>,
    params: AdmmParams,
}

impl Sunsal {
    pub fn new(library: &EndmemberMatrix, params: AdmmParams) -> Result<Self> {
        params.validate()?;
        let m = endmember_matrix(library);
        let p = m.ncols();
        let b = m.transpose() * &m + DMatrix::identity(p, p) * params.rho;
        let b_inv = b.cholesky().ok_or_else(|| crate::Error::Conditioning("MᵀM + ρI is not positive definite".into()))?.inverse();
        let b_inv_ones = &b_inv * DVector::from_element(p, 1.0);
        Ok(Self { m, b_inv, b_inv_ones, params })
    }

    pub fn params(&self) -> &AdmmParams {
        &self.params
    }

    /// Minimises `½‖x − M·a‖² + λ‖a‖₁` over `a ≥ 0` (and `Σa = 1` if set).
    /// With `trace`, the combined residual `sqrt(‖a − z‖² + ‖z − z_prev‖²)`
    /// of every iteration is appended to it.
    pub fn solve(&self, x: &[f64], mut trace: Option<&mut Vec<f64>>) -> Result<(Vec<f64>, SunsalDiagnostics)> {
        if x.len() != self.m.nrows() {
            bail!(Dimension, "pixel has {} bands, library has {}", x.len(), self.m.nrows());
        }
        let AdmmParams { lambda, rho, .. } = self.params;
        let p = self.m.ncols();
        let mtx = self.m.transpose() * DVector::from_column_slice(x);
        let mut z = DVector::zeros(p);
        let mut d = DVector::zeros(p);
        let mut diag = SunsalDiagnostics { iterations: 0, converged: false, primal: f64::INFINITY, dual: f64::INFINITY };
        for it in 1..=self.params.max_iters {
            let mut a = &self.b_inv * (&mtx + (&z - &d) * rho);
            if self.params.sum_to_one {
                let excess = (a.sum() - 1.0) / self.b_inv_ones.sum();
                a -= &self.b_inv_ones * excess;
            }
            let z_prev = z.clone();
            z = (&a + &d).map(|v| (v - lambda / rho).max(0.0));
            d += &a - &z;
            let (r, dz) = ((&a - &z).norm(), (&z - &z_prev).norm());
            diag = SunsalDiagnostics { iterations: it, converged: false, primal: r, dual: rho * dz };
            if let Some(t) = trace.as_deref_mut() {
                t.push(libm::sqrt(r * r + dz * dz));
            }
            if r < self.params.primal_tol && rho * dz < self.params.dual_tol {
                diag.converged = true;
                break;
            }
        }
        let mut out: Vec<f64> = z.iter().copied().collect();
        if self.params.sum_to_one {
            let s: f64 = out.iter().sum();
            if s > 0.0 {
                out.iter_mut().for_each(|v| *v /= s);
            } else {
                out.iter_mut().for_each(|v| *v = 1.0 / p as f64);
            }
        }
        Ok((out, diag))
    }
}

/// Per-pixel SUnSAL; non-convergence is reported in the diagnostics, not as an error.
pub fn sunsal_unmix(cube: &HsiCube, library: &EndmemberMatrix, params: &AdmmParams) -> Result<SunsalResult> {
    if cube.bands() != library.bands() {
        bail!(Dimension, "cube has {} bands, library has {}", cube.bands(), library.bands());
    }
    let solver = Sunsal::new(library, *params)?;
    let solved = map_indices(cube.n_pixels(), |i| solver.solve(cube.pixel(i), None));
    let p = library.endmembers();
    let mut data = Vec::with_capacity(cube.n_pixels() * p);
    let mut diagnostics = Vec::with_capacity(cube.n_pixels());
    for r in solved {
        let (a, d) = r?;
        data.extend(a);
        diagnostics.push(d);
    }
    let abundances = if params.sum_to_one {
        AbundanceSet::new(cube.rows(), cube.cols(), p, data)?
    } else {
        AbundanceSet::from_raw(cube.rows(), cube.cols(), p, data)?
    };
    Ok(SunsalResult { abundances, diagnostics })
}
