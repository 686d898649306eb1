use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::cube::EndmemberMatrix;
use crate::error::{bail, Result};

pub(crate) fn endmember_matrix(m: &EndmemberMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.bands(), m.endmembers(), m.data())
}

/// Errors unless `m` has full column rank (relative singular-value cutoff 1e-12).
pub(crate) fn require_full_rank(m: &DMatrix<f64>) -> Result<()> {
    let (l, p) = m.shape();
    if l < p {
        bail!(Conditioning, "{p} endmembers cannot have full rank in {l} bands");
    }
    let sv = m.clone().singular_values();
    let (max, min) = (sv.max(), sv.min());
    if !(min > 1e-12 * max) {
        bail!(Conditioning, "endmember matrix is rank deficient (singular values {max:e} .. {min:e})");
    }
    Ok(())
}

/// `G[idx, idx]`.
pub(crate) fn principal(g: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| g[(idx[r], idx[c])])
}

pub(crate) fn gather(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub(crate) fn indices(mask: &[bool], want: bool) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m == want).map(|(i, _)| i).collect()
}
