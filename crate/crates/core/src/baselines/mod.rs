//! Pointwise classical unmixers: fully constrained least squares and
//! sparse unmixing by ADMM.

mod fcls;
mod linalg;
mod sunsal;

#[cfg(test)]
mod tests;

pub use fcls::{bootstrap_labels, fcls_pixel, fcls_unmix, fcls_unmix_with_diagnostics, Fcls, FclsDiagnostics, KKT_TOLERANCE};
pub use sunsal::{sunsal_unmix, AdmmParams, Sunsal, SunsalDiagnostics, SunsalResult};
