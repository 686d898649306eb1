//! Hyperspectral unmixing toolkit.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithm of the
//! pipeline: the cube/abundance data model with mirror-padded patch
//! extraction, a structured synthetic-scene generator (superpixels, random
//! split, generalized bilinear mixing, calibrated noise), a small
//! reverse-mode differentiation engine, the patch-transformer generator and
//! least-squares GAN trainer, the FCLS and SUnSAL baselines, and the
//! evaluation metrics.
//!
//! File formats and the command-line front-end live in the `unmix` crate.
//! Enable the `parallel` feature to evaluate batches and pixels on a rayon
//! pool; results are bit-identical to the serial path.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod cube;
pub mod dataset;
pub mod diff;
mod error;
pub mod gan;
pub mod metrics;
mod par;
pub mod patch;
pub mod rng;
pub mod synth;
pub mod transformer;

pub use cube::{AbundanceSet, EndmemberMatrix, HsiCube, ASC_TOLERANCE};
pub use dataset::{split_dataset, DatasetSplit};
pub use error::{Error, Result};
pub use patch::{extract_patch, iterate_patches, mirror_pad, Patch};
