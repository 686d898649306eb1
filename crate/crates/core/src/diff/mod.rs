//! Minimal reverse-mode differentiation over 2-D `f64` tensors.
//!
//! A [`Graph`] records operations as they are evaluated; [`Graph::backward`]
//! walks the record in reverse and accumulates gradients for every node and
//! every [`ParamStore`] leaf it reached. The primitive set is closed: the
//! transformer, discriminator and losses are compositions of the methods on
//! [`Graph`] and nothing else carries a hand-written gradient.

mod adam;
pub mod certify;
mod check;
mod graph;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use check::{grad_check, GradCheckReport, GRAD_CHECK_FLOOR};
pub use graph::{Gradients, Graph, NodeId, LAYER_NORM_EPS};
pub use tensor::{ParamId, ParamStore, Tensor};
