//! Finite-difference certification of every graph primitive.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;

use super::{grad_check, GradCheckReport, Graph, NodeId, ParamStore, Tensor};
use crate::error::Result;
use crate::rng::stream_rng;

type Build = Box<dyn Fn(&mut Graph<'_>, &[NodeId]) -> Result<NodeId>>;

pub struct PrimitiveCase {
    pub name: &'static str,
    inputs: Vec<(usize, usize)>,
    build: Build,
}

/// One case per primitive (two for broadcasting add, concat and split axes).
pub fn primitive_cases() -> Vec<PrimitiveCase> {
    fn case(name: &'static str, inputs: &[(usize, usize)], build: impl Fn(&mut Graph<'_>, &[NodeId]) -> Result<NodeId> + 'static) -> PrimitiveCase {
        PrimitiveCase { name, inputs: inputs.to_vec(), build: Box::new(build) }
    }
    alloc::vec![
        case("matmul", &[(3, 4), (4, 2)], |g, x| g.matmul(x[0], x[1])),
        case("add", &[(3, 4), (3, 4)], |g, x| g.add(x[0], x[1])),
        case("add_row_broadcast", &[(3, 4), (1, 4)], |g, x| g.add(x[0], x[1])),
        case("scale", &[(2, 5)], |g, x| Ok(g.scale(x[0], -1.7))),
        case("transpose", &[(3, 2)], |g, x| Ok(g.transpose(x[0]))),
        case("concat_cols", &[(3, 2), (3, 3)], |g, x| g.concat(&[x[0], x[1]], true)),
        case("concat_rows", &[(2, 3), (1, 3)], |g, x| g.concat(&[x[0], x[1]], false)),
        case("split_cols", &[(3, 5)], |g, x| g.split(x[0], true, 1, 3)),
        case("split_rows", &[(4, 3)], |g, x| g.split(x[0], false, 2, 1)),
        case("softmax", &[(3, 4)], |g, x| g.softmax(x[0])),
        case("relu", &[(3, 4)], |g, x| Ok(g.relu(x[0]))),
        case("layer_norm", &[(3, 6)], |g, x| g.layer_norm(x[0])),
        case("l1_loss", &[(2, 3), (2, 3)], |g, x| g.l1_loss(x[0], x[1])),
        case("squared_loss", &[(2, 3), (2, 3)], |g, x| g.squared_loss(x[0], x[1])),
        case("mean", &[(3, 3)], |g, x| g.mean(x[0])),
    ]
}

impl PrimitiveCase {
    /// Loss `Σ (op(x) − c)²` against a random constant `c`, checked at one random point.
    pub fn check(&self, seed: u64, eps: f64, tolerance: f64) -> Result<GradCheckReport> {
        let mut rng = stream_rng(seed, 0xC0FFEE);
        let mut store = ParamStore::new();
        for &(r, c) in &self.inputs {
            let data = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
            store.add("x", Tensor::new(r, c, data)?);
        }
        let ids: Vec<_> = store.ids().collect();
        let out_shape = {
            let mut g = Graph::new(&store);
            let xs: Vec<_> = ids.iter().map(|&id| g.param(id)).collect();
            let out = (self.build)(&mut g, &xs)?;
            g.value(out).shape()
        };
        let target_data: Vec<f64> = (0..out_shape[0] * out_shape[1]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = Tensor::new(out_shape[0], out_shape[1], target_data)?;

        let eval = |store: &ParamStore| -> Result<(f64, Vec<f64>)> {
            let mut g = Graph::new(store);
            let xs: Vec<_> = ids.iter().map(|&id| g.param(id)).collect();
            let out = (self.build)(&mut g, &xs)?;
            let t = g.constant(target.clone());
            let loss = g.squared_loss(out, t)?;
            let value = g.value(loss).item();
            let grads = g.backward(loss)?.into_param_grads();
            Ok((value, grads.into_iter().flat_map(Tensor::into_data).collect()))
        };
        let (_, analytic) = eval(&store)?;
        let point = store.flatten();
        let f = |x: &[f64]| {
            let mut s = store.clone();
            s.load_flat(x).expect("same length");
            eval(&s).map(|(v, _)| v).unwrap_or(f64::NAN)
        };
        Ok(grad_check(f, &analytic, &point, eps, tolerance))
    }
}
