use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{matmul, matmul_at, matmul_bt, ParamId, ParamStore, Tensor};
use crate::error::{bail, Result};

/// Variance floor inside `layer_norm`.
pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Rows,
    Cols,
}

#[derive(Debug, Clone)]
enum Op {
    Param(ParamId),
    Constant,
    MatMul(NodeId, NodeId),
    /// Second operand may be a `1 × n` row broadcast over the first's rows.
    Add(NodeId, NodeId),
    Scale(NodeId, f64),
    Transpose(NodeId),
    Concat(Vec<NodeId>, Axis),
    Split {
        input: NodeId,
        axis: Axis,
        start: usize,
    },
    Softmax(NodeId),
    Relu(NodeId),
    /// Caches the per-row inverse standard deviation.
    LayerNorm(NodeId, Vec<f64>),
    L1Loss(NodeId, NodeId),
    SquaredLoss(NodeId, NodeId),
    Mean(NodeId),
}

#[derive(Debug)]
struct Node {
    op: Op,
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor>,
}

/// Record of operations evaluated against one borrowed [`ParamStore`].
#[derive(Debug)]
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

/// Result of [`Graph::backward`]: a gradient per node and per parameter.
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Tensor>>,
    params: Vec<Option<Tensor>>,
    param_shapes: Vec<[usize; 2]>,
}

impl Gradients {
    /// Gradient with respect to any node (constants included); `None` if unreached.
    pub fn node(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].as_ref()
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params[id.index()].as_ref()
    }

    /// One gradient per store entry; unreached parameters get zeros.
    pub fn into_param_grads(self) -> Vec<Tensor> {
        self.params.into_iter().zip(self.param_shapes).map(|(g, [r, c])| g.unwrap_or_else(|| Tensor::zeros(r, c))).collect()
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(p)) => self.params.get(*p),
            (None, _) => unreachable!("only parameter leaves borrow their value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value: Some(value) });
        NodeId(self.nodes.len() - 1)
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        self.nodes.push(Node { op: Op::Param(id), value: None });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Constant, t)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.rows() {
            bail!(Dimension, "matmul {:?} x {:?}", va.shape(), vb.shape());
        }
        let out = matmul(va, vb);
        Ok(self.push(Op::MatMul(a, b), out))
    }

    /// Elementwise sum; `b` may also be a single row broadcast over `a`.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        let broadcast = vb.rows() == 1 && va.rows() != 1 && vb.cols() == va.cols();
        if va.shape() != vb.shape() && !broadcast {
            bail!(Dimension, "add {:?} + {:?}", va.shape(), vb.shape());
        }
        let cols = va.cols();
        let data = va.data().iter().enumerate().map(|(i, x)| x + if broadcast { vb.data()[i % cols] } else { vb.data()[i] }).collect();
        let out = Tensor::from_parts(va.rows(), cols, data);
        Ok(self.push(Op::Add(a, b), out))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let va = self.value(a);
        let out = Tensor::from_parts(va.rows(), va.cols(), va.data().iter().map(|x| x * factor).collect());
        self.push(Op::Scale(a, factor), out)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).transpose();
        self.push(Op::Transpose(a), out)
    }

    /// Joins side by side (`axis_cols = true`) or stacks vertically.
    pub fn concat(&mut self, inputs: &[NodeId], axis_cols: bool) -> Result<NodeId> {
        let Some(&first) = inputs.first() else {
            bail!(Dimension, "concat of nothing");
        };
        let axis = if axis_cols { Axis::Cols } else { Axis::Rows };
        let [r0, c0] = self.value(first).shape();
        let out = match axis {
            Axis::Cols => {
                if inputs.iter().any(|&i| self.value(i).rows() != r0) {
                    bail!(Dimension, "column concat needs equal row counts");
                }
                let total: usize = inputs.iter().map(|&i| self.value(i).cols()).sum();
                let mut data = Vec::with_capacity(r0 * total);
                for r in 0..r0 {
                    for &i in inputs {
                        data.extend_from_slice(self.value(i).row_slice(r));
                    }
                }
                Tensor::from_parts(r0, total, data)
            }
            Axis::Rows => {
                if inputs.iter().any(|&i| self.value(i).cols() != c0) {
                    bail!(Dimension, "row concat needs equal column counts");
                }
                let total: usize = inputs.iter().map(|&i| self.value(i).rows()).sum();
                let mut data = Vec::with_capacity(total * c0);
                for &i in inputs {
                    data.extend_from_slice(self.value(i).data());
                }
                Tensor::from_parts(total, c0, data)
            }
        };
        Ok(self.push(Op::Concat(inputs.to_vec(), axis), out))
    }

    /// `len` contiguous rows (`axis_cols = false`) or columns starting at `start`.
    pub fn split(&mut self, a: NodeId, axis_cols: bool, start: usize, len: usize) -> Result<NodeId> {
        let va = self.value(a);
        let [rows, cols] = va.shape();
        let out = if axis_cols {
            if start + len > cols || len == 0 {
                bail!(Dimension, "column split {start}+{len} of {cols}");
            }
            let mut data = Vec::with_capacity(rows * len);
            for r in 0..rows {
                data.extend_from_slice(&va.row_slice(r)[start..start + len]);
            }
            Tensor::from_parts(rows, len, data)
        } else {
            if start + len > rows || len == 0 {
                bail!(Dimension, "row split {start}+{len} of {rows}");
            }
            Tensor::from_parts(len, cols, va.data()[start * cols..(start + len) * cols].to_vec())
        };
        let axis = if axis_cols { Axis::Cols } else { Axis::Rows };
        Ok(self.push(Op::Split { input: a, axis, start }, out))
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.value(a);
        let cols = va.cols();
        if cols == 0 {
            bail!(Dimension, "softmax over an empty row");
        }
        let mut data = Vec::with_capacity(va.len());
        for r in 0..va.rows() {
            let row = va.row_slice(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let start = data.len();
            data.extend(row.iter().map(|x| libm::exp(x - max)));
            let sum: f64 = data[start..].iter().sum();
            data[start..].iter_mut().for_each(|v| *v /= sum);
        }
        let out = Tensor::from_parts(va.rows(), cols, data);
        Ok(self.push(Op::Softmax(a), out))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let out = Tensor::from_parts(va.rows(), va.cols(), va.data().iter().map(|&x| x.max(0.0)).collect());
        self.push(Op::Relu(a), out)
    }

    /// Row-wise `(x − mean) / sqrt(var + ε)` without affine terms.
    pub fn layer_norm(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.value(a);
        let cols = va.cols();
        if cols == 0 {
            bail!(Dimension, "layer norm over an empty row");
        }
        let mut data = Vec::with_capacity(va.len());
        let mut inv_std = Vec::with_capacity(va.rows());
        for r in 0..va.rows() {
            let row = va.row_slice(r);
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / cols as f64;
            let inv = 1.0 / libm::sqrt(var + LAYER_NORM_EPS);
            data.extend(row.iter().map(|x| (x - mean) * inv));
            inv_std.push(inv);
        }
        let out = Tensor::from_parts(va.rows(), cols, data);
        Ok(self.push(Op::LayerNorm(a, inv_std), out))
    }

    fn check_same(&self, a: NodeId, b: NodeId, what: &str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            bail!(Dimension, "{what}: {:?} vs {:?}", self.value(a).shape(), self.value(b).shape());
        }
        Ok(())
    }

    /// `Σ |a − b|` as a `1 × 1` tensor.
    pub fn l1_loss(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_same(a, b, "l1_loss")?;
        let s = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| libm::fabs(x - y)).sum();
        Ok(self.push(Op::L1Loss(a, b), Tensor::scalar(s)))
    }

    /// `Σ (a − b)²` as a `1 × 1` tensor.
    pub fn squared_loss(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_same(a, b, "squared_loss")?;
        let s = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| (x - y) * (x - y)).sum();
        Ok(self.push(Op::SquaredLoss(a, b), Tensor::scalar(s)))
    }

    /// Mean of all entries as a `1 × 1` tensor.
    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.value(a);
        if va.is_empty() {
            bail!(Dimension, "mean of an empty tensor");
        }
        let m = va.data().iter().sum::<f64>() / va.len() as f64;
        Ok(self.push(Op::Mean(a), Tensor::scalar(m)))
    }

    /// Reverse sweep from a scalar `loss`, visiting each recorded node once.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).shape() != [1, 1] {
            bail!(Contract, "backward needs a scalar loss, got {:?}", self.value(loss).shape());
        }
        self.backward_from(loss, Tensor::scalar(1.0))
    }

    /// Reverse sweep seeded with an upstream gradient `seed = ∂L/∂output`
    /// computed elsewhere, e.g. by a graph that consumed `output` as a constant.
    pub fn backward_from(&self, output: NodeId, seed: Tensor) -> Result<Gradients> {
        if self.value(output).shape() != seed.shape() {
            bail!(Dimension, "seed {:?} does not match output {:?}", seed.shape(), self.value(output).shape());
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        let mut params: Vec<Option<Tensor>> = vec![None; self.params.len()];
        grads[output.0] = Some(seed);
        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads, &mut params);
            grads[i] = Some(g);
        }
        let param_shapes = self.params.tensors().iter().map(Tensor::shape).collect();
        Ok(Gradients { nodes: grads, params, param_shapes })
    }

    fn propagate(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>], params: &mut [Option<Tensor>]) {
        fn acc(slot: &mut Option<Tensor>, t: Tensor) {
            match slot {
                Some(s) => s.add_assign(&t),
                None => *slot = Some(t),
            }
        }
        let out = self.nodes[i].value.as_ref();
        match &self.nodes[i].op {
            Op::Param(p) => acc(&mut params[p.index()], g.clone()),
            Op::Constant => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                acc(&mut grads[a.0], matmul_bt(g, vb));
                acc(&mut grads[b.0], matmul_at(va, g));
            }
            Op::Add(a, b) => {
                acc(&mut grads[a.0], g.clone());
                let vb = self.value(*b);
                if vb.shape() == g.shape() {
                    acc(&mut grads[b.0], g.clone());
                } else {
                    let mut sum = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        sum.data_mut().iter_mut().zip(g.row_slice(r)).for_each(|(s, x)| *s += x);
                    }
                    acc(&mut grads[b.0], sum);
                }
            }
            Op::Scale(a, f) => {
                let d = g.data().iter().map(|x| x * f).collect();
                acc(&mut grads[a.0], Tensor::from_parts(g.rows(), g.cols(), d));
            }
            Op::Transpose(a) => acc(&mut grads[a.0], g.transpose()),
            Op::Concat(inputs, axis) => {
                let mut offset = 0;
                for &inp in inputs {
                    let [r, c] = self.value(inp).shape();
                    let part = match axis {
                        Axis::Cols => {
                            let mut d = Vec::with_capacity(r * c);
                            for row in 0..r {
                                d.extend_from_slice(&g.row_slice(row)[offset..offset + c]);
                            }
                            offset += c;
                            d
                        }
                        Axis::Rows => {
                            let d = g.data()[offset * c..(offset + r) * c].to_vec();
                            offset += r;
                            d
                        }
                    };
                    acc(&mut grads[inp.0], Tensor::from_parts(r, c, part));
                }
            }
            Op::Split { input, axis, start } => {
                let [r, c] = self.value(*input).shape();
                let mut full = Tensor::zeros(r, c);
                match axis {
                    Axis::Cols => {
                        for row in 0..r {
                            full.data_mut()[row * c + start..row * c + start + g.cols()].copy_from_slice(g.row_slice(row));
                        }
                    }
                    Axis::Rows => full.data_mut()[start * c..(start + g.rows()) * c].copy_from_slice(g.data()),
                }
                acc(&mut grads[input.0], full);
            }
            Op::Softmax(a) => {
                let y = out.expect("softmax value");
                let mut d = Vec::with_capacity(y.len());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row_slice(r), g.row_slice(r));
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    d.extend(yr.iter().zip(gr).map(|(y, g)| y * (g - dot)));
                }
                acc(&mut grads[a.0], Tensor::from_parts(y.rows(), y.cols(), d));
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let d = x.data().iter().zip(g.data()).map(|(&x, &g)| if x > 0.0 { g } else { 0.0 }).collect();
                acc(&mut grads[a.0], Tensor::from_parts(g.rows(), g.cols(), d));
            }
            Op::LayerNorm(a, inv_std) => {
                let xhat = out.expect("layer norm value");
                let n = xhat.cols() as f64;
                let mut d = Vec::with_capacity(xhat.len());
                for (r, &inv) in inv_std.iter().enumerate() {
                    let (xr, gr) = (xhat.row_slice(r), g.row_slice(r));
                    let mean_g = gr.iter().sum::<f64>() / n;
                    let mean_gx = xr.iter().zip(gr).map(|(x, g)| x * g).sum::<f64>() / n;
                    d.extend(xr.iter().zip(gr).map(|(x, g)| inv * (g - mean_g - x * mean_gx)));
                }
                acc(&mut grads[a.0], Tensor::from_parts(xhat.rows(), xhat.cols(), d));
            }
            Op::L1Loss(a, b) => {
                let s = g.item();
                let (va, vb) = (self.value(*a), self.value(*b));
                let da: Vec<f64> = va
                    .data()
                    .iter()
                    .zip(vb.data())
                    .map(|(x, y)| {
                        let diff = x - y;
                        if diff > 0.0 {
                            s
                        } else if diff < 0.0 {
                            -s
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let db = da.iter().map(|v| -v).collect();
                acc(&mut grads[a.0], Tensor::from_parts(va.rows(), va.cols(), da));
                acc(&mut grads[b.0], Tensor::from_parts(va.rows(), va.cols(), db));
            }
            Op::SquaredLoss(a, b) => {
                let s = g.item();
                let (va, vb) = (self.value(*a), self.value(*b));
                let da: Vec<f64> = va.data().iter().zip(vb.data()).map(|(x, y)| 2.0 * s * (x - y)).collect();
                let db = da.iter().map(|v| -v).collect();
                acc(&mut grads[a.0], Tensor::from_parts(va.rows(), va.cols(), da));
                acc(&mut grads[b.0], Tensor::from_parts(va.rows(), va.cols(), db));
            }
            Op::Mean(a) => {
                let va = self.value(*a);
                acc(&mut grads[a.0], Tensor::filled(va.rows(), va.cols(), g.item() / va.len() as f64));
            }
        }
    }
}
