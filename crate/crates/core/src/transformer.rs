//! Patch-transformer generator.
//!
//! Each pixel of an `s × s` patch becomes a token: its spectrum is linearly
//! embedded and a learned position vector is added. Pre-norm residual blocks
//! (`y = x + MHA(LN(x))`, `z = y + FFN(LN(y))`) mix the tokens; the centre
//! token feeds an MLP head whose softmax output is the centre pixel's
//! abundance vector, nonnegative and summing to one by construction.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diff::{Graph, NodeId, ParamId, ParamStore, Tensor};
use crate::error::{bail, Result};
use crate::patch::Patch;
use crate::rng::{stream, stream_rng};

/// Standard deviation of the Gaussian weight initialisation.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    /// Patch side `s` (odd).
    pub window: usize,
    pub bands: usize,
    pub heads: usize,
    /// Per-head query/key/value width.
    pub d_k: usize,
    pub blocks: usize,
    pub ffn_hidden: usize,
    pub endmembers: usize,
    /// Keep the position embeddings at their random initial values.
    #[serde(default)]
    pub freeze_positions: bool,
}

impl TransformerConfig {
    /// `s = 5`, one head per endmember, `d_k = 64`, six blocks, FFN width `4·d_model`.
    pub fn standard(bands: usize, endmembers: usize) -> Self {
        let (heads, d_k) = (endmembers, 64);
        Self { window: 5, bands, heads, d_k, blocks: 6, ffn_hidden: 4 * heads * d_k, endmembers, freeze_positions: false }
    }

    pub fn d_model(&self) -> usize {
        self.heads * self.d_k
    }

    pub fn n_tokens(&self) -> usize {
        self.window * self.window
    }

    pub fn center_token(&self) -> usize {
        (self.n_tokens() - 1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.is_multiple_of(2) {
            bail!(Config, "window must be odd, got {}", self.window);
        }
        if self.blocks == 0 || self.heads == 0 || self.d_k == 0 || self.ffn_hidden == 0 || self.bands == 0 {
            bail!(Config, "blocks, heads, d_k, ffn_hidden and bands must be positive");
        }
        if self.endmembers < 2 {
            bail!(Config, "need at least two endmembers, got {}", self.endmembers);
        }
        Ok(())
    }
}

/// Parameter handles of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
    pub wo: ParamId,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    config: TransformerConfig,
    params: ParamStore,
    embed: ParamId,
    positions: ParamId,
    blocks: Vec<BlockParams>,
    head: [ParamId; 4],
}

/// Node handles produced by one generator evaluation.
#[derive(Debug, Clone)]
pub struct GeneratorTrace {
    /// `1 × p` softmax output.
    pub abundance: NodeId,
    /// Attention probabilities (`s² × s²`) per head of the final block.
    pub attention: Vec<NodeId>,
}

/// `X · W_embed + positions`; `tokens` is `s² × L`.
pub fn embed_tokens(g: &mut Graph<'_>, tokens: NodeId, embed: NodeId, positions: NodeId) -> Result<NodeId> {
    let projected = g.matmul(tokens, embed)?;
    g.add(projected, positions)
}

/// `(X·W_Q, X·W_K, X·W_V)` with tokens as rows.
pub fn qkv_project(g: &mut Graph<'_>, x: NodeId, wq: NodeId, wk: NodeId, wv: NodeId) -> Result<(NodeId, NodeId, NodeId)> {
    Ok((g.matmul(x, wq)?, g.matmul(x, wk)?, g.matmul(x, wv)?))
}

/// `softmax(Q·Kᵀ / √d) · V`; also returns the attention probabilities.
pub fn scaled_dot_attention(g: &mut Graph<'_>, q: NodeId, k: NodeId, v: NodeId, d: usize) -> Result<(NodeId, NodeId)> {
    if d == 0 {
        bail!(Config, "attention width must be positive");
    }
    if g.value(q).cols() != g.value(k).cols() || g.value(k).rows() != g.value(v).rows() {
        bail!(Dimension, "attention operands {:?}, {:?}, {:?}", g.value(q).shape(), g.value(k).shape(), g.value(v).shape());
    }
    let kt = g.transpose(k);
    let scores = g.matmul(q, kt)?;
    let scaled = g.scale(scores, 1.0 / libm::sqrt(d as f64));
    let probs = g.softmax(scaled)?;
    Ok((g.matmul(probs, v)?, probs))
}

/// Splits the `h · d_k`-wide projections into heads, attends per head,
/// concatenates and projects with `W^O`.
#[allow(clippy::too_many_arguments)]
pub fn multi_head_attention(
    g: &mut Graph<'_>,
    x: NodeId,
    wq: NodeId,
    wk: NodeId,
    wv: NodeId,
    wo: NodeId,
    heads: usize,
    d_k: usize,
) -> Result<(NodeId, Vec<NodeId>)> {
    if g.value(wo).rows() != heads * d_k {
        bail!(Dimension, "W^O expects {} inputs, heads give {}", g.value(wo).rows(), heads * d_k);
    }
    let (q, k, v) = qkv_project(g, x, wq, wk, wv)?;
    let mut outs = Vec::with_capacity(heads);
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.split(q, true, h * d_k, d_k)?;
        let kh = g.split(k, true, h * d_k, d_k)?;
        let vh = g.split(v, true, h * d_k, d_k)?;
        let (o, p) = scaled_dot_attention(g, qh, kh, vh, d_k)?;
        outs.push(o);
        probs.push(p);
    }
    let cat = if heads == 1 { outs[0] } else { g.concat(&outs, true)? };
    Ok((g.matmul(cat, wo)?, probs))
}

/// Two-layer relu map `relu(x·W₁ + b₁)·W₂ + b₂`.
pub fn feed_forward(g: &mut Graph<'_>, x: NodeId, w1: NodeId, b1: NodeId, w2: NodeId, b2: NodeId) -> Result<NodeId> {
    let h = g.matmul(x, w1)?;
    let h = g.add(h, b1)?;
    let h = g.relu(h);
    let o = g.matmul(h, w2)?;
    g.add(o, b2)
}

/// Pre-norm residual block.
pub fn transformer_block(g: &mut Graph<'_>, x: NodeId, block: &BlockParams, heads: usize, d_k: usize) -> Result<(NodeId, Vec<NodeId>)> {
    let [wq, wk, wv, wo] = [block.wq, block.wk, block.wv, block.wo].map(|p| g.param(p));
    let n1 = g.layer_norm(x)?;
    let (att, probs) = multi_head_attention(g, n1, wq, wk, wv, wo, heads, d_k)?;
    let y = g.add(x, att)?;
    let [w1, b1, w2, b2] = [block.w1, block.b1, block.w2, block.b2].map(|p| g.param(p));
    let n2 = g.layer_norm(y)?;
    let f = feed_forward(g, n2, w1, b1, w2, b2)?;
    Ok((g.add(y, f)?, probs))
}

impl Generator {
    /// Gaussian (std [`INIT_STD`]) weights and positions, zero biases.
    pub fn new(config: TransformerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(seed, stream::GENERATOR_INIT);
        let (dm, ff, p) = (config.d_model(), config.ffn_hidden, config.endmembers);
        let mut params = ParamStore::new();
        let mut gauss = |r, c| Tensor::gaussian(r, c, INIT_STD, &mut rng);
        let embed = params.add("embed.w", gauss(config.bands, dm));
        let positions = params.add("embed.pos", gauss(config.n_tokens(), dm));
        let mut blocks = Vec::with_capacity(config.blocks);
        for b in 0..config.blocks {
            let name = |s: &str| format!("block{b}.{s}");
            blocks.push(BlockParams {
                wq: params.add(name("wq"), gauss(dm, dm)),
                wk: params.add(name("wk"), gauss(dm, dm)),
                wv: params.add(name("wv"), gauss(dm, dm)),
                wo: params.add(name("wo"), gauss(dm, dm)),
                w1: params.add(name("ffn.w1"), gauss(dm, ff)),
                b1: params.add(name("ffn.b1"), Tensor::zeros(1, ff)),
                w2: params.add(name("ffn.w2"), gauss(ff, dm)),
                b2: params.add(name("ffn.b2"), Tensor::zeros(1, dm)),
            });
        }
        let head = [
            params.add("head.w1", gauss(dm, dm)),
            params.add("head.b1", Tensor::zeros(1, dm)),
            params.add("head.w2", gauss(dm, p)),
            params.add("head.b2", Tensor::zeros(1, p)),
        ];
        params.set_trainable(positions, !config.freeze_positions);
        Ok(Self { config, params, embed, positions, blocks, head })
    }

    /// Rebuilds a generator around loaded parameters, checking every name and shape.
    pub fn from_params(config: TransformerConfig, params: ParamStore) -> Result<Self> {
        let mut reference = Self::new(config, 0)?;
        if params.len() != reference.params.len() {
            bail!(Dimension, "checkpoint holds {} tensors, model needs {}", params.len(), reference.params.len());
        }
        for id in reference.params.ids() {
            let name = reference.params.name(id);
            let Some(src) = params.find(name) else {
                bail!(Dimension, "checkpoint lacks parameter {name}");
            };
            reference.params.set(id, params.get(src).clone())?;
        }
        Ok(reference)
    }

    pub fn config(&self) -> &TransformerConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn embed_id(&self) -> ParamId {
        self.embed
    }

    pub fn positions_id(&self) -> ParamId {
        self.positions
    }

    pub fn block_params(&self) -> &[BlockParams] {
        &self.blocks
    }

    pub fn head_ids(&self) -> [ParamId; 4] {
        self.head
    }

    fn check_patch(&self, patch: &Patch) -> Result<()> {
        if patch.bands() != self.config.bands || patch.size() != self.config.window {
            bail!(
                Dimension,
                "patch {}x{}x{} does not fit model window {} with {} bands",
                patch.size(),
                patch.size(),
                patch.bands(),
                self.config.window,
                self.config.bands
            );
        }
        Ok(())
    }

    /// Records the full forward pass of one patch on `g`.
    pub fn trace(&self, g: &mut Graph<'_>, patch: &Patch) -> Result<GeneratorTrace> {
        self.check_patch(patch)?;
        let tokens = g.constant(Tensor::new(patch.n_tokens(), patch.bands(), patch.values().to_vec())?);
        let (e, pos) = (g.param(self.embed), g.param(self.positions));
        let mut x = embed_tokens(g, tokens, e, pos)?;
        let mut attention = Vec::new();
        for block in &self.blocks {
            let (y, probs) = transformer_block(g, x, block, self.config.heads, self.config.d_k)?;
            x = y;
            attention = probs;
        }
        let center = g.split(x, false, self.config.center_token(), 1)?;
        let [w1, b1, w2, b2] = self.head.map(|p| g.param(p));
        let h = g.matmul(center, w1)?;
        let h = g.add(h, b1)?;
        let h = g.relu(h);
        let logits = g.matmul(h, w2)?;
        let logits = g.add(logits, b2)?;
        let abundance = g.softmax(logits)?;
        Ok(GeneratorTrace { abundance, attention })
    }

    /// Abundance vector of the patch's centre pixel.
    pub fn forward(&self, patch: &Patch) -> Result<Vec<f64>> {
        let mut g = Graph::new(&self.params);
        let t = self.trace(&mut g, patch)?;
        Ok(g.value(t.abundance).data().to_vec())
    }

    /// Centre-token attention row of each final-block head, as `s × s` maps (row-major).
    pub fn attention_scores_of_center(&self, patch: &Patch) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new(&self.params);
        let t = self.trace(&mut g, patch)?;
        let c = self.config.center_token();
        Ok(t.attention.iter().map(|&p| g.value(p).row_slice(c).to_vec()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::grad_check;
    use alloc::vec;
    use rand::Rng;

    fn tiny(bands: usize, p: usize) -> TransformerConfig {
        TransformerConfig { window: 3, bands, heads: 2, d_k: 3, blocks: 2, ffn_hidden: 5, endmembers: p, freeze_positions: false }
    }

    fn random_patch(s: usize, bands: usize, seed: u64) -> Patch {
        let mut rng = stream_rng(seed, 99);
        let values = (0..s * s * bands).map(|_| rng.random_range(0.0..1.0)).collect();
        Patch::new(s, bands, values, (0, 0)).unwrap()
    }

    fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn embed_zero_and_identity() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(t(2, 2, &[0.1, 0.2, 0.3, 0.4]));
        let z = g.constant(Tensor::zeros(2, 2));
        let zp = g.constant(Tensor::zeros(2, 2));
        let e = embed_tokens(&mut g, x, z, zp).unwrap();
        assert!(g.value(e).data().iter().all(|&v| v == 0.0));
        let i = g.constant(Tensor::identity(2));
        let e = embed_tokens(&mut g, x, i, zp).unwrap();
        assert_eq!(g.value(e).data(), &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn qkv_identity_zero_and_oracle() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(t(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let i = g.constant(Tensor::identity(2));
        let (q, k, v) = qkv_project(&mut g, x, i, i, i).unwrap();
        for n in [q, k, v] {
            assert_eq!(g.value(n).data(), &[1.0, 2.0, 3.0, 4.0]);
        }
        let z = g.constant(Tensor::zeros(2, 2));
        let (q, _, _) = qkv_project(&mut g, x, z, z, z).unwrap();
        assert!(g.value(q).data().iter().all(|&v| v == 0.0));
        let w = g.constant(t(2, 2, &[0.5, -1.0, 2.0, 0.25]));
        let (q, _, _) = qkv_project(&mut g, x, w, w, w).unwrap();
        // [1 2; 3 4] · [0.5 −1; 2 0.25] by hand.
        assert_eq!(g.value(q).data(), &[4.5, -0.5, 9.5, -2.0]);
    }

    #[test]
    fn attention_single_and_identical_tokens() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let q = g.constant(t(1, 2, &[0.3, -0.7]));
        let v = g.constant(t(1, 3, &[1.0, 2.0, 3.0]));
        let (o, _) = scaled_dot_attention(&mut g, q, q, v, 2).unwrap();
        assert_eq!(g.value(o).data(), &[1.0, 2.0, 3.0]);

        let k = g.constant(t(2, 2, &[0.4, 0.1, 0.4, 0.1]));
        let v = g.constant(t(2, 2, &[1.0, 0.0, 3.0, 2.0]));
        let (o, p) = scaled_dot_attention(&mut g, k, k, v, 2).unwrap();
        assert!(g.value(p).data().iter().all(|&w| (w - 0.5).abs() < 1e-15));
        assert_eq!(g.value(o).data(), &[2.0, 1.0, 2.0, 1.0]);
        assert!(matches!(scaled_dot_attention(&mut g, k, k, v, 0), Err(crate::Error::Config(_))));
    }

    #[test]
    fn attention_three_tokens_against_hand_oracle() {
        let qd = [0.2, -0.4, 1.0, 0.5, -0.3, 0.8];
        let kd = [0.7, 0.1, -0.2, 0.9, 0.4, -0.6];
        let vd = [1.0, 2.0, -1.0, 0.5, 0.0, 3.0];
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let (q, k, v) = (g.constant(t(3, 2, &qd)), g.constant(t(3, 2, &kd)), g.constant(t(3, 2, &vd)));
        let (o, _) = scaled_dot_attention(&mut g, q, k, v, 2).unwrap();
        // Oracle: explicit scores, exp-normalize, weighted sum.
        for i in 0..3 {
            let scores: Vec<f64> = (0..3).map(|j| (qd[2 * i] * kd[2 * j] + qd[2 * i + 1] * kd[2 * j + 1]) / libm::sqrt(2.0)).collect();
            let e: Vec<f64> = scores.iter().map(|s| libm::exp(*s)).collect();
            let z: f64 = e.iter().sum();
            for c in 0..2 {
                let want: f64 = (0..3).map(|j| e[j] / z * vd[2 * j + c]).sum();
                assert!((g.value(o).get(i, c) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn one_head_with_identity_output_reduces_to_attention() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(t(3, 2, &[0.3, 0.1, -0.5, 0.9, 0.2, 0.2]));
        let w = g.constant(t(2, 2, &[0.5, -0.2, 0.3, 0.8]));
        let i = g.constant(Tensor::identity(2));
        let (m, _) = multi_head_attention(&mut g, x, w, w, w, i, 1, 2).unwrap();
        let (q, k, v) = qkv_project(&mut g, x, w, w, w).unwrap();
        let (a, _) = scaled_dot_attention(&mut g, q, k, v, 2).unwrap();
        assert_eq!(g.value(m).data(), g.value(a).data());
    }

    #[test]
    fn zero_values_give_zero_output() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(t(3, 4, &[0.3, 0.1, -0.5, 0.9, 0.2, 0.2, 1.0, -1.0, 0.0, 0.5, 0.5, 0.1]));
        let w = g.constant(Tensor::filled(4, 4, 0.3));
        let z = g.constant(Tensor::zeros(4, 4));
        let i = g.constant(Tensor::identity(4));
        let (m, _) = multi_head_attention(&mut g, x, w, w, z, i, 2, 2).unwrap();
        assert!(g.value(m).data().iter().all(|&v| v == 0.0));
        let bad = g.constant(Tensor::identity(3));
        assert!(matches!(multi_head_attention(&mut g, x, w, w, z, bad, 2, 2), Err(crate::Error::Dimension(_))));
    }

    #[test]
    fn two_heads_against_composed_oracle() {
        let mut rng = stream_rng(5, 1);
        let mut rnd = |r: usize, c: usize| Tensor::gaussian(r, c, 0.7, &mut rng);
        let (x, wq, wk, wv, wo) = (rnd(3, 4), rnd(4, 4), rnd(4, 4), rnd(4, 4), rnd(4, 4));
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let n = [&x, &wq, &wk, &wv, &wo].map(|t| g.constant(t.clone()));
        let (m, _) = multi_head_attention(&mut g, n[0], n[1], n[2], n[3], n[4], 2, 2).unwrap();

        // Oracle with explicit loops.
        let mm = |a: &Tensor, b: &Tensor| {
            let mut out = vec![0.0; a.rows() * b.cols()];
            for i in 0..a.rows() {
                for j in 0..b.cols() {
                    out[i * b.cols() + j] = (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum();
                }
            }
            Tensor::new(a.rows(), b.cols(), out).unwrap()
        };
        let (q, k, v) = (mm(&x, &wq), mm(&x, &wk), mm(&x, &wv));
        let mut cat = vec![0.0; 3 * 4];
        for h in 0..2 {
            for i in 0..3 {
                let s: Vec<f64> = (0..3).map(|j| (0..2).map(|c| q.get(i, 2 * h + c) * k.get(j, 2 * h + c)).sum::<f64>() / libm::sqrt(2.0)).collect();
                let mx = s.iter().copied().fold(f64::MIN, f64::max);
                let e: Vec<f64> = s.iter().map(|v| libm::exp(v - mx)).collect();
                let z: f64 = e.iter().sum();
                for c in 0..2 {
                    cat[i * 4 + 2 * h + c] = (0..3).map(|j| e[j] / z * v.get(j, 2 * h + c)).sum();
                }
            }
        }
        let want = mm(&Tensor::new(3, 4, cat).unwrap(), &wo);
        for (a, b) in g.value(m).data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zeroed_block_is_identity() {
        let cfg = tiny(4, 3);
        let mut gen = Generator::new(cfg, 1).unwrap();
        let block = gen.block_params()[0];
        for id in [block.wo, block.w2, block.b2] {
            let [r, c] = gen.params().get(id).shape();
            gen.params_mut().set(id, Tensor::zeros(r, c)).unwrap();
        }
        let x = Tensor::gaussian(9, 6, 1.0, &mut stream_rng(2, 2));
        let mut g = Graph::new(gen.params());
        let xn = g.constant(x.clone());
        let (y, _) = transformer_block(&mut g, xn, &block, 2, 3).unwrap();
        assert_eq!(g.value(y), &x);
    }

    #[test]
    fn block_gradient_matches_finite_differences() {
        let cfg = tiny(4, 3);
        let gen = Generator::new(cfg, 3).unwrap();
        let block = gen.block_params()[0];
        let x = Tensor::gaussian(9, 6, 1.0, &mut stream_rng(4, 4));
        let target = Tensor::gaussian(9, 6, 1.0, &mut stream_rng(5, 5));
        let eval = |s: &ParamStore| {
            let mut g = Graph::new(s);
            let xn = g.constant(x.clone());
            let (y, _) = transformer_block(&mut g, xn, &block, 2, 3).unwrap();
            let tn = g.constant(target.clone());
            let l = g.squared_loss(y, tn).unwrap();
            (g.value(l).item(), g.backward(l).unwrap().into_param_grads())
        };
        // Blow up the weights so the check is not dominated by the skip path.
        let mut store = gen.params().clone();
        let scaled: Vec<f64> = store.flatten().iter().map(|v| v * 20.0).collect();
        store.load_flat(&scaled).unwrap();
        let analytic: Vec<f64> = eval(&store).1.into_iter().flat_map(Tensor::into_data).collect();
        let r = grad_check(
            |p| {
                let mut s = store.clone();
                s.load_flat(p).unwrap();
                eval(&s).0
            },
            &analytic,
            &store.flatten(),
            1e-5,
            1e-4,
        );
        assert!(r.passed, "{}", r.max_rel_error);
    }

    #[test]
    fn generator_gradient_matches_finite_differences_at_five_points() {
        let patch = random_patch(3, 4, 21);
        let target = Tensor::row(&[0.7, 0.2, 0.1]);
        for seed in 0..5 {
            let mut store = Generator::new(tiny(4, 3), 100 + seed).unwrap().params().clone();
            // Larger weights keep the softmax away from its flat uniform regime.
            let scaled: Vec<f64> = store.flatten().iter().map(|v| v * 25.0).collect();
            store.load_flat(&scaled).unwrap();
            let gen = Generator::from_params(tiny(4, 3), store.clone()).unwrap();
            let eval = |s: &ParamStore| {
                let mut g = Graph::new(s);
                let tr = gen.trace(&mut g, &patch).unwrap();
                let tn = g.constant(target.clone());
                let l = g.squared_loss(tr.abundance, tn).unwrap();
                (g.value(l).item(), g.backward(l).unwrap().into_param_grads())
            };
            let analytic: Vec<f64> = eval(&store).1.into_iter().flat_map(Tensor::into_data).collect();
            let r = grad_check(
                |p| {
                    let mut s = store.clone();
                    s.load_flat(p).unwrap();
                    eval(&s).0
                },
                &analytic,
                &store.flatten(),
                1e-5,
                1e-4,
            );
            assert!(r.passed, "seed {seed}: {} at {}", r.max_rel_error, r.worst_index);
        }
    }

    #[test]
    fn output_is_a_distribution_and_has_p_entries() {
        let gen = Generator::new(tiny(4, 3), 7).unwrap();
        for seed in 0..20 {
            let a = gen.forward(&random_patch(3, 4, seed)).unwrap();
            assert_eq!(a.len(), 3);
            assert!(a.iter().all(|&v| v >= 0.0));
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(gen.forward(&random_patch(3, 5, 0)), Err(crate::Error::Dimension(_))));
        assert!(gen.forward(&random_patch(5, 4, 0)).is_err());
    }

    #[test]
    fn saturated_head_bias() {
        let mut gen = Generator::new(tiny(4, 3), 7).unwrap();
        let [w1, _, w2, b2] = gen.head_ids();
        for id in [w1, w2] {
            let [r, c] = gen.params().get(id).shape();
            gen.params_mut().set(id, Tensor::zeros(r, c)).unwrap();
        }
        gen.params_mut().set(b2, Tensor::row(&[50.0, -50.0, -50.0])).unwrap();
        let a = gen.forward(&random_patch(3, 4, 1)).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-15 && a[1] < 1e-20);
    }

    #[test]
    fn standard_config_output_length() {
        let cfg = TransformerConfig::standard(198, 8);
        assert_eq!((cfg.window, cfg.heads, cfg.d_k, cfg.blocks, cfg.d_model()), (5, 8, 64, 6, 512));
        let small = TransformerConfig { d_k: 4, blocks: 1, ffn_hidden: 8, ..cfg };
        let gen = Generator::new(small, 0).unwrap();
        assert_eq!(gen.forward(&random_patch(5, 198, 3)).unwrap().len(), 8);
    }

    #[test]
    fn init_is_seeded() {
        let a = Generator::new(tiny(4, 3), 11).unwrap();
        assert_eq!(a, Generator::new(tiny(4, 3), 11).unwrap());
        assert_ne!(a.params().get(a.positions_id()), Generator::new(tiny(4, 3), 12).unwrap().params().get(a.positions_id()));
    }

    #[test]
    fn attention_rows_sum_to_one_and_constant_patch_is_near_uniform() {
        let gen = Generator::new(tiny(4, 3), 2).unwrap();
        let maps = gen.attention_scores_of_center(&random_patch(3, 4, 9)).unwrap();
        assert_eq!(maps.len(), 2);
        for m in &maps {
            assert_eq!(m.len(), 9);
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let flat = Patch::new(3, 4, vec![0.5; 36], (0, 0)).unwrap();
        for m in gen.attention_scores_of_center(&flat).unwrap() {
            assert!(m.iter().all(|&w| (w - 1.0 / 9.0).abs() < 1e-3), "{m:?}");
        }
    }

    #[test]
    fn permuting_neighbours_with_positions_keeps_output() {
        let gen = Generator::new(tiny(4, 3), 5).unwrap();
        let patch = random_patch(3, 4, 6);
        let perm = [8, 0, 3, 1, 4, 7, 2, 5, 6]; // centre token 4 stays put
        let mut values = vec![0.0; patch.values().len()];
        let mut moved = gen.clone();
        let pos = gen.params().get(gen.positions_id());
        let mut pos_data = vec![0.0; pos.len()];
        let dm = pos.cols();
        for (dst, &src) in perm.iter().enumerate() {
            values[dst * 4..dst * 4 + 4].copy_from_slice(&patch.values()[src * 4..src * 4 + 4]);
            pos_data[dst * dm..(dst + 1) * dm].copy_from_slice(pos.row_slice(src));
        }
        moved.params_mut().set(gen.positions_id(), Tensor::new(9, dm, pos_data).unwrap()).unwrap();
        let permuted = Patch::new(3, 4, values, (0, 0)).unwrap();
        let a = gen.forward(&patch).unwrap();
        let b = moved.forward(&permuted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn from_params_round_trip() {
        let gen = Generator::new(tiny(4, 3), 5).unwrap();
        let back = Generator::from_params(gen.config().clone(), gen.params().clone()).unwrap();
        assert_eq!(back, gen);
        let mut short = ParamStore::new();
        short.add("embed.w", Tensor::zeros(4, 6));
        assert!(Generator::from_params(gen.config().clone(), short).is_err());
    }
}
