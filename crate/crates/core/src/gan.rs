//! Least-squares adversarial training of the patch-transformer generator.
//!
//! The discriminator scores abundance vectors: ground-truth labels are
//! pushed towards 1, generated vectors towards 0. The generator minimises
//! `mean((D(G(x)) − 1)²) + λ·mean(‖G(x) − a*‖₁)`.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cube::{AbundanceSet, HsiCube};
use crate::dataset::DatasetSplit;
use crate::diff::{AdamConfig, AdamState, Graph, NodeId, ParamId, ParamStore, Tensor};
use crate::error::{bail, Result};
use crate::par::map_indices;
use crate::patch::{extract_patch, PaddedCube, Patch};
use crate::rng::{stream, stream_rng};
use crate::transformer::{Generator, TransformerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub input: usize,
    pub hidden: [usize; 2],
}

impl DiscriminatorConfig {
    pub fn new(input: usize) -> Self {
        Self { input, hidden: [64, 32] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden.contains(&0) {
            bail!(Config, "discriminator widths must be positive: {} -> {:?}", self.input, self.hidden);
        }
        Ok(())
    }
}

/// Three affine layers with relu between them and a raw scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    config: DiscriminatorConfig,
    params: ParamStore,
    layers: [(ParamId, ParamId); 3],
}

impl Discriminator {
    /// He-normal weights, zero biases.
    pub fn new(config: DiscriminatorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(seed, stream::DISCRIMINATOR_INIT);
        let widths = [config.input, config.hidden[0], config.hidden[1], 1];
        let mut params = ParamStore::new();
        let layers = core::array::from_fn(|l| {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let std = libm::sqrt(2.0 / fan_in as f64);
            let w = params.add(format!("d.fc{l}.w"), Tensor::gaussian(fan_in, fan_out, std, &mut rng));
            let b = params.add(format!("d.fc{l}.b"), Tensor::zeros(1, fan_out));
            (w, b)
        });
        Ok(Self { config, params, layers })
    }

    pub fn from_params(config: DiscriminatorConfig, params: ParamStore) -> Result<Self> {
        let mut reference = Self::new(config, 0)?;
        if params.len() != reference.params.len() {
            bail!(Dimension, "checkpoint holds {} discriminator tensors, model needs {}", params.len(), reference.params.len());
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

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn layer_ids(&self) -> [(ParamId, ParamId); 3] {
        self.layers
    }

    /// Scores each row of the `n × p` input; returns an `n × 1` node.
    pub fn trace(&self, g: &mut Graph<'_>, input: NodeId) -> Result<NodeId> {
        if g.value(input).cols() != self.config.input {
            bail!(Dimension, "discriminator expects width {}, got {}", self.config.input, g.value(input).cols());
        }
        let mut x = input;
        for (l, &(w, b)) in self.layers.iter().enumerate() {
            let (wn, bn) = (g.param(w), g.param(b));
            x = g.matmul(x, wn)?;
            x = g.add(x, bn)?;
            if l < 2 {
                x = g.relu(x);
            }
        }
        Ok(x)
    }

    pub fn score(&self, abundance: &[f64]) -> Result<f64> {
        let mut g = Graph::new(&self.params);
        let x = g.constant(Tensor::row(abundance));
        let s = self.trace(&mut g, x)?;
        Ok(g.value(s).item())
    }
}

/// `½·mean((real − 1)²) + ½·mean(fake²)`.
pub fn d_loss(real: &[f64], fake: &[f64]) -> Result<f64> {
    if real.is_empty() || fake.is_empty() {
        bail!(Contract, "d_loss needs nonempty score batches");
    }
    let r = real.iter().map(|s| (s - 1.0) * (s - 1.0)).sum::<f64>() / real.len() as f64;
    let f = fake.iter().map(|s| s * s).sum::<f64>() / fake.len() as f64;
    Ok(0.5 * r + 0.5 * f)
}

/// `mean((fake − 1)²) + λ·mean_i ‖generated_i − labels_i‖₁`; abundance
/// arguments are row-major `n × p`.
pub fn g_loss(fake: &[f64], generated: &[f64], labels: &[f64], lambda: f64) -> Result<f64> {
    let n = fake.len();
    if n == 0 || generated.len() != labels.len() || !generated.len().is_multiple_of(n) {
        bail!(Contract, "g_loss batches misaligned: {} scores, {} generated, {} labels", n, generated.len(), labels.len());
    }
    let adv = fake.iter().map(|s| (s - 1.0) * (s - 1.0)).sum::<f64>() / n as f64;
    Ok(adv + lambda * l1_term(generated, labels, n))
}

fn l1_term(generated: &[f64], labels: &[f64], n: usize) -> f64 {
    generated.iter().zip(labels).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() / n as f64
}

/// Graph form of [`d_loss`] over `n × 1` score nodes.
pub fn d_loss_node(g: &mut Graph<'_>, real: NodeId, fake: NodeId) -> Result<NodeId> {
    let (nr, nf) = (g.value(real).rows(), g.value(fake).rows());
    if nr == 0 || nf == 0 {
        bail!(Contract, "d_loss needs nonempty score batches");
    }
    let ones = g.constant(Tensor::filled(nr, 1, 1.0));
    let zeros = g.constant(Tensor::zeros(nf, 1));
    let r = g.squared_loss(real, ones)?;
    let f = g.squared_loss(fake, zeros)?;
    let r = g.scale(r, 0.5 / nr as f64);
    let f = g.scale(f, 0.5 / nf as f64);
    g.add(r, f)
}

/// Graph form of [`g_loss`]; `fake_scores` is `None` when training without a discriminator.
pub fn g_loss_node(g: &mut Graph<'_>, fake_scores: Option<NodeId>, generated: NodeId, labels: NodeId, lambda: f64) -> Result<NodeId> {
    let n = g.value(generated).rows();
    if n == 0 || g.value(labels).shape() != g.value(generated).shape() {
        bail!(Contract, "g_loss batches misaligned");
    }
    let l1 = g.l1_loss(generated, labels)?;
    let l1 = g.scale(l1, lambda / n as f64);
    let Some(scores) = fake_scores else { return Ok(l1) };
    if g.value(scores).rows() != n {
        bail!(Contract, "g_loss batches misaligned: {} scores for {n} samples", g.value(scores).rows());
    }
    let ones = g.constant(Tensor::filled(n, 1, 1.0));
    let adv = g.squared_loss(scores, ones)?;
    let adv = g.scale(adv, 1.0 / n as f64);
    g.add(adv, l1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda_cor: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
    pub window: usize,
    pub labeled_fraction: f64,
    #[serde(default = "yes")]
    pub use_discriminator: bool,
}

fn yes() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lambda_cor: 10.0,
            batch_size: 32,
            epochs: 100,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            seed: 0,
            window: 5,
            labeled_fraction: 0.4,
            use_discriminator: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_cor >= 0.0) || !self.lambda_cor.is_finite() {
            bail!(Config, "lambda_cor must be a finite value >= 0, got {}", self.lambda_cor);
        }
        if self.batch_size == 0 {
            bail!(Config, "batch size must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            bail!(Config, "invalid Adam settings: lr {}, betas ({}, {})", self.learning_rate, self.beta1, self.beta2);
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.beta1, beta2: self.beta2, ..AdamConfig::default() }
    }
}

/// One optimiser step of the loss history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    /// Discriminator loss before its update; `None` without a discriminator.
    pub d_loss: Option<f64>,
    pub g_loss: f64,
    /// `mean ‖G(x) − a*‖₁` over the batch, without the λ factor.
    pub l1_term: f64,
}

/// Serializable description of a trained model; weights travel separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    pub generator: TransformerConfig,
    pub discriminator: Option<DiscriminatorConfig>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub generator: Generator,
    pub discriminator: Option<Discriminator>,
    pub history: Vec<LossRecord>,
}

impl TrainOutcome {
    pub fn checkpoint_config(&self, train: &TrainConfig) -> CheckpointConfig {
        CheckpointConfig {
            generator: self.generator.config().clone(),
            discriminator: self.discriminator.as_ref().map(|d| d.config().clone()),
            train: train.clone(),
        }
    }
}

fn check_inputs(cube: &HsiCube, labels: &AbundanceSet, gcfg: &TransformerConfig) -> Result<()> {
    if cube.bands() != gcfg.bands {
        bail!(Dimension, "cube has {} bands, generator expects {}", cube.bands(), gcfg.bands);
    }
    if labels.n_pixels() != cube.n_pixels() || labels.rows() != cube.rows() {
        bail!(Dimension, "labels cover {} pixels, cube has {}", labels.n_pixels(), cube.n_pixels());
    }
    if labels.endmembers() != gcfg.endmembers {
        bail!(Dimension, "labels have {} endmembers, generator outputs {}", labels.endmembers(), gcfg.endmembers);
    }
    Ok(())
}

fn patch_of(padded: &PaddedCube, cols: usize, pixel: usize, s: usize) -> Result<Patch> {
    extract_patch(padded, pixel / cols, pixel % cols, s)
}

type SampleGraph<'g> = (Graph<'g>, NodeId);

fn forward_graphs<'g>(generator: &'g Generator, patches: &[Patch], batch: &[usize]) -> Vec<SampleGraph<'g>> {
    map_indices(batch.len(), |b| {
        let mut g = Graph::new(generator.params());
        let t = generator.trace(&mut g, &patches[batch[b]]).expect("patch shapes are checked on construction");
        (g, t.abundance)
    })
}

fn stack_outputs(graphs: &[SampleGraph<'_>], p: usize) -> Result<Tensor> {
    Tensor::new(graphs.len(), p, graphs.iter().flat_map(|(g, a)| g.value(*a).data().iter().copied()).collect())
}

fn discriminator_update(d: &mut Discriminator, opt: &mut AdamState, real: &Tensor, fake: &Tensor) -> Result<f64> {
    let (value, grads) = {
        let mut g = Graph::new(d.params());
        let (r, f) = (g.constant(real.clone()), g.constant(fake.clone()));
        let (sr, sf) = (d.trace(&mut g, r)?, d.trace(&mut g, f)?);
        let loss = d_loss_node(&mut g, sr, sf)?;
        (g.value(loss).item(), g.backward(loss)?.into_param_grads())
    };
    opt.step(d.params_mut(), &grads)?;
    Ok(value)
}

/// Generator loss and its gradient with respect to the generated batch,
/// which enters this graph as a constant.
fn generator_upstream(d: Option<&Discriminator>, fake: &Tensor, labels: &Tensor, lambda: f64) -> Result<(f64, Tensor)> {
    let empty = ParamStore::new();
    let mut g = Graph::new(d.map_or(&empty, |d| d.params()));
    let f = g.constant(fake.clone());
    let l = g.constant(labels.clone());
    let scores = match d {
        Some(d) => Some(d.trace(&mut g, f)?),
        None => None,
    };
    let loss = g_loss_node(&mut g, scores, f, l, lambda)?;
    let grads = g.backward(loss)?;
    let upstream = grads.node(f).cloned().unwrap_or_else(|| Tensor::zeros(fake.rows(), fake.cols()));
    Ok((g.value(loss).item(), upstream))
}

/// Chains `upstream` through each sample graph and sums in batch order.
fn generator_grads(graphs: &[SampleGraph<'_>], upstream: &Tensor) -> Vec<Tensor> {
    let per_sample: Vec<Vec<Tensor>> = map_indices(graphs.len(), |b| {
        let (g, out) = &graphs[b];
        g.backward_from(*out, Tensor::row(upstream.row_slice(b))).expect("seed matches output shape").into_param_grads()
    });
    let mut it = per_sample.into_iter();
    let mut acc = it.next().expect("batches are nonempty");
    for grads in it {
        for (a, g) in acc.iter_mut().zip(&grads) {
            a.add_assign(g);
        }
    }
    acc
}

/// Training state over the labelled pixels of a dataset.
#[derive(Debug)]
pub struct Trainer {
    tcfg: TrainConfig,
    generator: Generator,
    discriminator: Option<Discriminator>,
    g_opt: AdamState,
    d_opt: Option<AdamState>,
    patches: Vec<Patch>,
    targets: Vec<Vec<f64>>,
    order: Vec<usize>,
    shuffle: rand_chacha::ChaCha8Rng,
    history: Vec<LossRecord>,
}

impl Trainer {
    pub fn new(
        cube: &HsiCube,
        labels: &AbundanceSet,
        split: &DatasetSplit,
        tcfg: &TrainConfig,
        gcfg: &TransformerConfig,
        dcfg: &DiscriminatorConfig,
    ) -> Result<Self> {
        tcfg.validate()?;
        gcfg.validate()?;
        check_inputs(cube, labels, gcfg)?;
        if gcfg.window != tcfg.window {
            bail!(Config, "generator window {} differs from training window {}", gcfg.window, tcfg.window);
        }
        if split.labeled.is_empty() {
            bail!(Config, "no labelled pixels to train on");
        }
        split.validate(cube.n_pixels())?;
        if dcfg.input != gcfg.endmembers {
            bail!(Dimension, "discriminator input {} differs from endmember count {}", dcfg.input, gcfg.endmembers);
        }
        let generator = Generator::new(gcfg.clone(), tcfg.seed)?;
        let discriminator = if tcfg.use_discriminator { Some(Discriminator::new(dcfg.clone(), tcfg.seed)?) } else { None };
        let padded = PaddedCube::for_window(cube, tcfg.window)?;
        let patches = split.labeled.iter().map(|&i| patch_of(&padded, cube.cols(), i, tcfg.window)).collect::<Result<_>>()?;
        Ok(Self {
            g_opt: AdamState::new(generator.params(), tcfg.adam()),
            d_opt: discriminator.as_ref().map(|d| AdamState::new(d.params(), tcfg.adam())),
            generator,
            discriminator,
            patches,
            targets: split.labeled.iter().map(|&i| labels.pixel(i).to_vec()).collect(),
            order: (0..split.labeled.len()).collect(),
            shuffle: stream_rng(tcfg.seed, stream::SHUFFLE),
            history: Vec::new(),
            tcfg: tcfg.clone(),
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn discriminator(&self) -> Option<&Discriminator> {
        self.discriminator.as_ref()
    }

    pub fn history(&self) -> &[LossRecord] {
        &self.history
    }

    pub fn n_labeled(&self) -> usize {
        self.patches.len()
    }

    fn labels_of(&self, batch: &[usize]) -> Result<Tensor> {
        let p = self.generator.config().endmembers;
        Tensor::new(batch.len(), p, batch.iter().flat_map(|&k| self.targets[k].iter().copied()).collect())
    }

    fn check_batch(&self, batch: &[usize]) -> Result<()> {
        if batch.is_empty() || batch.iter().any(|&k| k >= self.patches.len()) {
            bail!(Contract, "batch must be a nonempty set of labelled-sample indices");
        }
        Ok(())
    }

    /// Discriminator update alone; `None` when training without one.
    pub fn discriminator_step(&mut self, batch: &[usize]) -> Result<Option<f64>> {
        self.check_batch(batch)?;
        let labels = self.labels_of(batch)?;
        let fake = stack_outputs(&forward_graphs(&self.generator, &self.patches, batch), self.generator.config().endmembers)?;
        match (self.discriminator.as_mut(), self.d_opt.as_mut()) {
            (Some(d), Some(opt)) => Ok(Some(discriminator_update(d, opt, &labels, &fake)?)),
            _ => Ok(None),
        }
    }

    /// Generator update alone; returns the generator loss.
    pub fn generator_step(&mut self, batch: &[usize]) -> Result<f64> {
        self.check_batch(batch)?;
        let labels = self.labels_of(batch)?;
        let grads = {
            let graphs = forward_graphs(&self.generator, &self.patches, batch);
            let fake = stack_outputs(&graphs, self.generator.config().endmembers)?;
            let (value, upstream) = generator_upstream(self.discriminator.as_ref(), &fake, &labels, self.tcfg.lambda_cor)?;
            (value, generator_grads(&graphs, &upstream))
        };
        self.g_opt.step(self.generator.params_mut(), &grads.1)?;
        Ok(grads.0)
    }

    /// One discriminator then one generator update, sharing a single
    /// generator forward pass; appends to the loss history.
    pub fn step(&mut self, batch: &[usize]) -> Result<LossRecord> {
        self.check_batch(batch)?;
        let labels = self.labels_of(batch)?;
        let p = self.generator.config().endmembers;
        let (d_value, g_value, l1, grads) = {
            let graphs = forward_graphs(&self.generator, &self.patches, batch);
            let fake = stack_outputs(&graphs, p)?;
            let d_value = match (self.discriminator.as_mut(), self.d_opt.as_mut()) {
                (Some(d), Some(opt)) => Some(discriminator_update(d, opt, &labels, &fake)?),
                _ => None,
            };
            let (g_value, upstream) = generator_upstream(self.discriminator.as_ref(), &fake, &labels, self.tcfg.lambda_cor)?;
            (d_value, g_value, l1_term(fake.data(), labels.data(), batch.len()), generator_grads(&graphs, &upstream))
        };
        if !g_value.is_finite() || d_value.is_some_and(|d| !d.is_finite()) {
            bail!(Numerical, "non-finite loss at step {}: d {:?}, g {}", self.history.len(), d_value, g_value);
        }
        self.g_opt.step(self.generator.params_mut(), &grads)?;
        let record = LossRecord { step: self.history.len(), d_loss: d_value, g_loss: g_value, l1_term: l1 };
        self.history.push(record);
        Ok(record)
    }

    /// Reshuffles the labelled samples and steps through them in batches.
    pub fn run_epoch(&mut self) -> Result<()> {
        self.order.shuffle(&mut self.shuffle);
        let order = core::mem::take(&mut self.order);
        let result = order.chunks(self.tcfg.batch_size).try_for_each(|b| self.step(b).map(|_| ()));
        self.order = order;
        result
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome { generator: self.generator, discriminator: self.discriminator, history: self.history }
    }
}

/// Trains on the labelled pixels of `split` for `tcfg.epochs` epochs,
/// alternating one discriminator and one generator Adam step per batch.
/// Results are bit-reproducible for a fixed seed regardless of thread count.
pub fn train(
    cube: &HsiCube,
    labels: &AbundanceSet,
    split: &DatasetSplit,
    tcfg: &TrainConfig,
    gcfg: &TransformerConfig,
    dcfg: &DiscriminatorConfig,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(cube, labels, split, tcfg, gcfg, dcfg)?;
    for _ in 0..tcfg.epochs {
        trainer.run_epoch()?;
    }
    Ok(trainer.finish())
}

/// Applies the generator to every pixel's patch.
pub fn infer_abundance(cube: &HsiCube, generator: &Generator) -> Result<AbundanceSet> {
    let cfg = generator.config();
    if cube.bands() != cfg.bands {
        bail!(Dimension, "cube has {} bands, generator expects {}", cube.bands(), cfg.bands);
    }
    let padded = PaddedCube::for_window(cube, cfg.window)?;
    let rows: Vec<Result<Vec<f64>>> = map_indices(cube.n_pixels(), |i| generator.forward(&patch_of(&padded, cube.cols(), i, cfg.window)?));
    let mut data = Vec::with_capacity(cube.n_pixels() * cfg.endmembers);
    for r in rows {
        data.extend(r?);
    }
    AbundanceSet::new(cube.rows(), cube.cols(), cfg.endmembers, data)
}

/// Mean per-pixel L1 distance between `estimate` and `truth` over `pixels`.
pub fn mean_l1_error(estimate: &AbundanceSet, truth: &AbundanceSet, pixels: &[usize]) -> f64 {
    if pixels.is_empty() {
        return 0.0;
    }
    let total: f64 = pixels.iter().map(|&i| estimate.pixel(i).iter().zip(truth.pixel(i)).map(|(a, b)| libm::fabs(a - b)).sum::<f64>()).sum();
    total / pixels.len() as f64
}

/// All centre-token attention maps of one pixel, `h` vectors of `s²` scores.
pub fn attention_maps(cube: &HsiCube, generator: &Generator, row: usize, col: usize) -> Result<Vec<Vec<f64>>> {
    let padded = PaddedCube::for_window(cube, generator.config().window)?;
    generator.attention_scores_of_center(&extract_patch(&padded, row, col, generator.config().window)?)
}
