//! Effective command configurations. Each is what a manifest records and
//! what `--config` accepts; flags given on the command line override it.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use unmix_core::baselines::AdmmParams;
use unmix_core::gan::{DiscriminatorConfig, TrainConfig};
use unmix_core::synth::{GammaSpec, SlicParams, SynthConfig};
use unmix_core::transformer::TransformerConfig;

fn d_rows() -> usize {
    100
}
fn d_p_initial() -> usize {
    4
}
fn d_blobs() -> usize {
    3
}
fn d_gamma() -> GammaSpec {
    GammaSpec::Uniform(0.2)
}
fn d_snr() -> Option<f64> {
    Some(20.0)
}
fn d_bands() -> usize {
    198
}
fn d_library() -> usize {
    24
}
fn d_out() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthArgs {
    #[serde(default = "d_rows")]
    pub rows: usize,
    #[serde(default = "d_rows")]
    pub cols: usize,
    #[serde(default = "d_p_initial")]
    pub p_initial: usize,
    #[serde(default = "d_blobs")]
    pub blob_count: usize,
    /// Defaults to `K = rows·cols/100`, `q = 0.5`, ten iterations.
    #[serde(default)]
    pub slic: Option<SlicParams>,
    #[serde(default = "d_gamma")]
    pub gamma: GammaSpec,
    /// `null` disables noise.
    #[serde(default = "d_snr")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Spectral library; the built-in synthetic library is used when absent.
    #[serde(default)]
    pub endmember_csv: Option<PathBuf>,
    /// Bands of the built-in library.
    #[serde(default = "d_bands")]
    pub bands: usize,
    /// Spectra in the built-in library.
    #[serde(default = "d_library")]
    pub library_size: usize,
    #[serde(default = "d_out")]
    pub out: PathBuf,
}

impl Default for SynthArgs {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl SynthArgs {
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            rows: self.rows,
            cols: self.cols,
            p_initial: self.p_initial,
            blob_count: self.blob_count,
            slic: self.slic.unwrap_or_else(|| SlicParams::default_for(self.rows * self.cols)),
            gamma: self.gamma.clone(),
            snr_db: self.snr_db,
            seed: self.seed,
        }
    }
}

fn d_epochs() -> usize {
    100
}
fn d_batch() -> usize {
    32
}
fn d_lr() -> f64 {
    2e-4
}
fn d_beta1() -> f64 {
    0.7
}
fn d_beta2() -> f64 {
    0.999
}
fn d_lambda() -> f64 {
    10.0
}
fn d_window() -> usize {
    5
}
fn d_fraction() -> f64 {
    0.4
}
fn d_dk() -> usize {
    64
}
fn d_blocks() -> usize {
    6
}
fn d_disc_hidden() -> [usize; 2] {
    [64, 32]
}

/// Generator, discriminator and optimiser settings shared by `train` and `sweep-window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArgs {
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_lambda")]
    pub lambda_cor: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default = "d_fraction")]
    pub labeled_fraction: f64,
    #[serde(default)]
    pub no_discriminator: bool,
    /// Attention heads; defaults to the endmember count.
    #[serde(default)]
    pub heads: Option<usize>,
    #[serde(default = "d_dk")]
    pub d_k: usize,
    #[serde(default = "d_blocks")]
    pub blocks: usize,
    /// Defaults to `4 · d_model`.
    #[serde(default)]
    pub ffn_hidden: Option<usize>,
    #[serde(default)]
    pub freeze_positions: bool,
    #[serde(default = "d_disc_hidden")]
    pub disc_hidden: [usize; 2],
}

impl Default for ModelArgs {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ModelArgs {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda_cor: self.lambda_cor,
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            seed: self.seed,
            window: self.window,
            labeled_fraction: self.labeled_fraction,
            use_discriminator: !self.no_discriminator,
        }
    }

    pub fn generator_config(&self, bands: usize, endmembers: usize) -> TransformerConfig {
        let heads = self.heads.unwrap_or(endmembers);
        TransformerConfig {
            window: self.window,
            bands,
            heads,
            d_k: self.d_k,
            blocks: self.blocks,
            ffn_hidden: self.ffn_hidden.unwrap_or(4 * heads * self.d_k),
            endmembers,
            freeze_positions: self.freeze_positions,
        }
    }

    pub fn discriminator_config(&self, endmembers: usize) -> DiscriminatorConfig {
        DiscriminatorConfig { input: endmembers, hidden: self.disc_hidden }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainArgs {
    pub cube: PathBuf,
    /// Ground-truth abundance container used as labels.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Without `labels`, FCLS estimates against these endmembers become the labels.
    #[serde(default)]
    pub endmembers: Option<PathBuf>,
    /// Reuse a saved split instead of drawing one.
    #[serde(default)]
    pub split: Option<PathBuf>,
    #[serde(flatten)]
    pub model: ModelArgs,
    #[serde(default = "d_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Fcls,
    Sunsal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmixArgs {
    pub cube: PathBuf,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub baseline: Option<Baseline>,
    /// Endmembers (FCLS) or library (SUnSAL) for the baselines.
    #[serde(default)]
    pub endmembers: Option<PathBuf>,
    #[serde(default)]
    pub admm: AdmmParams,
    /// Pixels `[row, col]` whose centre-token attention maps are exported.
    #[serde(default)]
    pub attention_pixels: Vec<[usize; 2]>,
    #[serde(default = "d_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    #[default]
    All,
    /// Unlabelled pixels of the split.
    Test,
    /// Labelled pixels of the split.
    Train,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Linear,
    Gbm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalArgs {
    pub estimate: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
    #[serde(default)]
    pub cube: Option<PathBuf>,
    #[serde(default)]
    pub endmembers: Option<PathBuf>,
    /// Mixing model for the aSAM reconstruction.
    #[serde(default)]
    pub model: ModelKind,
    /// Interaction coefficients for the `gbm` model.
    #[serde(default)]
    pub gamma: Option<GammaSpec>,
    #[serde(default)]
    pub split: Option<PathBuf>,
    #[serde(default)]
    pub subset: Subset,
    #[serde(default = "d_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderArgs {
    pub input: PathBuf,
    #[serde(default)]
    pub png: bool,
    #[serde(default = "d_out")]
    pub out: PathBuf,
}

fn d_sizes() -> Vec<usize> {
    vec![3, 5, 7, 9]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    pub cube: PathBuf,
    pub labels: PathBuf,
    #[serde(default = "d_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub split: Option<PathBuf>,
    #[serde(flatten)]
    pub model: ModelArgs,
    #[serde(default = "d_out")]
    pub out: PathBuf,
}
