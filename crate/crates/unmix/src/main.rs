use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use unmix::commands;
use unmix::config::{Baseline, ModelKind, Subset};
use unmix::manifest::load_config;
use unmix::{CliError, CliResult};

/// Hyperspectral unmixing experiments: synthesize scenes, train the patch
/// transformer GAN, run baselines, evaluate and render maps.
///
/// Every subcommand takes `--config FILE` (a JSON config or a manifest
/// written by an earlier run); flags override keys from that file.
/// `UNMIX_THREADS` caps the worker threads.
#[derive(Parser)]
#[command(name = "unmix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a cube, ground-truth abundances and endmembers.
    Synth(SynthFlags),
    /// Train the generator (and discriminator) on labelled pixels.
    Train(TrainFlags),
    /// Train the generator with the L1 term only.
    Ablate(TrainFlags),
    /// Estimate abundances with a checkpoint or a baseline solver.
    Unmix(UnmixFlags),
    /// Compute every metric whose inputs are present.
    Eval(EvalFlags),
    /// Render each map of a container as an 8-bit grayscale image.
    Render(RenderFlags),
    /// Train and evaluate once per window size.
    SweepWindow(SweepFlags),
}

#[derive(Args, Serialize)]
struct Common {
    /// JSON config or manifest supplying defaults for every other flag.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Args, Serialize)]
struct SynthFlags {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    /// Maps before the superpixel split; the scene gets twice as many endmembers.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p_initial: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    blob_count: Option<usize>,
    /// One interaction coefficient for every endmember pair.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    /// Target SNR in dB.
    #[arg(long, alias = "snr")]
    #[serde(skip_serializing_if = "Option::is_none")]
    snr_db: Option<f64>,
    /// Leave the cube noise-free.
    #[arg(long, conflicts_with = "snr_db")]
    #[serde(skip)]
    no_noise: bool,
    /// Spectral library CSV (header of names, one row per band).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    endmember_csv: Option<PathBuf>,
    /// Bands of the built-in library.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bands: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    library_size: Option<usize>,
}

#[derive(Args, Serialize)]
struct ModelFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_size: Option<usize>,
    #[arg(long, alias = "lr")]
    #[serde(skip_serializing_if = "Option::is_none")]
    learning_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta2: Option<f64>,
    /// Weight of the L1 correspondence term.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_cor: Option<f64>,
    /// Patch side length (odd).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    labeled_fraction: Option<f64>,
    /// Train with the L1 term only.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    no_discriminator: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    heads: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    d_k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ffn_hidden: Option<usize>,
    /// Keep the position embeddings at their initial values.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    freeze_positions: bool,
    /// Discriminator hidden widths.
    #[arg(long, num_args = 2, value_names = ["H1", "H2"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    disc_hidden: Option<Vec<usize>>,
    /// Reuse a saved split.json instead of drawing one.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct TrainFlags {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cube: Option<PathBuf>,
    /// Ground-truth abundance container used as labels.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<PathBuf>,
    /// Endmember CSV for FCLS-bootstrapped labels when --labels is absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    endmembers: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct AdmmFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    primal_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_tol: Option<f64>,
    /// Drop the sum-to-one constraint (SUnSAL only).
    #[arg(long)]
    #[serde(skip)]
    no_sum_to_one: bool,
}

#[derive(Args, Serialize)]
struct UnmixFlags {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cube: Option<PathBuf>,
    /// Checkpoint directory or its checkpoint.json.
    #[arg(long, conflicts_with = "baseline")]
    #[serde(skip_serializing_if = "Option::is_none")]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Baseline>,
    /// Endmember matrix (FCLS) or library (SUnSAL) CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    endmembers: Option<PathBuf>,
    #[command(flatten)]
    admm: AdmmFlags,
    /// Export centre-token attention maps for pixel ROW,COL (repeatable).
    #[arg(long = "attention-pixel", value_parser = parse_pixel)]
    #[serde(rename = "attention_pixels", skip_serializing_if = "Vec::is_empty")]
    attention_pixels: Vec<[usize; 2]>,
}

fn parse_pixel(s: &str) -> Result<[usize; 2], String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    Ok([r.trim().parse().map_err(|e| format!("row: {e}"))?, c.trim().parse().map_err(|e| format!("col: {e}"))?])
}

#[derive(Args, Serialize)]
struct EvalFlags {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Estimated abundance container.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<PathBuf>,
    /// Ground-truth abundance container.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cube: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    endmembers: Option<PathBuf>,
    /// Mixing model used to reconstruct the cube for aSAM.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelKind>,
    /// Interaction coefficient for --model gbm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    subset: Option<Subset>,
}

#[derive(Args, Serialize)]
struct RenderFlags {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Abundance, attention or cube container.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    /// Also write PNG copies.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    png: bool,
}

#[derive(Args, Serialize)]
struct SweepFlags {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cube: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<PathBuf>,
    /// Window sizes to compare.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    sizes: Option<Vec<usize>>,
}

/// Recursively overlays `top` onto `base`; objects merge, everything else replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}

fn effective<T: DeserializeOwned>(config: Option<&PathBuf>, flags: Value) -> CliResult<T> {
    let mut value = match config {
        Some(p) => load_config::<Value>(p)?,
        None => Value::Object(Map::new()),
    };
    merge(&mut value, flags);
    serde_json::from_value(value).map_err(|e| CliError::input(format!("invalid configuration: {e}")))
}

fn flags_value<F: Serialize>(flags: &F) -> Value {
    serde_json::to_value(flags).expect("flags serialize to JSON")
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    match cli.command {
        Command::Synth(f) => {
            let mut v = flags_value(&f);
            if f.no_noise {
                v["snr_db"] = Value::Null;
            }
            commands::cmd_synth(&effective(f.common.config.as_ref(), v)?)
        }
        Command::Train(f) => commands::cmd_train(&effective(f.common.config.as_ref(), flags_value(&f))?),
        Command::Ablate(f) => {
            let mut v = flags_value(&f);
            v["no_discriminator"] = Value::Bool(true);
            commands::cmd_train(&effective(f.common.config.as_ref(), v)?)
        }
        Command::Unmix(f) => {
            let mut v = flags_value(&f);
            if f.admm.no_sum_to_one {
                v["admm"]["sum_to_one"] = Value::Bool(false);
            }
            // ADMM flags override single keys of the default parameter block.
            let admm = v.get("admm").cloned().unwrap_or_default();
            let mut base = serde_json::to_value(unmix_core::baselines::AdmmParams::default()).expect("serializable");
            if let Some(cfg) = &f.common.config {
                if let Some(a) = load_config::<Value>(cfg)?.get("admm") {
                    merge(&mut base, a.clone());
                }
            }
            merge(&mut base, admm);
            v["admm"] = base;
            commands::cmd_unmix(&effective(f.common.config.as_ref(), v)?)
        }
        Command::Eval(f) => commands::cmd_eval(&effective(f.common.config.as_ref(), flags_value(&f))?),
        Command::Render(f) => commands::cmd_render(&effective(f.common.config.as_ref(), flags_value(&f))?),
        Command::SweepWindow(f) => commands::cmd_sweep_window(&effective(f.common.config.as_ref(), flags_value(&f))?),
    }
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("UNMIX_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::input(format!("UNMIX_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::input("UNMIX_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::input(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
