//! Subcommand implementations. Each takes its effective configuration,
//! writes its outputs plus a `<command>.manifest.json` into `out`, and
//! returns the manifest path.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use unmix_core::baselines::{bootstrap_labels, fcls_unmix_with_diagnostics, sunsal_unmix};
use unmix_core::gan::{attention_maps, infer_abundance, train};
use unmix_core::metrics::{evaluate, EvalInputs, EvalReport, MixingModel};
use unmix_core::synth::{synthesize_dataset, synthetic_library};
use unmix_core::{split_dataset, AbundanceSet, DatasetSplit, EndmemberMatrix, HsiCube};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{Baseline, EvalArgs, ModelArgs, ModelKind, RenderArgs, Subset, SweepArgs, SynthArgs, TrainArgs, UnmixArgs};
use crate::container::{self, Header, Kind};
use crate::manifest::Manifest;
use crate::render::render_map;
use crate::tables::{self, SweepRow};
use crate::{CliError, CliResult};

pub const CUBE_FILE: &str = "cube.hsic";
pub const CLEAN_FILE: &str = "clean.hsic";
pub const ABUNDANCE_FILE: &str = "abundances.hsic";
pub const ENDMEMBER_FILE: &str = "endmembers.csv";
pub const SPLIT_FILE: &str = "split.json";
pub const LOSS_FILE: &str = "loss.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";

fn prepare_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(())
}

fn finish<C: Serialize>(command: &str, config: &C, inputs: &[PathBuf], out: &Path, outputs: &[PathBuf]) -> CliResult<PathBuf> {
    Ok(Manifest::build(command, config, inputs, out, outputs)?.write(out)?)
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<PathBuf> {
    let cfg = args.synth_config();
    let (library, inputs) = match &args.endmember_csv {
        Some(p) => (tables::read_endmembers(p)?, vec![p.clone()]),
        None => (synthetic_library(args.bands, args.library_size, args.seed)?, vec![]),
    };
    let ds = synthesize_dataset(&cfg, &library)?;
    prepare_out(&args.out)?;
    let outputs = [CUBE_FILE, CLEAN_FILE, ABUNDANCE_FILE, ENDMEMBER_FILE].map(|f| args.out.join(f));
    container::write_cube(&outputs[0], &ds.cube)?;
    container::write_cube(&outputs[1], &ds.clean)?;
    container::write_abundance(&outputs[2], &ds.abundances, true)?;
    tables::write_endmembers(&outputs[3], &ds.endmembers)?;
    finish("synth", args, &inputs, &args.out, &outputs)
}

fn read_split(path: &Path) -> CliResult<DatasetSplit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn load_or_draw_split(path: Option<&PathBuf>, n: usize, model: &ModelArgs, inputs: &mut Vec<PathBuf>) -> CliResult<DatasetSplit> {
    let split = match path {
        Some(p) => {
            inputs.push(p.clone());
            read_split(p)?
        }
        None => split_dataset(n, model.labeled_fraction, model.seed)?,
    };
    split.validate(n)?;
    Ok(split)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(value).map_err(anyhow::Error::from)? + "\n")?;
    Ok(())
}

fn load_labels(cube: &HsiCube, labels: Option<&PathBuf>, endmembers: Option<&PathBuf>, inputs: &mut Vec<PathBuf>) -> CliResult<AbundanceSet> {
    match (labels, endmembers) {
        (Some(l), _) => {
            inputs.push(l.clone());
            Ok(container::read_abundance(l)?)
        }
        (None, Some(m)) => {
            inputs.push(m.clone());
            Ok(bootstrap_labels(cube, &tables::read_endmembers(m)?)?)
        }
        (None, None) => Err(CliError::input("training needs --labels, or --endmembers for FCLS-bootstrapped labels")),
    }
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<PathBuf> {
    let mut inputs = vec![args.cube.clone()];
    let cube = container::read_cube(&args.cube)?;
    let labels = load_labels(&cube, args.labels.as_ref(), args.endmembers.as_ref(), &mut inputs)?;
    let split = load_or_draw_split(args.split.as_ref(), cube.n_pixels(), &args.model, &mut inputs)?;
    let tcfg = args.model.train_config();
    let gcfg = args.model.generator_config(cube.bands(), labels.endmembers());
    let dcfg = args.model.discriminator_config(labels.endmembers());
    let outcome = train(&cube, &labels, &split, &tcfg, &gcfg, &dcfg)?;

    prepare_out(&args.out)?;
    let ckpt = args.out.join(CHECKPOINT_DIR);
    prepare_out(&ckpt)?;
    let mut outputs = save_checkpoint(&ckpt, &outcome, &tcfg)?;
    let loss = args.out.join(LOSS_FILE);
    tables::write_loss_history(&loss, &outcome.history)?;
    let split_path = args.out.join(SPLIT_FILE);
    write_json(&split_path, &split)?;
    outputs.extend([loss, split_path]);
    finish("train", args, &inputs, &args.out, &outputs)
}

fn attention_file(row: usize, col: usize) -> String {
    format!("attention_r{row}_c{col}.hsic")
}

pub fn cmd_unmix(args: &UnmixArgs) -> CliResult<PathBuf> {
    let cube = container::read_cube(&args.cube)?;
    let mut inputs = vec![args.cube.clone()];
    prepare_out(&args.out)?;
    let abundance_path = args.out.join(ABUNDANCE_FILE);
    let mut outputs = vec![abundance_path.clone()];
    let endmembers = || -> CliResult<EndmemberMatrix> {
        let p = args.endmembers.as_ref().ok_or_else(|| CliError::input("baselines need --endmembers"))?;
        Ok(tables::read_endmembers(p)?)
    };
    match (&args.checkpoint, args.baseline) {
        (Some(c), None) => {
            let loaded = load_checkpoint(c)?;
            inputs.extend(checkpoint_inputs(c));
            let est = infer_abundance(&cube, &loaded.generator)?;
            container::write_abundance(&abundance_path, &est, true)?;
            let s = loaded.generator.config().window;
            for &[row, col] in &args.attention_pixels {
                if row >= cube.rows() || col >= cube.cols() {
                    return Err(CliError::input(format!("attention pixel ({row}, {col}) outside the {}×{} cube", cube.rows(), cube.cols())));
                }
                let maps = attention_maps(&cube, &loaded.generator, row, col)?;
                let mut data = Vec::with_capacity(s * s * maps.len());
                for t in 0..s * s {
                    data.extend(maps.iter().map(|m| m[t]));
                }
                let mut header = Header::new(Kind::Attention, s, s, maps.len());
                header.unconstrained = true;
                let path = args.out.join(attention_file(row, col));
                container::write(&path, &header, &data)?;
                outputs.push(path);
            }
        }
        (None, Some(Baseline::Fcls)) => {
            let m = endmembers()?;
            inputs.push(args.endmembers.clone().unwrap_or_default());
            let (est, diags) = fcls_unmix_with_diagnostics(&cube, &m)?;
            container::write_abundance(&abundance_path, &est, true)?;
            let d = args.out.join("diagnostics.csv");
            tables::write_fcls_diagnostics(&d, &diags)?;
            outputs.push(d);
        }
        (None, Some(Baseline::Sunsal)) => {
            let m = endmembers()?;
            inputs.push(args.endmembers.clone().unwrap_or_default());
            let res = sunsal_unmix(&cube, &m, &args.admm)?;
            if res.n_unconverged() > 0 {
                eprintln!("warning: {} of {} pixels hit max_iters before converging", res.n_unconverged(), cube.n_pixels());
            }
            container::write_abundance(&abundance_path, &res.abundances, args.admm.sum_to_one)?;
            let d = args.out.join("diagnostics.csv");
            tables::write_sunsal_diagnostics(&d, &res.diagnostics)?;
            outputs.push(d);
        }
        _ => return Err(CliError::input("give exactly one of --checkpoint or --baseline")),
    }
    finish("unmix", args, &inputs, &args.out, &outputs)
}

fn checkpoint_inputs(path: &Path) -> Vec<PathBuf> {
    let dir = if path.is_dir() { path.to_path_buf() } else { path.parent().map(Path::to_path_buf).unwrap_or_default() };
    let mut files: Vec<PathBuf> = [crate::checkpoint::CHECKPOINT_FILE, crate::checkpoint::GENERATOR_FILE, crate::checkpoint::DISCRIMINATOR_FILE]
        .iter()
        .map(|f| dir.join(f))
        .filter(|p| p.exists())
        .collect();
    files.sort();
    files
}

/// Pixel indices selected by `subset`.
fn subset_pixels(subset: Subset, split: Option<&DatasetSplit>, n: usize) -> CliResult<Option<Vec<usize>>> {
    match (subset, split) {
        (Subset::All, _) => Ok(None),
        (_, None) => Err(CliError::input("--subset test|train needs --split")),
        (s, Some(split)) => {
            split.validate(n)?;
            Ok(Some(if s == Subset::Test { split.unlabeled.clone() } else { split.labeled.clone() }))
        }
    }
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<PathBuf> {
    let mut inputs = vec![args.estimate.clone()];
    let mut estimate = container::read_abundance(&args.estimate)?;
    let mut truth = match &args.truth {
        Some(p) => {
            inputs.push(p.clone());
            Some(container::read_abundance(p)?)
        }
        None => None,
    };
    let mut cube = match &args.cube {
        Some(p) => {
            inputs.push(p.clone());
            Some(container::read_cube(p)?)
        }
        None => None,
    };
    let endmembers = match &args.endmembers {
        Some(p) => {
            inputs.push(p.clone());
            Some(tables::read_endmembers(p)?)
        }
        None => None,
    };
    let split = match &args.split {
        Some(p) => {
            inputs.push(p.clone());
            Some(read_split(p)?)
        }
        None => None,
    };
    let model = match args.model {
        ModelKind::Linear => MixingModel::Linear,
        ModelKind::Gbm => {
            let g = args.gamma.as_ref().ok_or_else(|| CliError::input("--model gbm needs --gamma"))?;
            MixingModel::Gbm(g.resolve(estimate.endmembers())?)
        }
    };
    if let Some(px) = subset_pixels(args.subset, split.as_ref(), estimate.n_pixels())? {
        estimate = estimate.select_pixels(&px)?;
        truth = truth.map(|t| t.select_pixels(&px)).transpose()?;
        cube = cube.map(|c| c.select_pixels(&px)).transpose()?;
    }
    let report =
        evaluate(EvalInputs { truth: truth.as_ref(), estimate: &estimate, cube: cube.as_ref(), endmembers: endmembers.as_ref(), model: &model })?;
    prepare_out(&args.out)?;
    let json = args.out.join("eval.json");
    write_json(&json, &report)?;
    let txt = args.out.join("eval.txt");
    fs::write(&txt, report.to_table())?;
    finish("eval", args, &inputs, &args.out, &[json, txt])
}

pub fn read_report(path: &Path) -> CliResult<EvalReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
}

pub fn cmd_render(args: &RenderArgs) -> CliResult<PathBuf> {
    let (header, data) = container::read(&args.input)?;
    let prefix = match header.kind {
        Kind::Abundance => "abundance",
        Kind::Attention => "head",
        Kind::Cube => "band",
    };
    prepare_out(&args.out)?;
    let mut outputs = Vec::new();
    let mut clipped = 0;
    let k = header.channels;
    for j in 0..k {
        let map: Vec<f64> = data.iter().skip(j).step_by(k).copied().collect();
        let (files, c) = render_map(&args.out, &format!("{prefix}_{j:02}"), header.rows, header.cols, &map, args.png)?;
        outputs.extend(files);
        clipped += c;
    }
    if clipped > 0 {
        eprintln!("warning: {clipped} values outside [0, 1] were clipped");
    }
    finish("render", args, std::slice::from_ref(&args.input), &args.out, &outputs)
}

pub fn cmd_sweep_window(args: &SweepArgs) -> CliResult<PathBuf> {
    let mut inputs = vec![args.cube.clone(), args.labels.clone()];
    let cube = container::read_cube(&args.cube)?;
    let labels = container::read_abundance(&args.labels)?;
    let split = load_or_draw_split(args.split.as_ref(), cube.n_pixels(), &args.model, &mut inputs)?;
    if args.sizes.is_empty() {
        return Err(CliError::input("no window sizes given"));
    }
    let truth = labels.select_pixels(&split.unlabeled)?;
    let mut rows = Vec::with_capacity(args.sizes.len());
    for &s in &args.sizes {
        let model = ModelArgs { window: s, ..args.model.clone() };
        let gcfg = model.generator_config(cube.bands(), labels.endmembers());
        let outcome = train(&cube, &labels, &split, &model.train_config(), &gcfg, &model.discriminator_config(labels.endmembers()))?;
        let est = infer_abundance(&cube, &outcome.generator)?.select_pixels(&split.unlabeled)?;
        let report = evaluate(EvalInputs { truth: Some(&truth), estimate: &est, cube: None, endmembers: None, model: &MixingModel::Linear })?;
        rows.push(SweepRow { window: s, armse: report.armse.unwrap_or(f64::NAN), rms_aad: report.rms_aad.unwrap_or(f64::NAN) });
    }
    prepare_out(&args.out)?;
    let csv = args.out.join("sweep.csv");
    tables::write_sweep(&csv, &rows)?;
    finish("sweep-window", args, &inputs, &args.out, &[csv])
}
