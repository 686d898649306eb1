//! Abundance and reconstruction quality indicators.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::cube::{AbundanceSet, EndmemberMatrix, HsiCube};
use crate::error::{bail, Result};
use crate::synth::gbm::{mix_pixels, GbmParams};

fn same_shape(t: &AbundanceSet, e: &AbundanceSet) -> Result<()> {
    if (t.rows(), t.cols(), t.endmembers()) != (e.rows(), e.cols(), e.endmembers()) {
        bail!(Dimension, "abundance shapes differ: {}x{}x{} vs {}x{}x{}", t.rows(), t.cols(), t.endmembers(), e.rows(), e.cols(), e.endmembers());
    }
    if t.n_pixels() == 0 {
        bail!(Dimension, "no pixels to evaluate");
    }
    Ok(())
}

/// `sqrt(mean_i (a_ij − â_ij)²)` for each endmember `j`.
pub fn rmse_per_endmember(truth: &AbundanceSet, est: &AbundanceSet) -> Result<Vec<f64>> {
    same_shape(truth, est)?;
    let (n, p) = (truth.n_pixels(), truth.endmembers());
    let mut acc = alloc::vec![0.0; p];
    for i in 0..n {
        for ((s, a), b) in acc.iter_mut().zip(truth.pixel(i)).zip(est.pixel(i)) {
            *s += (a - b) * (a - b);
        }
    }
    Ok(acc.into_iter().map(|s| libm::sqrt(s / n as f64)).collect())
}

/// `mean_i sqrt((1/p)·Σ_j (a_ij − â_ij)²)`: root inside, mean outside.
pub fn armse(truth: &AbundanceSet, est: &AbundanceSet) -> Result<f64> {
    same_shape(truth, est)?;
    let p = truth.endmembers() as f64;
    let total: f64 =
        (0..truth.n_pixels()).map(|i| libm::sqrt(truth.pixel(i).iter().zip(est.pixel(i)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p)).sum();
    Ok(total / truth.n_pixels() as f64)
}

/// Summary of a per-pixel angle statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleStat {
    pub value: f64,
    pub pixels_used: usize,
    /// Pixels skipped because one of the two vectors has zero norm.
    pub degenerate: usize,
    /// Largest amount by which a cosine had to be clamped into `[−1, 1]`.
    pub max_clamp: f64,
}

/// Angle between two vectors, or `None` when either has zero norm.
/// Evaluated as `2·atan2(‖â − b̂‖, ‖â + b̂‖)` on the unit vectors, which equals
/// `arccos` of the normalised inner product but keeps full precision near 0
/// and π. The second value is how far that cosine had to be clamped into `[−1, 1]`.
pub fn spectral_angle(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return None;
    }
    let (na, nb) = (libm::sqrt(aa), libm::sqrt(bb));
    let c = ab / (na * nb);
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    let angle = 2.0 * libm::atan2(libm::sqrt(diff), libm::sqrt(sum));
    Some((angle, libm::fabs(c - c.clamp(-1.0, 1.0))))
}

fn angle_stat(n: usize, angle: impl Fn(usize) -> Option<(f64, f64)>, squared: bool) -> Result<AngleStat> {
    let (mut sum, mut used, mut max_clamp) = (0.0, 0, 0.0f64);
    for i in 0..n {
        if let Some((t, c)) = angle(i) {
            sum += if squared { t * t } else { t };
            used += 1;
            max_clamp = max_clamp.max(c);
        }
    }
    if used == 0 {
        bail!(DegenerateSignal, "every pixel has a zero-norm vector");
    }
    let mean = sum / used as f64;
    Ok(AngleStat { value: if squared { libm::sqrt(mean) } else { mean }, pixels_used: used, degenerate: n - used, max_clamp })
}

/// `sqrt(mean_i arccos(⟨a_i, â_i⟩ / (‖a_i‖·‖â_i‖))²)` over non-degenerate pixels.
pub fn rms_aad(truth: &AbundanceSet, est: &AbundanceSet) -> Result<AngleStat> {
    same_shape(truth, est)?;
    angle_stat(truth.n_pixels(), |i| spectral_angle(truth.pixel(i), est.pixel(i)), true)
}

/// Mean spectral angle between original and reconstructed pixels.
pub fn asam(original: &HsiCube, recon: &HsiCube) -> Result<AngleStat> {
    if (original.rows(), original.cols(), original.bands()) != (recon.rows(), recon.cols(), recon.bands()) {
        bail!(Dimension, "cube shapes differ");
    }
    if original.n_pixels() == 0 {
        bail!(Dimension, "no pixels to evaluate");
    }
    angle_stat(original.n_pixels(), |i| spectral_angle(original.pixel(i), recon.pixel(i)), false)
}

/// Mixing model for reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingModel {
    Linear,
    Gbm(GbmParams),
}

/// Re-mixes estimated abundances with the given endmembers.
pub fn reconstruct(est: &AbundanceSet, m: &EndmemberMatrix, model: &MixingModel) -> Result<HsiCube> {
    match model {
        MixingModel::Linear => mix_pixels(m, est, &GbmParams::linear(est.endmembers())),
        MixingModel::Gbm(g) => mix_pixels(m, est, g),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub endmember_names: Vec<String>,
    pub rmse_per_endmember: Option<Vec<f64>>,
    pub armse: Option<f64>,
    pub rms_aad: Option<f64>,
    pub asam: Option<f64>,
    pub pixels: usize,
    pub aad_degenerate: usize,
    pub sam_degenerate: usize,
}

/// Inputs for [`evaluate`]; every metric whose inputs are present is computed.
#[derive(Debug, Clone, Copy)]
pub struct EvalInputs<'a> {
    pub truth: Option<&'a AbundanceSet>,
    pub estimate: &'a AbundanceSet,
    pub cube: Option<&'a HsiCube>,
    pub endmembers: Option<&'a EndmemberMatrix>,
    pub model: &'a MixingModel,
}

pub fn evaluate(inputs: EvalInputs<'_>) -> Result<EvalReport> {
    let est = inputs.estimate;
    let mut report = EvalReport {
        endmember_names: inputs.endmembers.map(|m| m.names().to_vec()).unwrap_or_else(|| (0..est.endmembers()).map(|j| format!("em{j}")).collect()),
        rmse_per_endmember: None,
        armse: None,
        rms_aad: None,
        asam: None,
        pixels: est.n_pixels(),
        aad_degenerate: 0,
        sam_degenerate: 0,
    };
    if let Some(t) = inputs.truth {
        report.rmse_per_endmember = Some(rmse_per_endmember(t, est)?);
        report.armse = Some(armse(t, est)?);
        let aad = rms_aad(t, est)?;
        report.rms_aad = Some(aad.value);
        report.aad_degenerate = aad.degenerate;
    }
    if let (Some(x), Some(m)) = (inputs.cube, inputs.endmembers) {
        let recon = reconstruct(est, m, inputs.model)?;
        let sam = asam(x, &recon)?;
        report.asam = Some(sam.value);
        report.sam_degenerate = sam.degenerate;
    }
    if report.armse.is_none() && report.asam.is_none() {
        bail!(Config, "nothing to evaluate: need ground-truth abundances, or a cube with endmembers");
    }
    Ok(report)
}

impl EvalReport {
    /// Aligned two-column table: one row per endmember RMSE, then aRMSE,
    /// rmsAAD and aSAM when available.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, f64)> = Vec::new();
        if let Some(r) = &self.rmse_per_endmember {
            rows.extend(self.endmember_names.iter().cloned().zip(r.iter().copied()));
        }
        rows.extend(
            [("aRMSE", self.armse), ("rmsAAD", self.rms_aad), ("aSAM", self.asam)].into_iter().filter_map(|(k, v)| v.map(|v| (String::from(k), v))),
        );
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max("metric".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>12}", "metric", "value");
        let _ = writeln!(out, "{:-<width$}  {:->12}", "", "");
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>12.4e}");
        }
        out
    }
}
