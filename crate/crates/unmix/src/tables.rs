//! CSV files: endmember libraries, loss histories and per-pixel diagnostics.

use std::path::Path;

use anyhow::{ensure, Context, Result};
use unmix_core::baselines::{FclsDiagnostics, SunsalDiagnostics};
use unmix_core::gan::LossRecord;
use unmix_core::EndmemberMatrix;

/// Header row of names, then one row per band.
pub fn read_endmembers(path: &Path) -> Result<EndmemberMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    ensure!(!names.is_empty(), "{} has no endmember columns", path.display());
    let mut data = Vec::new();
    let mut bands = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ensure!(rec.len() == names.len(), "{} row {} has {} values for {} endmembers", path.display(), line + 2, rec.len(), names.len());
        for v in rec.iter() {
            data.push(v.parse::<f64>().with_context(|| format!("{} row {}: bad number {v:?}", path.display(), line + 2))?);
        }
        bands += 1;
    }
    Ok(EndmemberMatrix::new(bands, names.len(), data, names)?)
}

pub fn write_endmembers(path: &Path, m: &EndmemberMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(m.names())?;
    for b in 0..m.bands() {
        w.write_record((0..m.endmembers()).map(|j| m.get(b, j).to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_loss_history(path: &Path, history: &[LossRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "d_loss", "g_loss", "l1_term"])?;
    for r in history {
        w.write_record([r.step.to_string(), r.d_loss.map(|d| d.to_string()).unwrap_or_default(), r.g_loss.to_string(), r.l1_term.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_loss_history(path: &Path) -> Result<Vec<LossRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let d = rec.get(1).unwrap_or("");
            Ok(LossRecord {
                step: rec.get(0).unwrap_or("").parse()?,
                d_loss: if d.is_empty() { None } else { Some(d.parse()?) },
                g_loss: rec.get(2).unwrap_or("").parse()?,
                l1_term: rec.get(3).unwrap_or("").parse()?,
            })
        })
        .collect()
}

pub fn write_fcls_diagnostics(path: &Path, diags: &[FclsDiagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["pixel", "iterations", "kkt_residual"])?;
    for (i, d) in diags.iter().enumerate() {
        w.write_record([i.to_string(), d.iterations.to_string(), d.kkt_residual.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sunsal_diagnostics(path: &Path, diags: &[SunsalDiagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["pixel", "iterations", "converged", "primal", "dual"])?;
    for (i, d) in diags.iter().enumerate() {
        w.write_record([i.to_string(), d.iterations.to_string(), d.converged.to_string(), d.primal.to_string(), d.dual.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the window-size sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub window: usize,
    pub armse: f64,
    pub rms_aad: f64,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["window", "armse", "rms_aad"])?;
    for r in rows {
        w.write_record([r.window.to_string(), r.armse.to_string(), r.rms_aad.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endmember_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = EndmemberMatrix::from_columns(&[vec![0.1, 0.2, 1.0 / 3.0], vec![0.5, 0.25, 0.0]], vec!["soil".into(), "water".into()]).unwrap();
        write_endmembers(&p, &m).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("soil,water\n"));
        assert_eq!(read_endmembers(&p).unwrap(), m);
    }

    #[test]
    fn malformed_endmember_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "a,b\n0.1,x\n").unwrap();
        assert!(read_endmembers(&p).is_err());
        std::fs::write(&p, "a,b\n0.1,-0.2\n").unwrap();
        assert!(read_endmembers(&p).is_err());
    }

    #[test]
    fn loss_history_round_trip_with_missing_discriminator() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("loss.csv");
        let h = vec![
            LossRecord { step: 0, d_loss: Some(0.5), g_loss: 1.25, l1_term: 0.1 },
            LossRecord { step: 1, d_loss: None, g_loss: 1.0, l1_term: 0.1 },
        ];
        write_loss_history(&p, &h).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("step,d_loss,g_loss,l1_term\n0,0.5,1.25,0.1\n1,,1,0.1\n"), "{text}");
        assert_eq!(read_loss_history(&p).unwrap(), h);
    }
}
