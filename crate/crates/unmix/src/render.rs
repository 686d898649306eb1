//! 8-bit grayscale renderings of abundance and attention maps.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Scales `[0, 1]` to `0..=255` rounding half up; out-of-range values are
/// clipped and counted.
pub fn to_gray(values: &[f64]) -> (Vec<u8>, usize) {
    let mut clipped = 0;
    let px = values
        .iter()
        .map(|&v| {
            if !(0.0..=1.0).contains(&v) {
                clipped += 1;
            }
            (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
        })
        .collect();
    (px, clipped)
}

/// Binary PGM (`P5`).
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Writes `map` (row-major, `rows × cols`) as `<stem>.pgm` and, if asked,
/// `<stem>.png`; returns the files written and the number of clipped values.
pub fn render_map(dir: &Path, stem: &str, rows: usize, cols: usize, map: &[f64], png: bool) -> Result<(Vec<PathBuf>, usize)> {
    let (pixels, clipped) = to_gray(map);
    let pgm = dir.join(format!("{stem}.pgm"));
    std::fs::write(&pgm, encode_pgm(cols, rows, &pixels)).with_context(|| format!("writing {}", pgm.display()))?;
    let mut written = vec![pgm];
    if png {
        let path = dir.join(format!("{stem}.png"));
        let img = image::GrayImage::from_raw(cols as u32, rows as u32, pixels).context("image size overflow")?;
        img.save(&path).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok((written, clipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_rounding() {
        assert_eq!(to_gray(&[0.5]).0, vec![128]);
        assert_eq!(to_gray(&[0.0, 1.0, 0.25]).0, vec![0, 255, 64]);
        let (px, clipped) = to_gray(&[-0.1, 1.5, 0.2]);
        assert_eq!((px, clipped), (vec![0, 255, 51], 2));
    }

    #[test]
    fn pgm_layout_and_png_copy() {
        let dir = tempfile::tempdir().unwrap();
        let (files, _) = render_map(dir.path(), "m", 2, 3, &[0.5; 6], true).unwrap();
        let bytes = std::fs::read(&files[0]).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert!(bytes[11..].iter().all(|&b| b == 128));
        let png = image::open(&files[1]).unwrap().into_luma8();
        assert_eq!((png.width(), png.height()), (3, 2));
        assert!(png.pixels().all(|p| p.0[0] == 128));
    }
}
