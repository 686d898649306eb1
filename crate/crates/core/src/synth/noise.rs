//! White Gaussian noise calibrated to a target SNR.

use rand_distr::{Distribution, StandardNormal};

use crate::cube::HsiCube;
use crate::error::{bail, Result};
use crate::rng::{stream, stream_rng};

/// Adds i.i.d. `N(0, σ²)` noise with `σ² = P_signal / 10^(snr/10)`, where
/// `P_signal` is the mean squared value of the whole cube.
///
/// `None` (or `+∞`) leaves the cube untouched.
pub fn add_gaussian_noise(cube: &HsiCube, snr_db: Option<f64>, seed: u64) -> Result<HsiCube> {
    let snr = match snr_db {
        None => return Ok(cube.clone()),
        Some(s) if s == f64::INFINITY => return Ok(cube.clone()),
        Some(s) if s.is_nan() || s == f64::NEG_INFINITY => bail!(Config, "invalid SNR {s}"),
        Some(s) => s,
    };
    let power = cube.mean_power();
    if power == 0.0 {
        bail!(DegenerateSignal, "cube has zero signal power");
    }
    let sigma = libm::sqrt(power / libm::pow(10.0, snr / 10.0));
    let mut rng = stream_rng(seed, stream::NOISE);
    let data = cube
        .data()
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sigma * z
        })
        .collect();
    HsiCube::new(cube.rows(), cube.cols(), cube.bands(), data)
}

/// `10·log10(P_signal / P_noise)` with the noise taken as `noisy − clean`.
pub fn measured_snr_db(clean: &HsiCube, noisy: &HsiCube) -> Result<f64> {
    if clean.data().len() != noisy.data().len() {
        bail!(Dimension, "cube sizes differ");
    }
    let n = clean.data().len() as f64;
    let noise: f64 = clean.data().iter().zip(noisy.data()).map(|(c, x)| (x - c) * (x - c)).sum::<f64>() / n;
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(clean.mean_power() / noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn flat(v: f64) -> HsiCube {
        HsiCube::new(20, 20, 8, vec![v; 3200]).unwrap()
    }

    #[test]
    fn no_noise_sentinels() {
        let c = flat(0.4);
        assert_eq!(add_gaussian_noise(&c, None, 1).unwrap(), c);
        assert_eq!(add_gaussian_noise(&c, Some(f64::INFINITY), 1).unwrap(), c);
    }

    #[test]
    fn zero_cube_is_degenerate() {
        assert!(matches!(add_gaussian_noise(&flat(0.0), Some(20.0), 1), Err(crate::Error::DegenerateSignal(_))));
    }

    #[test]
    fn deterministic_noise_field() {
        let c = flat(0.4);
        assert_eq!(add_gaussian_noise(&c, Some(10.0), 3).unwrap(), add_gaussian_noise(&c, Some(10.0), 3).unwrap());
        assert_ne!(add_gaussian_noise(&c, Some(10.0), 3).unwrap(), add_gaussian_noise(&c, Some(10.0), 4).unwrap());
    }

    #[test]
    fn million_entry_calibration() {
        let data = (0..1_000_000).map(|i| 0.2 + 0.6 * ((i % 997) as f64 / 997.0)).collect();
        let clean = HsiCube::new(100, 100, 100, data).unwrap();
        let noisy = add_gaussian_noise(&clean, Some(20.0), 42).unwrap();
        let snr = measured_snr_db(&clean, &noisy).unwrap();
        assert!((snr - 20.0).abs() <= 0.2, "measured {snr}");
    }
}
