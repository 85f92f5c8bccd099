use super::fft::{fft, SpectralResult};
use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

/// One-sided periodogram `|X|^2 / (n * fs)` with doubled interior bins.
///
/// Returns `n / 2 + 1` bins spaced `fs / n` apart.
pub fn power_spectral_density<T: Real>(x: &[T], sample_rate: f64, n: usize, ops: &mut OpCounters) -> Result<SpectralResult<T>> {
    if !(sample_rate > 0.0) {
        return domain(format!("sample rate must be positive, got {sample_rate}"));
    }
    let spec = fft(x, n, ops)?;
    let scale = T::from_f64(1.0 / (n as f64 * sample_rate));
    let two = T::from_f64(2.0);
    let bins = (0..=n / 2)
        .map(|k| {
            let c = spec.bins[k];
            let p = (c.re * c.re + c.im * c.im) * scale;
            if k == 0 || 2 * k == n {
                p
            } else {
                p * two
            }
        })
        .collect::<Vec<_>>();
    ops.mul::<T>(3 * bins.len() as u64);
    Ok(SpectralResult { bins, resolution: sample_rate / n as f64, n_points: n, scale_log2: 0 })
}

/// Integrated power in `[lo_hz, hi_hz)`.
pub fn band_power<T: Real>(psd: &SpectralResult<T>, lo_hz: f64, hi_hz: f64) -> f64 {
    psd.bins
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * psd.resolution;
            f >= lo_hz && f < hi_hz
        })
        .map(|(_, p)| p.to_f64())
        .sum::<f64>()
        * psd.resolution
}

/// Shannon entropy of the normalized PSD divided by `ln(n_bins)`, in `[0, 1]`.
pub fn spectral_entropy<T: Real>(psd: &SpectralResult<T>, ops: &mut OpCounters) -> Result<f64> {
    let p: Vec<f64> = psd.bins.iter().map(|v| v.to_f64()).collect();
    if p.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return domain("PSD has negative or non-finite bins");
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return domain("PSD has no positive bin");
    }
    if p.len() < 2 {
        return Ok(0.0);
    }
    let h: f64 = p
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| {
            let q = v / total;
            -q * q.ln()
        })
        .sum();
    ops.mul::<T>(2 * p.len() as u64);
    ops.branch(p.len() as u64);
    Ok((h / (p.len() as f64).ln()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn res(bins: Vec<f64>) -> SpectralResult<f64> {
        let n = bins.len();
        SpectralResult { bins, resolution: 1.0, n_points: n, scale_log2: 0 }
    }

    #[test]
    fn zero_signal() {
        let p = power_spectral_density(&[0.0f64; 32], 100.0, 32, &mut OpCounters::new()).unwrap();
        assert_eq!(p.bins.len(), 17);
        assert!(p.bins.iter().all(|v| *v == 0.0));
        assert_eq!(p.resolution, 100.0 / 32.0);
    }

    #[test]
    fn sine_concentrates_at_bin() {
        let (n, k, fs) = (128usize, 10usize, 64.0);
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * (k * t) as f64 / n as f64).sin()).collect();
        let p = power_spectral_density(&x, fs, n, &mut OpCounters::new()).unwrap();
        let total: f64 = p.bins.iter().sum::<f64>() * p.resolution;
        assert!((total - 0.5).abs() < 1e-9);
        assert!((p.bins[k] * p.resolution - 0.5).abs() < 1e-9);
        assert!((band_power(&p, 4.0, 6.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn parseval_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [16usize, 64, 512] {
            let x: Vec<f32> = (0..n).map(|_| rng.random_range(-2.0f32..2.0)).collect();
            let p = power_spectral_density(&x, 250.0, n, &mut OpCounters::new()).unwrap();
            let lhs: f64 = p.bins.iter().map(|v| *v as f64).sum::<f64>() * p.resolution;
            let ms: f64 = x.iter().map(|v| (*v as f64).powi(2)).sum::<f64>() / n as f64;
            assert!((lhs - ms).abs() / ms < 1e-5, "n={n}");
        }
    }

    #[test]
    fn entropy_cases() {
        let mut c = OpCounters::new();
        assert_eq!(spectral_entropy(&res(vec![0.0, 3.0, 0.0, 0.0]), &mut c).unwrap(), 0.0);
        assert!((spectral_entropy(&res(vec![2.0; 8]), &mut c).unwrap() - 1.0).abs() < 1e-12);
        let two = spectral_entropy(&res(vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]), &mut c).unwrap();
        assert!((two - 2f64.ln() / 7f64.ln()).abs() < 1e-12);
        assert!(spectral_entropy(&res(vec![0.0; 4]), &mut c).is_err());
        assert!(spectral_entropy(&res(vec![1.0, -1.0]), &mut c).is_err());
    }
}
