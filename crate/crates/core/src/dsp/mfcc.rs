use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fft::fft;
use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

pub const LOG_FLOOR: f64 = 1e-10;

/// HTK mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    /// Frame length in samples; a power of two.
    pub frame: usize,
    /// Hop in samples; `None` means half a frame.
    #[serde(default)]
    pub hop: Option<usize>,
    pub n_mels: usize,
    pub n_coeffs: usize,
    #[serde(default)]
    pub f_min: f64,
    /// Upper filterbank edge; `None` means Nyquist.
    #[serde(default)]
    pub f_max: Option<f64>,
}

impl MfccConfig {
    pub fn new(frame: usize, n_mels: usize, n_coeffs: usize) -> Self {
        Self { frame, hop: None, n_mels, n_coeffs, f_min: 0.0, f_max: None }
    }

    pub fn hop(&self) -> usize {
        self.hop.unwrap_or(self.frame / 2).max(1)
    }
}

/// Sparse triangular filter: first bin and weights.
struct MelFilter {
    start: usize,
    weights: Vec<f64>,
}

fn filterbank(cfg: &MfccConfig, sample_rate: f64) -> Vec<MelFilter> {
    let n_bins = cfg.frame / 2 + 1;
    let f_max = cfg.f_max.unwrap_or(sample_rate / 2.0);
    let (m_lo, m_hi) = (hz_to_mel(cfg.f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..cfg.n_mels + 2).map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (cfg.n_mels + 1) as f64)).collect();
    let bin_hz = sample_rate / cfg.frame as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let mut start = None;
            let mut weights = Vec::new();
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f <= mid {
                    (f - lo) / (mid - lo)
                } else if f > mid && f < hi {
                    (hi - f) / (hi - mid)
                } else {
                    0.0
                };
                if w > 0.0 {
                    start.get_or_insert(k);
                    weights.push(w);
                } else if start.is_some() {
                    break;
                }
            }
            MelFilter { start: start.unwrap_or(0), weights }
        })
        .collect()
}

/// Mel-frequency cepstral coefficients, one row per frame.
///
/// Periodic Hann window, power spectrum, triangular HTK filterbank, natural
/// log floored at [`LOG_FLOOR`] and an unscaled DCT-II.
pub fn mfcc<T: Real>(audio: &[T], sample_rate: f64, cfg: &MfccConfig, ops: &mut OpCounters) -> Result<Vec<Vec<T>>> {
    let n = cfg.frame;
    if n == 0 || !n.is_power_of_two() {
        return domain(format!("frame {n} is not a power of two"));
    }
    if n > audio.len() {
        return domain(format!("frame {n} longer than audio ({} samples)", audio.len()));
    }
    if cfg.n_mels == 0 || cfg.n_mels > n / 2 {
        return domain(format!("{} mel bands do not fit a {n}-point frame", cfg.n_mels));
    }
    if cfg.n_coeffs == 0 || cfg.n_coeffs > cfg.n_mels {
        return domain(format!("{} coefficients from {} mel bands", cfg.n_coeffs, cfg.n_mels));
    }
    if !(sample_rate > 0.0) {
        return domain("sample rate must be positive");
    }
    let bank = filterbank(cfg, sample_rate);
    let window: Vec<T> = (0..n).map(|i| T::from_f64(0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())).collect();
    let dct: Vec<Vec<T>> = (0..cfg.n_coeffs)
        .map(|k| (0..cfg.n_mels).map(|m| T::from_f64((PI * k as f64 * (m as f64 + 0.5) / cfg.n_mels as f64).cos())).collect())
        .collect();
    let floor = T::from_f64(LOG_FLOOR);
    let bank_taps: usize = bank.iter().map(|f| f.weights.len()).sum();

    let hop = cfg.hop();
    let n_frames = 1 + (audio.len() - n) / hop;
    let mut out = Vec::with_capacity(n_frames);
    for fi in 0..n_frames {
        let seg: Vec<T> = audio[fi * hop..fi * hop + n].iter().zip(&window).map(|(&a, &w)| a * w).collect();
        ops.mul::<T>(n as u64);
        let spec = fft(&seg, n, ops)?;
        let power: Vec<T> = spec.bins[..=n / 2].iter().map(|c| c.re * c.re + c.im * c.im).collect();
        ops.mul::<T>(2 * power.len() as u64);
        let logmel: Vec<T> = bank
            .iter()
            .map(|f| {
                let e = f.weights.iter().enumerate().fold(T::zero(), |acc, (j, &w)| acc + T::from_f64(w) * power[f.start + j]);
                e.max_of(floor).ln()
            })
            .collect();
        ops.mac::<T>(bank_taps as u64);
        ops.mul::<T>(cfg.n_mels as u64 * T::TRANSCENDENTAL_COST);
        ops.branch(cfg.n_mels as u64);
        let coeffs: Vec<T> = dct.iter().map(|row| row.iter().zip(&logmel).fold(T::zero(), |a, (&c, &l)| a + c * l)).collect();
        ops.mac::<T>((cfg.n_coeffs * cfg.n_mels) as u64);
        out.push(coeffs);
    }
    Ok(out)
}
