use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{SampleBuffer, SignalSpec};
use crate::error::{domain, Error, Result};

/// Waveform families for synthetic sensor data. Amplitudes are in ADC codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    Sine {
        freq_hz: f64,
        amplitude: f64,
        #[serde(default)]
        offset: f64,
    },
    SinePlusNoise {
        freq_hz: f64,
        amplitude: f64,
        noise_std: f64,
        #[serde(default)]
        offset: f64,
    },
    /// P-QRS-T complexes at a fixed rate over a slow baseline wander.
    EcgLike {
        bpm: f64,
        amplitude: f64,
        noise_std: f64,
    },
    Constant {
        value: f64,
    },
}

impl SynthKind {
    fn params(&self) -> Vec<f64> {
        match *self {
            SynthKind::Sine { freq_hz, amplitude, offset } => vec![freq_hz, amplitude, offset],
            SynthKind::SinePlusNoise { freq_hz, amplitude, noise_std, offset } => {
                vec![freq_hz, amplitude, noise_std, offset]
            }
            SynthKind::EcgLike { bpm, amplitude, noise_std } => vec![bpm, amplitude, noise_std],
            SynthKind::Constant { value } => vec![value],
        }
    }

    /// Largest absolute code the noiseless waveform can reach.
    fn peak(&self) -> f64 {
        match *self {
            SynthKind::Sine { amplitude, offset, .. } | SynthKind::SinePlusNoise { amplitude, offset, .. } => {
                offset.abs() + amplitude.abs()
            }
            SynthKind::EcgLike { amplitude, .. } => amplitude.abs() * 1.15,
            SynthKind::Constant { value } => value.abs(),
        }
    }
}

// (relative time [s], amplitude, width [s]) of the P, Q, R, S and T waves.
const ECG_WAVES: [(f64, f64, f64); 5] =
    [(-0.20, 0.12, 0.025), (-0.03, -0.10, 0.008), (0.0, 1.0, 0.010), (0.03, -0.20, 0.008), (0.25, 0.30, 0.040)];

fn ecg_value(t: f64, bpm: f64) -> f64 {
    let rr = 60.0 / bpm;
    // beats sit at (k + 0.5) * rr
    let k = (t / rr - 0.5).round();
    let mut v = 0.05 * (2.0 * PI * 0.3 * t).sin();
    for dk in [-1.0, 0.0, 1.0] {
        let center = (k + dk + 0.5) * rr;
        for &(dt, a, w) in &ECG_WAVES {
            let z = (t - center - dt) / w;
            v += a * (-0.5 * z * z).exp();
        }
    }
    v
}

/// Deterministic synthetic window for `spec`.
///
/// Channel `c` draws its noise from stream `c` of a ChaCha generator seeded
/// with `seed`; sine channels are phase-shifted by `0.7 c` radians and ECG
/// channels attenuated by `15 %` per lead.
pub fn generate_synthetic(spec: &SignalSpec, kind: &SynthKind, window_seconds: f64, seed: u64) -> Result<SampleBuffer> {
    spec.validate()?;
    if kind.params().iter().any(|p| !p.is_finite()) {
        return domain("synthetic parameters must be finite");
    }
    let n = spec.window_samples(window_seconds)?;
    let (lo, hi) = (spec.min_code() as f64, spec.max_code() as f64);
    if kind.peak() > hi {
        return Err(Error::Range(format!("synthetic peak {} exceeds the {}-bit range", kind.peak(), spec.bits_per_sample)));
    }
    if let SynthKind::EcgLike { bpm, .. } = kind {
        if *bpm <= 0.0 {
            return domain("bpm must be positive");
        }
    }
    let fs = spec.sample_rate as f64;
    let mut data = Vec::with_capacity(spec.channels as usize);
    for c in 0..spec.channels as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let noise_std = match *kind {
            SynthKind::SinePlusNoise { noise_std, .. } | SynthKind::EcgLike { noise_std, .. } => noise_std,
            _ => 0.0,
        };
        let noise = Normal::new(0.0, noise_std.abs()).map_err(|e| Error::Domain(e.to_string()))?;
        let phase = 0.7 * c as f64;
        let ch: Vec<i32> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let clean = match *kind {
                    SynthKind::Sine { freq_hz, amplitude, offset } | SynthKind::SinePlusNoise { freq_hz, amplitude, offset, .. } => {
                        offset + amplitude * (2.0 * PI * freq_hz * t + phase).sin()
                    }
                    SynthKind::EcgLike { bpm, amplitude, .. } => amplitude * (1.0 - 0.15 * c as f64) * ecg_value(t, bpm),
                    SynthKind::Constant { value } => value,
                };
                let v = if noise_std > 0.0 { clean + noise.sample(&mut rng) } else { clean };
                v.round().clamp(lo, hi) as i32
            })
            .collect();
        data.push(ch);
    }
    SampleBuffer::new(spec.clone(), data, window_seconds)
}
