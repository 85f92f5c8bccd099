use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::AppConfig;
use super::AppId;
use crate::error::{Error, Result};
use crate::infer::{CnnShape, Tensor2};
use crate::sigio::{generate_synthetic, load_signal, store_signal, SampleBuffer, SignalFormat, SignalSpec, SynthKind};
use crate::train::SampleBatch;

/// One acquisition window: a buffer per configured signal, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowInput {
    pub buffers: Vec<SampleBuffer>,
}

impl WindowInput {
    pub fn check(&self, cfg: &AppConfig) -> Result<()> {
        if self.buffers.len() != cfg.signals.len() {
            return Err(Error::Format(format!("{} expects {} signals, got {}", cfg.app, cfg.signals.len(), self.buffers.len())));
        }
        for (b, s) in self.buffers.iter().zip(&cfg.signals) {
            if &b.spec != s {
                return Err(Error::Format(format!("signal '{}' does not match the configured spec", b.spec.name)));
            }
            if (b.window_seconds - cfg.window_seconds).abs() > 1e-9 {
                return Err(Error::Format(format!(
                    "signal '{}' covers {} s, window is {} s",
                    s.name, b.window_seconds, cfg.window_seconds
                )));
            }
        }
        Ok(())
    }

    /// Read `<dir>/<signal>.csv` for every configured signal.
    pub fn load_dir(cfg: &AppConfig, dir: &Path) -> Result<Self> {
        let buffers = cfg
            .signals
            .iter()
            .map(|s| load_signal(&dir.join(format!("{}.csv", s.name)), SignalFormat::Csv, s, cfg.window_seconds))
            .collect::<Result<Vec<_>>>()?;
        let w = WindowInput { buffers };
        w.check(cfg)?;
        Ok(w)
    }

    pub fn store_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for b in &self.buffers {
            store_signal(b, &dir.join(format!("{}.csv", b.spec.name)), SignalFormat::Csv)?;
        }
        Ok(())
    }
}

fn gen(spec: &SignalSpec, kind: SynthKind, w: f64, seed: u64) -> Result<SampleBuffer> {
    generate_synthetic(spec, &kind, w, seed)
}

/// Independent non-Gaussian sources mixed onto every electrode.
fn semg_mixture(spec: &SignalSpec, w: f64, seed: u64) -> Result<SampleBuffer> {
    let n = spec.window_samples(w)?;
    let fs = spec.sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_src = 8;
    let sources: Vec<Vec<f64>> = (0..n_src)
        .map(|k| {
            let f = 20.0 + 17.0 * k as f64;
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let ph = 2.0 * PI * f * t;
                    match k % 4 {
                        0 => ph.sin(),
                        1 => ph.sin().signum(),
                        2 => 2.0 * ((f * t).fract()) - 1.0,
                        _ => (ph.sin()).powi(3) * 1.8,
                    }
                })
                .collect()
        })
        .collect();
    let mix: Vec<Vec<f64>> = (0..spec.channels).map(|_| (0..n_src).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let noise = Normal::new(0.0, 0.01).map_err(|e| Error::Domain(e.to_string()))?;
    let scale = 0.08 * spec.max_code() as f64;
    let data = mix
        .iter()
        .map(|row| {
            (0..n)
                .map(|i| {
                    let v: f64 = row.iter().zip(&sources).map(|(a, s)| a * s[i]).sum::<f64>() + noise.sample(&mut rng);
                    (v * scale).round().clamp(spec.min_code() as f64, spec.max_code() as f64) as i32
                })
                .collect()
        })
        .collect();
    SampleBuffer::new(spec.clone(), data, w)
}

/// Deterministic synthetic window for the configured application.
pub fn synthetic_input(cfg: &AppConfig, seed: u64) -> Result<WindowInput> {
    let w = cfg.window_seconds;
    let sig =
        |i: usize| -> Result<&SignalSpec> { cfg.signals.get(i).ok_or_else(|| Error::Config(format!("{} needs signal {i}", cfg.app))) };
    let full = |s: &SignalSpec, frac: f64| frac * s.max_code() as f64;
    let buffers = match cfg.app {
        AppId::Hcl | AppId::SeizDetSvm => {
            let s = sig(0)?;
            let bpm = if cfg.app == AppId::Hcl { 60.0 } else { 72.0 };
            vec![gen(s, SynthKind::EcgLike { bpm, amplitude: full(s, 0.4), noise_std: full(s, 0.002) }, w, seed)?]
        }
        AppId::SeizDetCnn => {
            let s = sig(0)?;
            vec![gen(
                s,
                SynthKind::SinePlusNoise { freq_hz: 3.0, amplitude: full(s, 0.1), noise_std: full(s, 0.03), offset: 0.0 },
                w,
                seed,
            )?]
        }
        AppId::Cwm => {
            let s = sig(0)?;
            vec![gen(
                s,
                SynthKind::SinePlusNoise { freq_hz: 10.0, amplitude: full(s, 0.1), noise_std: full(s, 0.02), offset: 0.0 },
                w,
                seed,
            )?]
        }
        AppId::Gcl => vec![semg_mixture(sig(0)?, w, seed)?],
        AppId::CoughDet => {
            let (a, m) = (sig(0)?, sig(1)?);
            vec![
                gen(
                    a,
                    SynthKind::SinePlusNoise { freq_hz: 440.0, amplitude: full(a, 0.2), noise_std: full(a, 0.05), offset: 0.0 },
                    w,
                    seed,
                )?,
                gen(
                    m,
                    SynthKind::SinePlusNoise { freq_hz: 1.5, amplitude: full(m, 0.1), noise_std: full(m, 0.01), offset: 0.0 },
                    w,
                    seed ^ 1,
                )?,
            ]
        }
        AppId::Ecl => {
            let (p, g, t) = (sig(0)?, sig(1)?, sig(2)?);
            vec![
                gen(
                    p,
                    SynthKind::SinePlusNoise { freq_hz: 1.2, amplitude: full(p, 0.3), noise_std: full(p, 0.02), offset: full(p, 0.3) },
                    w,
                    seed,
                )?,
                gen(
                    g,
                    SynthKind::SinePlusNoise { freq_hz: 0.1, amplitude: full(g, 0.1), noise_std: full(g, 0.01), offset: full(g, 0.4) },
                    w,
                    seed ^ 1,
                )?,
                gen(
                    t,
                    SynthKind::SinePlusNoise { freq_hz: 0.05, amplitude: full(t, 0.05), noise_std: full(t, 0.005), offset: full(t, 0.5) },
                    w,
                    seed ^ 2,
                )?,
            ]
        }
        AppId::BpFree => vec![],
    };
    let input = WindowInput { buffers };
    input.check(cfg)?;
    Ok(input)
}

/// Pre-recorded labelled samples for on-device training: positives carry
/// a strong rhythmic component, negatives only background noise.
pub fn training_batch(shape: &CnnShape, n: usize, seed: u64) -> Result<SampleBatch<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(99);
    let noise = Normal::new(0.0, 0.05).map_err(|e| Error::Domain(e.to_string()))?;
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for s in 0..n {
        let positive = s % 2 == 1;
        let data: Vec<f64> = (0..shape.input_channels * shape.input_len)
            .map(|i| {
                let (c, t) = (i / shape.input_len, (i % shape.input_len) as f64 / 256.0);
                let rhythm = if positive { 0.4 * (2.0 * PI * 5.0 * t + 0.3 * c as f64).sin() } else { 0.0 };
                rhythm + noise.sample(&mut rng)
            })
            .collect();
        inputs.push(Tensor2::new(shape.input_channels, shape.input_len, data)?);
        labels.push(positive);
    }
    let b = SampleBatch { inputs, labels };
    b.validate()?;
    Ok(b)
}
