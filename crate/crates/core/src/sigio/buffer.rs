use serde::{Deserialize, Serialize};

use super::SignalSpec;
use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Acquired ADC codes for one window, `channels x window_samples`.
///
/// Codes are kept in 32-bit containers whatever the sensor precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBuffer {
    pub spec: SignalSpec,
    pub data: Vec<Vec<i32>>,
    pub window_seconds: f64,
}

impl SampleBuffer {
    pub fn new(spec: SignalSpec, data: Vec<Vec<i32>>, window_seconds: f64) -> Result<Self> {
        spec.validate()?;
        let n = spec.window_samples(window_seconds)?;
        if data.len() != spec.channels as usize {
            return domain(format!("signal '{}': expected {} channels, got {}", spec.name, spec.channels, data.len()));
        }
        for (i, ch) in data.iter().enumerate() {
            if ch.len() != n {
                return domain(format!("signal '{}': channel {i} has {} samples, expected {n}", spec.name, ch.len()));
            }
            if let Some(v) = ch.iter().find(|&&v| (v as i64) < spec.min_code() || (v as i64) > spec.max_code()) {
                return Err(crate::Error::Range(format!("signal '{}': code {v} outside {}-bit range", spec.name, spec.bits_per_sample)));
            }
        }
        Ok(SampleBuffer { spec, data, window_seconds })
    }

    pub fn zeros(spec: SignalSpec, window_seconds: f64) -> Result<Self> {
        let n = spec.window_samples(window_seconds)?;
        let data = vec![vec![0; n]; spec.channels as usize];
        SampleBuffer::new(spec, data, window_seconds)
    }

    pub fn channels(&self) -> usize {
        self.data.len()
    }

    pub fn window_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    /// In-memory footprint of the codes on the target.
    pub fn container_bytes(&self) -> usize {
        self.channels() * self.window_samples() * self.spec.container_bytes() as usize
    }

    /// Channel scaled so the ADC full scale maps to `[-1, 1)`.
    pub fn normalized<S: Scalar>(&self, channel: usize) -> Vec<S> {
        let fs = (self.spec.bits_per_sample as f64 - 1.0).exp2();
        self.data[channel].iter().map(|&c| S::from_f64(c as f64 / fs)).collect()
    }

    /// Samples `[start, end)` of every channel as a new buffer.
    pub fn slice(&self, start: usize, end: usize) -> Result<SampleBuffer> {
        if start >= end || end > self.window_samples() {
            return domain(format!("invalid slice {start}..{end}"));
        }
        let secs = (end - start) as f64 / self.spec.sample_rate as f64;
        let data = self.data.iter().map(|c| c[start..end].to_vec()).collect();
        SampleBuffer::new(self.spec.clone(), data, secs)
    }
}
