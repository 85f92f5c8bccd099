use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// One sensor stream: rate, sample width and channel count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignalSpec {
    pub name: String,
    /// Samples per second per channel.
    pub sample_rate: u32,
    /// ADC precision: 16, 24 or 32.
    pub bits_per_sample: u8,
    pub channels: u32,
}

impl SignalSpec {
    pub fn new(name: impl Into<String>, sample_rate: u32, bits_per_sample: u8, channels: u32) -> Result<Self> {
        let spec = SignalSpec { name: name.into(), sample_rate, bits_per_sample, channels };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return domain(format!("signal '{}': sample_rate must be >= 1", self.name));
        }
        if !matches!(self.bits_per_sample, 16 | 24 | 32) {
            return domain(format!("signal '{}': bits_per_sample must be 16, 24 or 32, got {}", self.name, self.bits_per_sample));
        }
        if self.channels == 0 {
            return domain(format!("signal '{}': channels must be >= 1", self.name));
        }
        Ok(())
    }

    /// Bytes on the wire per sample.
    pub fn bytes_per_sample(&self) -> u32 {
        (self.bits_per_sample as u32).div_ceil(8)
    }

    /// Bytes per sample in memory; 24-bit samples are widened to 32 bits.
    pub fn container_bytes(&self) -> u32 {
        if self.bits_per_sample <= 16 {
            2
        } else {
            4
        }
    }

    pub fn max_code(&self) -> i64 {
        (1i64 << (self.bits_per_sample - 1)) - 1
    }

    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.bits_per_sample - 1))
    }

    /// Bytes per second contributed by this stream.
    pub fn bandwidth(&self) -> u64 {
        self.sample_rate as u64 * self.bytes_per_sample() as u64 * self.channels as u64
    }

    /// Samples per channel in a window, if the window holds a whole number of samples.
    pub fn window_samples(&self, window_seconds: f64) -> Result<usize> {
        let exact = self.sample_rate as f64 * window_seconds;
        let n = exact.round();
        if !(window_seconds > 0.0) || (exact - n).abs() > 1e-6 || n < 1.0 {
            return domain(format!(
                "signal '{}': {} s at {} Hz is not a whole number of samples",
                self.name, window_seconds, self.sample_rate
            ));
        }
        Ok(n as usize)
    }
}

/// Aggregate sensor data rate in bytes per second.
pub fn input_bandwidth(specs: &[SignalSpec]) -> Result<u64> {
    if specs.is_empty() {
        return domain("input_bandwidth needs at least one signal");
    }
    let mut total = 0u64;
    for s in specs {
        s.validate()?;
        total += s.bandwidth();
    }
    Ok(total)
}
