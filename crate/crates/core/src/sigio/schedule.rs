use serde::{Deserialize, Serialize};

use super::{input_bandwidth, SignalSpec};
use crate::error::{domain, Result};

/// RAM buffer of the external ADC.
pub const DEFAULT_BUFFER_BYTES: u32 = 768;

/// When the ADC buffer fills during one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSchedule {
    pub buffer_bytes: u32,
    /// Time to fill one buffer, capped at the window length.
    pub batch_period: f64,
    pub batches_per_window: u32,
    pub window_seconds: f64,
    pub window_bytes: u64,
    pub bandwidth: u64,
}

/// Buffer-fill schedule for all `specs` sharing one ADC buffer.
pub fn schedule_acquisition(specs: &[SignalSpec], window_seconds: f64, buffer_bytes: u32) -> Result<AcquisitionSchedule> {
    let bandwidth = input_bandwidth(specs)?;
    if bandwidth == 0 {
        return domain("zero input bandwidth");
    }
    if !(window_seconds > 0.0) || !window_seconds.is_finite() {
        return domain("window must be positive");
    }
    if buffer_bytes == 0 {
        return domain("buffer must hold at least one byte");
    }
    let window_bytes = (bandwidth as f64 * window_seconds).round() as u64;
    let batches = window_bytes.div_ceil(buffer_bytes as u64).max(1) as u32;
    let batch_period = (buffer_bytes as f64 / bandwidth as f64).min(window_seconds);
    Ok(AcquisitionSchedule { buffer_bytes, batch_period, batches_per_window: batches, window_seconds, window_bytes, bandwidth })
}

impl AcquisitionSchedule {
    /// Buffer-ready instants within the window; the last one is the window end.
    pub fn fill_instants(&self) -> Vec<f64> {
        (1..=self.batches_per_window).map(|k| (k as f64 * self.batch_period).min(self.window_seconds)).collect()
    }
}
