use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code allowance per pipeline stage in the static-data proxy.
pub const CODE_BYTES_PER_STAGE: u64 = 8 * 1024;

/// Target-side memory accounting.
///
/// Static data is a proxy: serialized model parameters, lookup tables and
/// a fixed code allowance per stage. Dynamic data is the high-water mark of
/// the working buffers a stage declares, sized in target representation,
/// plus the configured stack bound.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryLedger {
    pub static_bytes: u64,
    pub stack_bytes: u64,
    current: u64,
    peak: u64,
}

impl MemoryLedger {
    pub fn new(static_bytes: u64, stack_bytes: u64) -> Self {
        MemoryLedger { static_bytes, stack_bytes, current: 0, peak: 0 }
    }

    pub fn alloc(&mut self, bytes: u64) {
        self.current += bytes;
        self.peak = self.peak.max(self.current);
    }

    pub fn free(&mut self, bytes: u64) -> Result<()> {
        if bytes > self.current {
            return Err(Error::State(format!("freeing {bytes} B with only {} B live", self.current)));
        }
        self.current -= bytes;
        Ok(())
    }

    /// Live heap bytes.
    pub fn current(&self) -> u64 {
        self.current
    }

    pub fn heap_peak(&self) -> u64 {
        self.peak
    }

    pub fn dynamic_peak_bytes(&self) -> u64 {
        self.peak + self.stack_bytes
    }

    /// Clear the heap counters before the next run.
    pub fn reset(&mut self) {
        self.current = 0;
        self.peak = 0;
    }
}

pub fn kib(bytes: u64) -> f64 {
    bytes as f64 / 1024.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_water_mark() {
        let mut m = MemoryLedger::new(100, 50);
        m.alloc(10);
        m.alloc(20);
        m.free(25).unwrap();
        m.alloc(5);
        assert_eq!(m.heap_peak(), 30);
        assert_eq!(m.current(), 10);
        assert_eq!(m.dynamic_peak_bytes(), 80);
        assert!(m.free(11).is_err());
        m.reset();
        assert_eq!((m.current(), m.heap_peak(), m.static_bytes), (0, 0, 100));
    }
}
