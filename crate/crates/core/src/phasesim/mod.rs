//! Idle / acquisition / processing timeline of one acquisition window and
//! the duty cycle derived from it.
//!
//! Processing of a window runs at the start of the next cycle; DMA
//! acquisition ends at each buffer-fill instant and the core sleeps the
//! rest of the time.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::sigio::AcquisitionSchedule;

/// SPI transfer rate from the ADC buffer, bytes per second.
pub const DEFAULT_SPI_BYTES_PER_S: f64 = 1.0e6;
pub const REFERENCE_CLOCK_HZ: f64 = 80.0e6;
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Acquisition,
    Processing,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Acquisition => "acquisition",
            Phase::Processing => "processing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSegment {
    pub phase: Phase,
    pub start_s: f64,
    pub duration_s: f64,
    /// Core cycles, for processing segments.
    pub cycles: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimeline {
    pub segments: Vec<PhaseSegment>,
    pub window_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub spi_bytes_per_s: f64,
    /// Split processing evenly over the batches, each chunk following its
    /// buffer fill, instead of one block per window.
    pub per_batch_processing: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { spi_bytes_per_s: DEFAULT_SPI_BYTES_PER_S, per_batch_processing: false }
    }
}

/// One window with the default SPI rate and end-of-window processing.
pub fn simulate_cycle(schedule: &AcquisitionSchedule, processing_cycles: u64, clock_hz: f64) -> Result<PhaseTimeline> {
    simulate_cycle_with(schedule, processing_cycles, clock_hz, &SimOptions::default())
}

pub fn simulate_cycle_with(
    schedule: &AcquisitionSchedule,
    processing_cycles: u64,
    clock_hz: f64,
    opts: &SimOptions,
) -> Result<PhaseTimeline> {
    if !(clock_hz > 0.0) || !clock_hz.is_finite() {
        return domain(format!("clock must be positive, got {clock_hz}"));
    }
    if !(opts.spi_bytes_per_s > 0.0) {
        return domain("SPI throughput must be positive");
    }
    let w = schedule.window_seconds;
    let proc_s = processing_cycles as f64 / clock_hz;
    if proc_s > w * (1.0 + 1e-12) {
        return Err(Error::RealTime { processing_s: proc_s, window_s: w });
    }
    let fills = schedule.fill_instants();
    let nb = fills.len().max(1);

    // busy intervals of the core, sorted
    let mut busy: Vec<(f64, f64, u64)> = Vec::new();
    if opts.per_batch_processing && nb > 1 {
        let chunk = proc_s / nb as f64;
        if chunk > schedule.batch_period * (1.0 + 1e-12) {
            return Err(Error::RealTime { processing_s: chunk, window_s: schedule.batch_period });
        }
        let base = processing_cycles / nb as u64;
        let extra = processing_cycles % nb as u64;
        // the chunk for the final batch wraps to the start of the cycle
        busy.push((0.0, chunk, base + extra));
        for &f in &fills[..nb - 1] {
            busy.push((f, (f + chunk).min(w), base));
        }
    } else if proc_s > 0.0 {
        busy.push((0.0, proc_s.min(w), processing_cycles));
    }

    let mut acq: Vec<(f64, f64)> = Vec::new();
    let mut remaining = schedule.window_bytes;
    for &f in &fills {
        let bytes = remaining.min(schedule.buffer_bytes as u64);
        remaining -= bytes;
        let d = bytes as f64 / opts.spi_bytes_per_s;
        let mut lo = (f - d).max(0.0);
        let hi = f;
        if let Some(&(_, prev_hi)) = acq.last() {
            lo = lo.max(prev_hi);
        }
        // DMA overlapping processing is absorbed by it
        for &(b0, b1, _) in &busy {
            if lo < b1 && hi > b0 && lo >= b0 {
                lo = b1.min(hi);
            }
        }
        let clipped_hi = busy.iter().filter(|&&(b0, b1, _)| b0 > lo && b0 < hi && b1 >= hi).map(|b| b.0).fold(hi, f64::min);
        if clipped_hi - lo > EPS {
            acq.push((lo, clipped_hi));
        }
    }

    let mut marks: Vec<(f64, f64, Phase, Option<u64>)> = busy.iter().map(|&(a, b, c)| (a, b, Phase::Processing, Some(c))).collect();
    marks.extend(acq.iter().map(|&(a, b)| (a, b, Phase::Acquisition, None)));
    marks.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut segments = Vec::new();
    let mut t = 0.0;
    for (a, b, ph, cy) in marks {
        let a = a.max(t);
        if a - t > EPS {
            segments.push(PhaseSegment { phase: Phase::Idle, start_s: t, duration_s: a - t, cycles: None });
        }
        if b - a > EPS || (ph == Phase::Processing && b > a) {
            segments.push(PhaseSegment { phase: ph, start_s: a, duration_s: b - a, cycles: cy });
            t = b;
        }
    }
    if w - t > EPS {
        segments.push(PhaseSegment { phase: Phase::Idle, start_s: t, duration_s: w - t, cycles: None });
    }
    let mut tl = PhaseTimeline { segments, window_seconds: w };
    tl.close_gap();
    Ok(tl)
}

impl PhaseTimeline {
    /// Absorb sub-epsilon rounding into the last segment so durations sum
    /// to the window.
    fn close_gap(&mut self) {
        let sum: f64 = self.segments.iter().map(|s| s.duration_s).sum();
        if let Some(last) = self.segments.last_mut() {
            last.duration_s = (last.duration_s + self.window_seconds - sum).max(0.0);
        }
    }

    pub fn total(&self, phase: Phase) -> f64 {
        self.segments.iter().filter(|s| s.phase == phase).map(|s| s.duration_s).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.iter().any(|s| s.duration_s < 0.0) {
            return domain("negative segment duration");
        }
        let sum: f64 = self.segments.iter().map(|s| s.duration_s).sum();
        if (sum - self.window_seconds).abs() > 1e-9 {
            return domain(format!("segments sum to {sum}, window is {}", self.window_seconds));
        }
        Ok(())
    }

    /// CSV with columns `phase,start_s,duration_s,cycles`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "phase,start_s,duration_s,cycles")?;
        for s in &self.segments {
            let c = s.cycles.map(|c| c.to_string()).unwrap_or_default();
            writeln!(w, "{},{:.9},{:.9},{}", s.phase.name(), s.start_s, s.duration_s, c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DutyBin {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl DutyBin {
    /// Half-open bins with edges 0.001, 0.01, 0.15 and 0.6.
    pub fn from_ratio(r: f64) -> Self {
        if r < 0.001 {
            DutyBin::VeryLow
        } else if r < 0.01 {
            DutyBin::Low
        } else if r < 0.15 {
            DutyBin::Medium
        } else if r < 0.6 {
            DutyBin::High
        } else {
            DutyBin::VeryHigh
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DutyBin::VeryLow => "very low",
            DutyBin::Low => "low",
            DutyBin::Medium => "medium",
            DutyBin::High => "high",
            DutyBin::VeryHigh => "very high",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let k = s.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        [DutyBin::VeryLow, DutyBin::Low, DutyBin::Medium, DutyBin::High, DutyBin::VeryHigh].into_iter().find(|b| b.label() == k)
    }
}

impl fmt::Display for DutyBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleReport {
    pub ratio: f64,
    pub bin: DutyBin,
}

/// Processing time over the window.
pub fn duty_cycle(timeline: &PhaseTimeline) -> DutyCycleReport {
    let ratio = (timeline.total(Phase::Processing) / timeline.window_seconds).clamp(0.0, 1.0);
    DutyCycleReport { ratio, bin: DutyBin::from_ratio(ratio) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigio::{schedule_acquisition, SignalSpec, DEFAULT_BUFFER_BYTES};
    use proptest::prelude::*;

    fn sched(rate: u32, bits: u8, ch: u32, w: f64) -> AcquisitionSchedule {
        schedule_acquisition(&[SignalSpec::new("s", rate, bits, ch).unwrap()], w, DEFAULT_BUFFER_BYTES).unwrap()
    }

    #[test]
    fn svm_example() {
        let tl = simulate_cycle(&sched(64, 16, 1, 60.0), 2_300_000, 80e6).unwrap();
        tl.validate().unwrap();
        assert!((tl.total(Phase::Processing) - 0.02875).abs() < 1e-12);
        let d = duty_cycle(&tl);
        assert!((d.ratio - 0.000479166).abs() < 1e-8);
        assert_eq!(d.bin, DutyBin::VeryLow);
        assert_eq!(tl.segments[0].phase, Phase::Processing);
        assert_eq!(tl.segments.iter().filter(|s| s.phase == Phase::Acquisition).count(), 10);
    }

    #[test]
    fn zero_processing() {
        let tl = simulate_cycle(&sched(256, 16, 3, 15.0), 0, 80e6).unwrap();
        tl.validate().unwrap();
        assert_eq!(duty_cycle(&tl).ratio, 0.0);
        assert!(tl.segments.iter().all(|s| s.phase != Phase::Processing));
        assert!(tl.total(Phase::Acquisition) > 0.0);
    }

    #[test]
    fn full_window_processing() {
        let tl = simulate_cycle(&sched(256, 16, 23, 4.0), 320_000_000, 80e6).unwrap();
        tl.validate().unwrap();
        let d = duty_cycle(&tl);
        assert_eq!(d.ratio, 1.0);
        assert_eq!(d.bin, DutyBin::VeryHigh);
    }

    #[test]
    fn overrun_is_real_time_violation() {
        let r = simulate_cycle(&sched(4000, 24, 16, 0.2), 23_000_000, 80e6);
        assert!(matches!(r, Err(Error::RealTime { .. })));
        assert!(simulate_cycle(&sched(64, 16, 1, 60.0), 1, 0.0).is_err());
    }

    #[test]
    fn bins() {
        assert_eq!(DutyBin::from_ratio(0.0005), DutyBin::VeryLow);
        assert_eq!(DutyBin::from_ratio(0.30), DutyBin::High);
        assert_eq!(DutyBin::from_ratio(0.01), DutyBin::Medium);
        assert_eq!(DutyBin::from_ratio(0.001), DutyBin::Low);
        assert_eq!(DutyBin::from_ratio(0.15), DutyBin::High);
        assert_eq!(DutyBin::from_ratio(0.6), DutyBin::VeryHigh);
        assert_eq!(DutyBin::parse("Very High"), Some(DutyBin::VeryHigh));
        assert_eq!(DutyBin::parse("very_low"), Some(DutyBin::VeryLow));
    }

    #[test]
    fn per_batch_splits_processing() {
        let s = sched(256, 16, 3, 15.0);
        let opts = SimOptions { per_batch_processing: true, ..SimOptions::default() };
        let tl = simulate_cycle_with(&s, 7_400_000, 80e6, &opts).unwrap();
        tl.validate().unwrap();
        let procs: Vec<_> = tl.segments.iter().filter(|s| s.phase == Phase::Processing).collect();
        assert_eq!(procs.len(), 30);
        assert_eq!(procs.iter().map(|s| s.cycles.unwrap()).sum::<u64>(), 7_400_000);
        assert!((duty_cycle(&tl).ratio - 7.4e6 / 80e6 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let tl = simulate_cycle(&sched(64, 16, 1, 60.0), 2_300_000, 80e6).unwrap();
        let mut buf = Vec::new();
        tl.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("phase,start_s,duration_s,cycles"));
        assert_eq!(lines.next(), Some("processing,0.000000000,0.028750000,2300000"));
        assert_eq!(text.lines().count(), tl.segments.len() + 1);
    }

    proptest! {
        #[test]
        fn conserves_window_and_is_monotone(rate in 1u32..5000, ch in 1u32..24, w in 0.1f64..60.0, frac in 0.0f64..1.0, per_batch: bool) {
            let s = sched(rate, 16, ch, w);
            let clock = 80e6;
            let cycles = (frac * w * clock * 0.9) as u64;
            let opts = SimOptions { per_batch_processing: per_batch, ..SimOptions::default() };
            if let Ok(tl) = simulate_cycle_with(&s, cycles, clock, &opts) {
                prop_assert!(tl.validate().is_ok());
                let more = simulate_cycle_with(&s, cycles + cycles / 10 + 1, clock, &opts);
                if let Ok(more) = more {
                    prop_assert!(duty_cycle(&more).ratio >= duty_cycle(&tl).ratio);
                }
            }
        }
    }
}
