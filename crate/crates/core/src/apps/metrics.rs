//! The five-metric characterization of an application.

use serde::{Deserialize, Serialize};

use super::config::Arithmetic;
use super::memory::kib;
use super::pipeline::{Pipeline, WindowRun};
use super::AppId;
use crate::error::{domain, Error, Result};
use crate::ops::OpCategory;
use crate::phasesim::{duty_cycle, simulate_cycle, DutyBin, REFERENCE_CLOCK_HZ};
use crate::power::{builtin_energy_table, find_record, Platform};
use crate::sigio::schedule_acquisition;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MainOperations {
    pub category: OpCategory,
    /// Human-readable class with operand width, e.g. "16-bit FXP MAC".
    pub label: String,
}

/// Where the processing cycle count came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleSource {
    /// Supplied by the caller.
    Given,
    /// Measured count of the reference board in the energy table.
    Measured,
    /// One cycle per counted operation, loads and stores included.
    OpCountProxy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleMetric {
    /// Processing time over window length, clamped to 1.
    pub ratio: f64,
    pub bin: DutyBin,
    pub processing_cycles: u64,
    pub cycle_source: CycleSource,
    pub clock_hz: f64,
    /// Processing does not fit in the window at this clock.
    pub real_time_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppMetrics {
    pub app: AppId,
    pub main_operations: Option<MainOperations>,
    /// `None` for applications without a periodic window.
    pub duty_cycle: Option<DutyCycleMetric>,
    /// Bytes per second; `None` without sensor inputs.
    pub input_bandwidth: Option<u64>,
    pub static_kib: f64,
    pub dynamic_kib: f64,
}

/// Operation-class label with the operand width used by `arith`.
pub fn operation_label(cat: OpCategory, fixed_bits: u32) -> String {
    match cat {
        OpCategory::Branches => "Branches".into(),
        OpCategory::FxpMul => format!("{fixed_bits}-bit FXP multiplications"),
        OpCategory::FxpMac => format!("{fixed_bits}-bit FXP MAC"),
        OpCategory::FpMul => "32-bit FP multiplications".into(),
        OpCategory::FpMac => "32-bit FP MAC".into(),
        OpCategory::LoadsStores => "Loads/stores".into(),
    }
}

/// Cycles of one window on the reference board, from the energy table.
pub fn reference_cycles(app: AppId) -> Option<u64> {
    let table = builtin_energy_table().ok()?;
    let rec = find_record(&table, app, Platform::STM32L4R5ZI).ok()?;
    rec.mcycles.map(|m| (m * 1e6).round() as u64)
}

/// Characterize `pipeline` from its last processed window.
///
/// `processing_cycles` defaults to the measured reference-board count, or
/// to the operation count when none exists.
pub fn characterize(pipeline: &Pipeline, processing_cycles: Option<u64>, clock_hz: f64) -> Result<AppMetrics> {
    let run = pipeline.last_run().ok_or_else(|| Error::State("no window has been processed".into()))?;
    let cfg = pipeline.config();
    let main_operations = run.ops.dominant().map(|c| MainOperations { category: c, label: operation_label(c, pipeline.fixed_bits()) });

    let duty = if cfg.signals.is_empty() || cfg.window_seconds <= 0.0 {
        None
    } else {
        let (cycles, source) = match processing_cycles {
            Some(c) => (c, CycleSource::Given),
            None => match reference_cycles(cfg.app) {
                Some(c) => (c, CycleSource::Measured),
                None => (run.ops.total(), CycleSource::OpCountProxy),
            },
        };
        let sched = schedule_acquisition(&cfg.signals, cfg.window_seconds, cfg.buffer_bytes)?;
        Some(match simulate_cycle(&sched, cycles, clock_hz) {
            Ok(tl) => {
                let d = duty_cycle(&tl);
                DutyCycleMetric {
                    ratio: d.ratio,
                    bin: d.bin,
                    processing_cycles: cycles,
                    cycle_source: source,
                    clock_hz,
                    real_time_violation: false,
                }
            }
            Err(Error::RealTime { .. }) => DutyCycleMetric {
                ratio: 1.0,
                bin: DutyBin::from_ratio(1.0),
                processing_cycles: cycles,
                cycle_source: source,
                clock_hz,
                real_time_violation: true,
            },
            Err(e) => return Err(e),
        })
    };

    Ok(AppMetrics {
        app: cfg.app,
        main_operations,
        duty_cycle: duty,
        input_bandwidth: cfg.input_bandwidth(),
        static_kib: kib(run.static_bytes),
        dynamic_kib: kib(run.dynamic_peak_bytes),
    })
}

/// Characterize at the reference clock.
pub fn characterize_default(pipeline: &Pipeline) -> Result<AppMetrics> {
    characterize(pipeline, None, REFERENCE_CLOCK_HZ)
}

/// The stage with the most compute operations and its share of the
/// window's compute operations.
pub fn dominant_kernel_share(run: &WindowRun) -> Result<(String, f64)> {
    let total = run.ops.compute_total();
    if total == 0 {
        return Err(Error::State("window performed no compute operations".into()));
    }
    let best = run
        .stages
        .iter()
        .fold(None::<(&str, u64)>, |acc, s| {
            let c = s.ops.compute_total();
            match acc {
                Some((_, b)) if b >= c => acc,
                _ => Some((&s.name, c)),
            }
        })
        .expect("at least one stage");
    Ok((best.0.to_string(), best.1 as f64 / total as f64))
}

/// Published characterization used as a regression reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceProfile {
    pub main_operations: OpCategory,
    pub arithmetic: Arithmetic,
    pub fixed_bits: Option<u32>,
    pub duty_bin: Option<DutyBin>,
    pub static_kib: f64,
    pub dynamic_kib: f64,
    /// Tabulated input bandwidth in bytes per second.
    pub input_bandwidth: Option<u64>,
}

pub fn reference_profile(app: AppId) -> ReferenceProfile {
    use Arithmetic::{Fixed, Float};
    use OpCategory::*;
    let (main_operations, arithmetic, fixed_bits, duty_bin, static_kib, dynamic_kib, input_bandwidth) = match app {
        AppId::Hcl => (Branches, Fixed, Some(16), Some(DutyBin::Low), 25.0, 30.0, Some(1536)),
        AppId::SeizDetSvm => (FxpMul, Fixed, Some(32), Some(DutyBin::VeryLow), 40.0, 40.0, Some(128)),
        AppId::SeizDetCnn => (FxpMac, Fixed, Some(16), Some(DutyBin::High), 350.0, 120.0, Some(11776)),
        AppId::Cwm => (FxpMul, Fixed, Some(32), Some(DutyBin::Medium), 90.0, 50.0, Some(4096)),
        AppId::Gcl => (FpMac, Float, None, Some(DutyBin::VeryHigh), 50.0, 110.0, Some(192000)),
        AppId::CoughDet => (FpMul, Float, None, Some(DutyBin::VeryHigh), 568.0, 160.0, Some(64400)),
        AppId::Ecl => (Branches, Float, None, Some(DutyBin::Low), 16.0, 4.0, Some(822)),
        AppId::BpFree => (FpMac, Float, None, None, 1300.0, 2600.0, None),
    };
    ReferenceProfile { main_operations, arithmetic, fixed_bits, duty_bin, static_kib, dynamic_kib, input_bandwidth }
}

/// Ratio of measured to reference memory, checked against `factor`.
pub fn within_factor(measured: f64, reference: f64, factor: f64) -> Result<bool> {
    if !(reference > 0.0) || !(factor >= 1.0) {
        return domain("reference must be positive and factor at least 1");
    }
    let r = measured / reference;
    Ok(r <= factor && r >= 1.0 / factor)
}
