//! `run`: one window through an application, reported with its metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use biobench_core::apps::metrics::{reference_profile, CycleSource};
use biobench_core::apps::{build_app, characterize, synthetic_input, AppConfig, AppId, AppMetrics, Classification, WindowInput};
use biobench_core::phasesim::{simulate_cycle, Phase};
use biobench_core::sigio::schedule_acquisition;
use biobench_core::OpCounters;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::format::render_document;
use crate::{CliError, CliResult, RunArgs, DATA_ENV, SCHEMA_VERSION};

/// Origin of a reported number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Taken from the published measurement tables.
    PaperMeasured,
    /// Computed by this harness.
    DeskComputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSummary {
    pub window_s: f64,
    pub idle_s: f64,
    pub acquisition_s: f64,
    pub processing_s: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOps {
    pub stage: String,
    pub ops: OpCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub app: AppId,
    /// SHA-256 of the canonical JSON configuration.
    pub config_hash: String,
    pub seed: u64,
    /// "synthetic" or the input directory.
    pub input: String,
    pub classification: Classification,
    pub metrics: AppMetrics,
    /// `None` when processing exceeds the window at this clock.
    pub timeline: Option<TimelineSummary>,
    pub ops: OpCounters,
    pub stages: Vec<StageOps>,
    pub provenance: BTreeMap<String, Provenance>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

/// Hex SHA-256 of the configuration's canonical JSON.
pub fn config_hash(cfg: &AppConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Explicit file, else `$BIOBENCH_DATA/configs/<app>.toml`, else built-in.
pub fn resolve_config(app: AppId, path: Option<&Path>) -> CliResult<AppConfig> {
    let cfg = match path {
        Some(p) => AppConfig::load(p)?,
        None => match data_dir().map(|d| d.join("configs").join(format!("{}.toml", app.slug()))) {
            Some(p) if p.is_file() => AppConfig::load(&p)?,
            _ => AppConfig::default_for(app),
        },
    };
    if cfg.app != app {
        return Err(CliError::config(format!("configuration is for {}, not {app}", cfg.app)));
    }
    Ok(cfg)
}

/// Notes comparing computed metrics with tabulated ones.
pub fn bandwidth_note(metrics: &AppMetrics) -> Option<String> {
    let (got, want) = (metrics.input_bandwidth?, reference_profile(metrics.app).input_bandwidth?);
    (got != want).then(|| {
        format!(
            "computed input bandwidth {got} B/s differs from the tabulated {want} B/s by {:.2}%",
            100.0 * (got as f64 - want as f64).abs() / want as f64
        )
    })
}

/// Build the report for one processed window.
pub fn build_report(cfg: AppConfig, input: Option<&Path>, clock_hz: f64, cycles: Option<u64>, timing: bool) -> CliResult<RunReport> {
    let t0 = Instant::now();
    let seed = cfg.seed;
    let hash = config_hash(&cfg);
    let mut p = build_app(cfg)?;
    let window = match input {
        Some(dir) => WindowInput::load_dir(p.config(), dir)?,
        None => synthetic_input(p.config(), seed)?,
    };
    let run = p.process_window(&window)?;
    let metrics = characterize(&p, cycles, clock_hz)?;
    let cfg = p.config();

    let mut notes = Vec::new();
    let timeline = match &metrics.duty_cycle {
        Some(d) if !d.real_time_violation => {
            let sched = schedule_acquisition(&cfg.signals, cfg.window_seconds, cfg.buffer_bytes)?;
            let tl = simulate_cycle(&sched, d.processing_cycles, clock_hz)?;
            Some(TimelineSummary {
                window_s: tl.window_seconds,
                idle_s: tl.total(Phase::Idle),
                acquisition_s: tl.total(Phase::Acquisition),
                processing_s: tl.total(Phase::Processing),
                segments: tl.segments.len(),
            })
        }
        Some(d) => {
            notes.push(format!(
                "real-time violation: {} cycles at {} Hz take {:.3} s for a {} s window",
                d.processing_cycles,
                clock_hz,
                d.processing_cycles as f64 / clock_hz,
                cfg.window_seconds
            ));
            None
        }
        None => None,
    };
    notes.extend(bandwidth_note(&metrics));

    let mut provenance = BTreeMap::new();
    for k in ["classification", "ops", "input_bandwidth", "static_kib", "dynamic_kib", "main_operations"] {
        provenance.insert(k.to_string(), Provenance::DeskComputed);
    }
    if let Some(d) = &metrics.duty_cycle {
        let cyc = if d.cycle_source == CycleSource::Measured { Provenance::PaperMeasured } else { Provenance::DeskComputed };
        provenance.insert("duty_cycle.processing_cycles".into(), cyc);
        provenance.insert("duty_cycle.ratio".into(), Provenance::DeskComputed);
    }

    Ok(RunReport {
        schema_version: SCHEMA_VERSION.into(),
        app: cfg.app,
        config_hash: hash,
        seed,
        input: input.map_or("synthetic".into(), |d| d.display().to_string()),
        classification: run.result.clone(),
        metrics,
        timeline,
        ops: run.ops,
        stages: run.stages.iter().map(|s| StageOps { stage: s.name.clone(), ops: s.ops }).collect(),
        provenance,
        notes,
        wall_time_s: timing.then(|| t0.elapsed().as_secs_f64()),
    })
}

pub fn cmd_run(a: &RunArgs) -> CliResult<String> {
    if !(a.clock > 0.0) || !a.clock.is_finite() {
        return Err(CliError::config(format!("clock must be positive, got {}", a.clock)));
    }
    let mut cfg = resolve_config(a.app, a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let r = build_report(cfg, a.input.as_deref(), a.clock, a.cycles, a.timing)?;
    render_document(&r, a.format)
}
