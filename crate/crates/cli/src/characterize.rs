//! `characterize`: the metric table for one or more applications.

use biobench_core::apps::metrics::{reference_profile, CycleSource};
use biobench_core::apps::{build_app, characterize, synthetic_input, AppId, AppMetrics};
use biobench_core::phasesim::DutyBin;
use biobench_core::OpCategory;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::{table_csv, table_text, to_json};
use crate::report::{bandwidth_note, resolve_config, Provenance};
use crate::{CharacterizeArgs, CliError, CliResult, FormatArg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub main_operations: OpCategory,
    pub duty_bin: Option<DutyBin>,
    pub input_bandwidth: Option<u64>,
    pub static_kib: f64,
    pub dynamic_kib: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeRow {
    pub metrics: AppMetrics,
    pub reference: Reference,
    pub main_operations_match: bool,
    /// `None` when either side has no duty cycle.
    pub duty_bin_match: Option<bool>,
    pub cycles_provenance: Option<Provenance>,
    pub notes: Vec<String>,
}

pub fn characterize_app(app: AppId, clock_hz: f64, seed: u64) -> CliResult<CharacterizeRow> {
    let mut cfg = resolve_config(app, None)?;
    cfg.seed = seed;
    let mut p = build_app(cfg)?;
    let x = synthetic_input(p.config(), seed)?;
    p.process_window(&x)?;
    let m = characterize(&p, None, clock_hz)?;
    let r = reference_profile(app);
    let mut notes: Vec<String> = bandwidth_note(&m).into_iter().collect();
    if let Some(d) = m.duty_cycle.as_ref().filter(|d| d.real_time_violation) {
        notes.push(format!("real-time violation at {} Hz; duty clamped to 1", d.clock_hz));
    }
    Ok(CharacterizeRow {
        main_operations_match: m.main_operations.as_ref().map(|o| o.category) == Some(r.main_operations),
        duty_bin_match: match (&m.duty_cycle, r.duty_bin) {
            (Some(d), Some(b)) => Some(d.bin == b),
            _ => None,
        },
        cycles_provenance: m.duty_cycle.as_ref().map(|d| match d.cycle_source {
            CycleSource::Measured => Provenance::PaperMeasured,
            _ => Provenance::DeskComputed,
        }),
        reference: Reference {
            main_operations: r.main_operations,
            duty_bin: r.duty_bin,
            input_bandwidth: r.input_bandwidth,
            static_kib: r.static_kib,
            dynamic_kib: r.dynamic_kib,
        },
        metrics: m,
        notes,
    })
}

/// Characterize `apps` on up to `jobs` threads; rows keep the input order.
pub fn characterize_apps(apps: &[AppId], clock_hz: f64, seed: u64, jobs: usize) -> CliResult<Vec<CharacterizeRow>> {
    if !(clock_hz > 0.0) || !clock_hz.is_finite() {
        return Err(CliError::config(format!("clock must be positive, got {clock_hz}")));
    }
    if jobs == 0 {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError { code: crate::EXIT_RUNTIME, message: e.to_string() })?;
    pool.install(|| apps.par_iter().map(|&a| characterize_app(a, clock_hz, seed)).collect())
}

pub const HEADERS: [&str; 9] = [
    "app",
    "main_operations",
    "duty_ratio",
    "duty_bin",
    "input_bandwidth_Bps",
    "static_KiB",
    "dynamic_KiB",
    "ref_duty_bin",
    "ref_main_operations",
];

fn row_cells(r: &CharacterizeRow) -> Vec<String> {
    let m = &r.metrics;
    let (ratio, bin) = match &m.duty_cycle {
        Some(d) => (format!("{:.6}", d.ratio), format!("{}{}", d.bin.label(), if d.real_time_violation { " (overrun)" } else { "" })),
        None => ("-".into(), "-".into()),
    };
    vec![
        m.app.name().into(),
        m.main_operations.as_ref().map_or("-".into(), |o| o.label.clone()),
        ratio,
        bin,
        m.input_bandwidth.map_or("-".into(), |b| b.to_string()),
        format!("{:.1}", m.static_kib),
        format!("{:.1}", m.dynamic_kib),
        r.reference.duty_bin.map_or("-".into(), |b| b.label().into()),
        r.reference.main_operations.name().into(),
    ]
}

pub fn render_rows(rows: &[CharacterizeRow], fmt: FormatArg) -> CliResult<String> {
    match fmt {
        FormatArg::Json => to_json(&rows),
        FormatArg::Csv => table_csv(&HEADERS, &rows.iter().map(row_cells).collect::<Vec<_>>()),
        FormatArg::Text => {
            let mut s = table_text(&HEADERS, &rows.iter().map(row_cells).collect::<Vec<_>>());
            for r in rows {
                for n in &r.notes {
                    s += &format!("note ({}): {n}\n", r.metrics.app);
                }
            }
            Ok(s)
        }
    }
}

pub fn cmd_characterize(a: &CharacterizeArgs) -> CliResult<String> {
    let apps: Vec<AppId> = if a.apps.is_empty() { AppId::ALL.to_vec() } else { a.apps.clone() };
    let rows = characterize_apps(&apps, a.clock, a.seed, a.jobs)?;
    render_rows(&rows, a.format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_app_single_row() {
        let rows = characterize_apps(&[AppId::Hcl], 80e6, 0, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].main_operations_match);
        assert_eq!(rows[0].duty_bin_match, Some(true));
        let csv = render_rows(&rows, FormatArg::Csv).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn slower_clock_raises_duty() {
        let fast = characterize_apps(&[AppId::Cwm], 80e6, 0, 1).unwrap();
        let slow = characterize_apps(&[AppId::Cwm], 20e6, 0, 1).unwrap();
        let (f, s) = (fast[0].metrics.duty_cycle.as_ref().unwrap(), slow[0].metrics.duty_cycle.as_ref().unwrap());
        assert!((s.ratio / f.ratio - 4.0).abs() < 1e-6);
        assert!(s.bin >= f.bin);
    }

    #[test]
    fn bad_jobs_and_clock() {
        assert_eq!(characterize_apps(&[AppId::Hcl], 80e6, 0, 0).unwrap_err().code, crate::EXIT_CONFIG);
        assert_eq!(characterize_apps(&[AppId::Hcl], 0.0, 0, 1).unwrap_err().code, crate::EXIT_CONFIG);
    }
}
