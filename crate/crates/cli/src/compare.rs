//! `compare`: per-application platform rankings from the energy table.

use std::path::Path;

use biobench_core::apps::AppId;
use biobench_core::power::{builtin_energy_table, compare_platforms, energy_breakdown, load_energy_table, Platform, PlatformEnergyRecord};
use serde::{Deserialize, Serialize};

use crate::format::{table_csv, table_text, to_json};
use crate::report::{data_dir, Provenance};
use crate::{parse_platforms, CliError, CliResult, CompareArgs, FormatArg};

/// Energy ratios stated in prose alongside the table: app, efficient
/// platform, other platform, stated factor.
pub const STATED_RATIOS: [(AppId, Platform, Platform, f64); 2] =
    [(AppId::SeizDetSvm, Platform::STM32L4R5ZI, Platform::GAP9, 22.0), (AppId::SeizDetCnn, Platform::GAP9, Platform::STM32L4R5ZI, 23.5)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub platform: Platform,
    pub total_mj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub from: Platform,
    pub to: Platform,
    /// Energy of `to` over energy of `from`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareEntry {
    pub platform: Platform,
    pub idle: f64,
    pub acquisition: f64,
    pub processing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppComparison {
    pub app: AppId,
    pub winner: RankEntry,
    pub ranking: Vec<RankEntry>,
    pub ratios: Vec<RatioEntry>,
    pub breakdown: Vec<ShareEntry>,
    pub totals_provenance: Provenance,
    pub derived_provenance: Provenance,
    pub notes: Vec<String>,
}

/// `--table`, else `$BIOBENCH_DATA/platform_energy.csv`, else bundled.
pub fn load_table(path: Option<&Path>) -> CliResult<Vec<PlatformEnergyRecord>> {
    let p = path.map(Path::to_path_buf).or_else(|| data_dir().map(|d| d.join("platform_energy.csv")).filter(|p| p.is_file()));
    Ok(match p {
        Some(p) => load_energy_table(&p)?,
        None => builtin_energy_table()?,
    })
}

pub fn compare_app(records: &[PlatformEnergyRecord], app: AppId) -> CliResult<AppComparison> {
    let c = compare_platforms(records, app)?;
    let mut notes = Vec::new();
    for (a, from, to, stated) in STATED_RATIOS {
        if a == app {
            if let Ok(r) = c.ratio(from, to) {
                if (r - stated).abs() / stated > 0.05 {
                    notes.push(format!("stated ratio {to}/{from} is {stated}x; table totals give {r:.2}x"));
                }
            }
        }
    }
    let ranking: Vec<RankEntry> = c.ranking.iter().map(|&(platform, total_mj)| RankEntry { platform, total_mj }).collect();
    Ok(AppComparison {
        app,
        winner: ranking[0].clone(),
        ratios: c.ratios().into_iter().map(|((from, to), ratio)| RatioEntry { from, to, ratio }).collect(),
        breakdown: energy_breakdown(records, app)?
            .into_iter()
            .map(|s| ShareEntry { platform: s.platform, idle: s.idle, acquisition: s.acquisition, processing: s.processing })
            .collect(),
        ranking,
        totals_provenance: Provenance::PaperMeasured,
        derived_provenance: Provenance::DeskComputed,
        notes,
    })
}

/// Comparisons for `apps` restricted to `platforms`.
pub fn compare_apps(records: &[PlatformEnergyRecord], apps: &[AppId], platforms: &[Platform]) -> CliResult<Vec<AppComparison>> {
    let kept: Vec<PlatformEnergyRecord> = records.iter().filter(|r| platforms.contains(&r.platform)).cloned().collect();
    apps.iter().map(|&a| compare_app(&kept, a)).collect()
}

/// Whitespace-separated phase energies, one block per application.
pub fn gnuplot_data(records: &[PlatformEnergyRecord], comps: &[AppComparison]) -> String {
    let mut s = String::from("# app platform idle_mJ acq_mJ proc_mJ total_mJ\n");
    for c in comps {
        for e in &c.ranking {
            if let Some(r) = records.iter().find(|r| r.app == c.app && r.platform == e.platform) {
                let v = |x: Option<f64>| x.unwrap_or(0.0);
                s +=
                    &format!("{} {} {} {} {} {}\n", c.app, e.platform, v(r.energy_idle), v(r.energy_acq), v(r.energy_proc), r.energy_total);
            }
        }
        s += "\n\n";
    }
    s
}

fn rows(comps: &[AppComparison]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for c in comps {
        let best = c.winner.total_mj;
        for (rank, e) in c.ranking.iter().enumerate() {
            let sh = c.breakdown.iter().find(|s| s.platform == e.platform);
            let pct = |f: fn(&ShareEntry) -> f64| sh.map_or("-".into(), |s| format!("{:.1}", 100.0 * f(s)));
            out.push(vec![
                c.app.name().into(),
                (rank + 1).to_string(),
                e.platform.name().into(),
                format!("{:.3}", e.total_mj),
                format!("{:.2}", e.total_mj / best),
                pct(|s| s.idle),
                pct(|s| s.acquisition),
                pct(|s| s.processing),
            ]);
        }
    }
    out
}

const HEADERS: [&str; 8] = ["app", "rank", "platform", "total_mJ", "x_best", "idle_%", "acq_%", "proc_%"];

pub fn cmd_compare(a: &CompareArgs) -> CliResult<String> {
    let platforms = match &a.platforms {
        Some(names) => parse_platforms(names)?,
        None => Platform::ALL.to_vec(),
    };
    let apps: Vec<AppId> = match &a.apps {
        Some(v) if v.is_empty() => return Err(CliError::config("application filter is empty")),
        Some(v) => v.clone(),
        None => AppId::ALL.to_vec(),
    };
    let records = load_table(a.table.as_deref())?;
    let comps = compare_apps(&records, &apps, &platforms)?;
    if let Some(p) = &a.gnuplot {
        std::fs::write(p, gnuplot_data(&records, &comps)).map_err(|e| CliError::from(biobench_core::Error::Io(e)))?;
    }
    match a.format {
        FormatArg::Json => to_json(&comps),
        FormatArg::Csv => table_csv(&HEADERS, &rows(&comps)),
        FormatArg::Text => {
            let mut s = table_text(&HEADERS, &rows(&comps));
            for c in &comps {
                for n in &c.notes {
                    s += &format!("note ({}): {n}\n", c.app);
                }
            }
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winners() {
        let t = builtin_energy_table().unwrap();
        let svm = compare_app(&t, AppId::SeizDetSvm).unwrap();
        assert_eq!(svm.winner.platform, Platform::Apollo3Blue);
        assert!((svm.winner.total_mj - 0.473).abs() < 1e-9);
        assert!(svm.notes.is_empty());
        let cnn = compare_app(&t, AppId::SeizDetCnn).unwrap();
        assert_eq!(cnn.winner.platform, Platform::GAP9);
        assert_eq!(cnn.notes.len(), 1);
        assert!(cnn.notes[0].contains("15.04"));
    }

    #[test]
    fn platform_filter_applies() {
        let t = builtin_energy_table().unwrap();
        let c = compare_apps(&t, &[AppId::Hcl], &[Platform::RP2040, Platform::GAP9]).unwrap();
        assert_eq!(c[0].ranking.len(), 2);
        assert!(compare_apps(&t, &[AppId::Hcl], &[Platform::GAP9]).is_err());
    }

    #[test]
    fn gnuplot_blocks() {
        let t = builtin_energy_table().unwrap();
        let c = compare_apps(&t, &[AppId::Hcl, AppId::Ecl], &Platform::ALL).unwrap();
        let g = gnuplot_data(&t, &c);
        assert_eq!(g.lines().filter(|l| l.starts_with("HCL ")).count(), 5);
        assert_eq!(g.matches("\n\n\n").count(), 2);
    }
}
