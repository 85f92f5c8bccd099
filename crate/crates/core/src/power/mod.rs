//! Measured per-platform energy and cycle table: ingestion, phase
//! breakdowns, rankings and what-if projections.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::apps::AppId;
use crate::error::{domain, Error, Result};
use crate::phasesim::REFERENCE_CLOCK_HZ;

/// Embedded copy of the energy table.
pub const ENERGY_TABLE_CSV: &str = include_str!("../../assets/platform_energy.csv");
/// Embedded copy of the board summary.
pub const PLATFORMS_CSV: &str = include_str!("../../assets/platforms.csv");
pub const ENERGY_TABLE_FILE: &str = "platform_energy.csv";
pub const PLATFORMS_FILE: &str = "platforms.csv";
/// Rounding tolerance of the published table, mJ.
pub const SUM_TOLERANCE_MJ: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Platform {
    RP2040,
    STM32L4R5ZI,
    Apollo3Blue,
    GAP8,
    GAP9,
}

impl Platform {
    pub const ALL: [Platform; 5] = [Platform::RP2040, Platform::STM32L4R5ZI, Platform::Apollo3Blue, Platform::GAP8, Platform::GAP9];

    pub fn name(self) -> &'static str {
        match self {
            Platform::RP2040 => "RP2040",
            Platform::STM32L4R5ZI => "STM32L4R5ZI",
            Platform::Apollo3Blue => "Apollo3Blue",
            Platform::GAP8 => "GAP8",
            Platform::GAP9 => "GAP9",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.trim().to_ascii_lowercase();
        let short = |p: Platform| match p {
            Platform::STM32L4R5ZI => "stm32",
            Platform::Apollo3Blue => "apollo3",
            _ => "",
        };
        Platform::ALL
            .into_iter()
            .find(|p| p.name().to_ascii_lowercase() == k || short(*p) == k)
            .ok_or_else(|| Error::Config(format!("unknown platform '{s}'")))
    }
}

/// One (platform, application) cell of the energy table. Missing entries
/// are `None`, never zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformEnergyRecord {
    pub platform: Platform,
    pub app: AppId,
    /// Millions of processing cycles per window.
    pub mcycles: Option<f64>,
    pub energy_idle: Option<f64>,
    pub energy_acq: Option<f64>,
    pub energy_proc: Option<f64>,
    pub energy_total: f64,
}

impl PlatformEnergyRecord {
    pub fn component_sum(&self) -> f64 {
        [self.energy_idle, self.energy_acq, self.energy_proc].iter().flatten().sum()
    }

    pub fn check(&self) -> Result<()> {
        let parts = [self.mcycles, self.energy_idle, self.energy_acq, self.energy_proc];
        if parts.iter().flatten().chain([&self.energy_total]).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data(format!("{}/{}: negative or non-finite value", self.platform, self.app)));
        }
        let s = self.component_sum();
        if (s - self.energy_total).abs() > SUM_TOLERANCE_MJ + 1e-9 {
            return Err(Error::Data(format!(
                "{}/{}: idle+acq+proc = {s:.3} mJ but total is {:.3} mJ",
                self.platform, self.app, self.energy_total
            )));
        }
        Ok(())
    }
}

fn cell(v: &str, row: usize, col: &str) -> Result<Option<f64>> {
    let v = v.trim();
    if v == "-" || v.is_empty() {
        return Ok(None);
    }
    v.parse::<f64>().map(Some).map_err(|_| Error::Data(format!("row {row}: column {col}: cannot parse '{v}'")))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

/// Parse the energy table. Rows whose values are all missing are dropped;
/// every other row is checked against the sum invariant.
pub fn load_energy_table_str(text: &str) -> Result<Vec<PlatformEnergyRecord>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let expected = ["platform", "app", "mcycles", "idle_mJ", "acq_mJ", "proc_mJ", "total_mJ"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Data(format!("unexpected header {:?}", headers)));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 1;
        let platform: Platform = rec[0].parse().map_err(|_| Error::Data(format!("row {row}: unknown platform '{}'", &rec[0])))?;
        let app: AppId = rec[1].parse().map_err(|_| Error::Data(format!("row {row}: unknown app '{}'", &rec[1])))?;
        let vals: Vec<Option<f64>> = (2..7).map(|c| cell(&rec[c], row, expected[c])).collect::<Result<_>>()?;
        if vals.iter().all(Option::is_none) {
            continue;
        }
        let total = vals[4].ok_or_else(|| Error::Data(format!("row {row} ({platform}/{app}): missing total")))?;
        let r = PlatformEnergyRecord {
            platform,
            app,
            mcycles: vals[0],
            energy_idle: vals[1],
            energy_acq: vals[2],
            energy_proc: vals[3],
            energy_total: total,
        };
        r.check().map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        if out.iter().any(|o: &PlatformEnergyRecord| o.platform == platform && o.app == app) {
            return Err(Error::Data(format!("row {row}: duplicate {platform}/{app}")));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn load_energy_table(path: &Path) -> Result<Vec<PlatformEnergyRecord>> {
    load_energy_table_str(&std::fs::read_to_string(path)?)
}

/// The embedded table.
pub fn builtin_energy_table() -> Result<Vec<PlatformEnergyRecord>> {
    load_energy_table_str(ENERGY_TABLE_CSV)
}

fn records_for(records: &[PlatformEnergyRecord], app: AppId) -> Result<Vec<&PlatformEnergyRecord>> {
    let v: Vec<_> = records.iter().filter(|r| r.app == app).collect();
    if v.is_empty() {
        return domain(format!("no energy records for {app}"));
    }
    Ok(v)
}

pub fn find_record(records: &[PlatformEnergyRecord], app: AppId, platform: Platform) -> Result<&PlatformEnergyRecord> {
    records
        .iter()
        .find(|r| r.app == app && r.platform == platform)
        .ok_or_else(|| Error::Domain(format!("no energy record for {platform}/{app}")))
}

/// Phase shares of one platform's energy for an application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseShares {
    pub platform: Platform,
    pub idle: f64,
    pub acquisition: f64,
    pub processing: f64,
}

/// Shares are taken over the component sum so they add up to one even
/// where the rounded total differs.
pub fn energy_breakdown(records: &[PlatformEnergyRecord], app: AppId) -> Result<Vec<PhaseShares>> {
    let mut out = Vec::new();
    for r in records_for(records, app)? {
        let s = r.component_sum();
        let f = |v: Option<f64>| if s > 0.0 { v.unwrap_or(0.0) / s } else { 0.0 };
        out.push(PhaseShares { platform: r.platform, idle: f(r.energy_idle), acquisition: f(r.energy_acq), processing: f(r.energy_proc) });
    }
    out.sort_by_key(|s| s.platform);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformComparison {
    pub app: AppId,
    /// Ascending total energy; ties broken by platform order.
    pub ranking: Vec<(Platform, f64)>,
}

impl PlatformComparison {
    pub fn winner(&self) -> (Platform, f64) {
        self.ranking[0]
    }

    pub fn total(&self, p: Platform) -> Option<f64> {
        self.ranking.iter().find(|(q, _)| *q == p).map(|x| x.1)
    }

    /// How many times more energy `b` uses than `a`.
    pub fn ratio(&self, a: Platform, b: Platform) -> Result<f64> {
        let ta = self.total(a).ok_or_else(|| Error::Domain(format!("{a} has no record for {}", self.app)))?;
        let tb = self.total(b).ok_or_else(|| Error::Domain(format!("{b} has no record for {}", self.app)))?;
        if ta <= 0.0 {
            return domain(format!("{a} total energy is zero"));
        }
        Ok(tb / ta)
    }

    /// All ordered pairs with their ratio.
    pub fn ratios(&self) -> BTreeMap<(Platform, Platform), f64> {
        let mut m = BTreeMap::new();
        for &(a, ta) in &self.ranking {
            for &(b, tb) in &self.ranking {
                if a != b && ta > 0.0 {
                    m.insert((a, b), tb / ta);
                }
            }
        }
        m
    }
}

pub fn compare_platforms(records: &[PlatformEnergyRecord], app: AppId) -> Result<PlatformComparison> {
    let rs = records_for(records, app)?;
    if rs.len() < 2 {
        return domain(format!("{app} has fewer than two platforms"));
    }
    let mut ranking: Vec<(Platform, f64)> = rs.iter().map(|r| (r.platform, r.energy_total)).collect();
    ranking.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    Ok(PlatformComparison { app, ranking })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyScale {
    /// Multiplier on processing work per window.
    pub duty_scale: f64,
    /// Multiplier on core clock relative to the 80 MHz reference.
    pub clock_scale: f64,
}

impl Default for EnergyScale {
    fn default() -> Self {
        EnergyScale { duty_scale: 1.0, clock_scale: 1.0 }
    }
}

/// What-if projection. Processing energy scales with the amount of work;
/// idle energy scales with the sleep time left once the active time is
/// recomputed at the scaled clock; acquisition energy is unchanged.
pub fn project_energy(record: &PlatformEnergyRecord, scale: EnergyScale) -> Result<PlatformEnergyRecord> {
    if !(scale.duty_scale > 0.0 && scale.clock_scale > 0.0) || !scale.duty_scale.is_finite() || !scale.clock_scale.is_finite() {
        return domain("scale factors must be positive and finite");
    }
    let mut out = *record;
    out.energy_proc = record.energy_proc.map(|p| p * scale.duty_scale);
    if let (Some(w), Some(mc)) = (record.app.window_seconds(), record.mcycles) {
        let active = mc * 1e6 / REFERENCE_CLOCK_HZ;
        let active_new = active * scale.duty_scale / scale.clock_scale;
        if active_new > w {
            return domain(format!("{}/{}: projected processing {active_new:.4} s exceeds the {w} s window", record.platform, record.app));
        }
        if let Some(idle) = record.energy_idle {
            let base_sleep = w - active;
            out.energy_idle = Some(if base_sleep > 0.0 { idle * (w - active_new) / base_sleep } else { idle });
        }
    }
    out.energy_total = out.component_sum();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub processor: String,
    pub fpu: bool,
    pub ram_kib: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub platform: Platform,
    pub board: String,
    pub manufacturer: String,
    pub processor: String,
    pub fpu: bool,
    pub ram_kib: u32,
    pub flash_mb: u32,
    pub flash_on_chip: bool,
    pub cluster: Option<ClusterProfile>,
}

#[derive(Deserialize)]
struct ProfileRow {
    platform: String,
    board: String,
    manufacturer: String,
    processor: String,
    fpu: bool,
    ram_kib: u32,
    flash_mb: u32,
    flash_location: String,
    cluster_processor: Option<String>,
    cluster_fpu: Option<bool>,
    cluster_ram_kib: Option<u32>,
}

pub fn load_platforms_str(text: &str) -> Result<Vec<PlatformProfile>> {
    let mut out = Vec::new();
    for (i, row) in reader(text).deserialize::<ProfileRow>().enumerate() {
        let row = row.map_err(|e| Error::Data(format!("row {}: {e}", i + 1)))?;
        let cluster = match (row.cluster_processor, row.cluster_fpu, row.cluster_ram_kib) {
            (Some(p), Some(f), Some(r)) if !p.is_empty() => Some(ClusterProfile { processor: p, fpu: f, ram_kib: r }),
            (None, None, None) => None,
            _ => return Err(Error::Data(format!("row {}: incomplete cluster columns", i + 1))),
        };
        out.push(PlatformProfile {
            platform: row.platform.parse().map_err(|e| Error::Data(format!("row {}: {e}", i + 1)))?,
            board: row.board,
            manufacturer: row.manufacturer,
            processor: row.processor,
            fpu: row.fpu,
            ram_kib: row.ram_kib,
            flash_mb: row.flash_mb,
            flash_on_chip: row.flash_location == "on-chip",
            cluster,
        });
    }
    Ok(out)
}

pub fn load_platforms(path: &Path) -> Result<Vec<PlatformProfile>> {
    load_platforms_str(&std::fs::read_to_string(path)?)
}

pub fn builtin_platforms() -> Result<Vec<PlatformProfile>> {
    load_platforms_str(PLATFORMS_CSV)
}
