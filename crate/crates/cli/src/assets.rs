//! Generation of configs, input fixtures and model files.

use std::fs;
use std::path::Path;

use biobench_core::apps::{synthetic_input, AppConfig, AppId, AppModel};
use biobench_core::Error;

use crate::CliResult;

/// Write `configs/<app>.toml` and `fixtures/<app>/<signal>.csv` under `out`.
pub fn gen_fixtures(out: &Path, seed: u64) -> CliResult<String> {
    let mut log = String::new();
    fs::create_dir_all(out.join("configs")).map_err(Error::Io)?;
    for app in AppId::ALL {
        let mut cfg = AppConfig::default_for(app);
        cfg.seed = seed;
        let p = out.join("configs").join(format!("{}.toml", app.slug()));
        fs::write(&p, cfg.to_toml_string()?).map_err(Error::Io)?;
        log += &format!("{}\n", p.display());
        if cfg.signals.is_empty() {
            continue;
        }
        let dir = out.join("fixtures").join(app.slug());
        synthetic_input(&cfg, seed)?.store_dir(&dir)?;
        log += &format!("{}\n", dir.display());
    }
    Ok(log)
}

/// Write `models/<app>.json` under `out`.
pub fn export_models(out: &Path, seed: u64) -> CliResult<String> {
    let dir = out.join("models");
    fs::create_dir_all(&dir).map_err(Error::Io)?;
    let mut log = String::new();
    for app in AppId::ALL {
        let mut cfg = AppConfig::default_for(app);
        cfg.seed = seed;
        let p = dir.join(format!("{}.json", app.slug()));
        AppModel::synthetic(&cfg)?.save(&p)?;
        log += &format!("{}\n", p.display());
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use biobench_core::apps::WindowInput;

    #[test]
    fn fixtures_round_trip() {
        let d = tempfile::tempdir().unwrap();
        gen_fixtures(d.path(), 3).unwrap();
        let cfg = AppConfig::load(&d.path().join("configs/ecl.toml")).unwrap();
        assert_eq!(cfg.seed, 3);
        let w = WindowInput::load_dir(&cfg, &d.path().join("fixtures/ecl")).unwrap();
        assert_eq!(w, synthetic_input(&cfg, 3).unwrap());
        assert!(!d.path().join("fixtures/bpfree").exists());
    }
}
