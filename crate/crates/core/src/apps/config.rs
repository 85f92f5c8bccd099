use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AppId;
use crate::error::{Error, Result};
use crate::sigio::{input_bandwidth, SignalSpec, DEFAULT_BUFFER_BYTES};

/// Number representation of the main processing path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    /// 16/32-bit fixed point as deployed on integer-only cores.
    Fixed,
    /// 32-bit IEEE float.
    Float,
}

/// Optional kernel parameters; unset fields take the application default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub mf_window_ms: Option<f64>,
    pub relen_short_ms: Option<f64>,
    pub relen_long_ms: Option<f64>,
    pub refractory_ms: Option<f64>,
    pub ma_window_ms: Option<f64>,
    pub lomb_freqs: Option<usize>,
    pub lpc_order: Option<usize>,
    pub svm_support_vectors: Option<usize>,
    pub bpf_low_hz: Option<f64>,
    pub bpf_high_hz: Option<f64>,
    pub fft_points: Option<usize>,
    pub mfcc_frame: Option<usize>,
    pub n_mels: Option<usize>,
    pub n_coeffs: Option<usize>,
    pub ica_components: Option<usize>,
    pub ica_max_iter: Option<usize>,
    pub mlp_hidden: Option<usize>,
    pub classes: Option<usize>,
    pub forest_trees: Option<usize>,
    pub forest_depth: Option<usize>,
    pub knn_points: Option<usize>,
    pub learning_rate: Option<f64>,
    pub margin: Option<f64>,
    pub train_samples: Option<usize>,
}

/// Complete description of one application run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub app: AppId,
    /// Sensor streams sharing the ADC buffer; empty for training.
    #[serde(default)]
    pub signals: Vec<SignalSpec>,
    /// Classification window; 0 when there is no acquisition.
    #[serde(default)]
    pub window_seconds: f64,
    /// Sub-windows processed before the final decision.
    #[serde(default = "one")]
    pub segments: u32,
    pub arithmetic: Arithmetic,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_buffer")]
    pub buffer_bytes: u32,
    /// Stack bound added to the heap high-water mark.
    #[serde(default = "default_stack")]
    pub stack_bytes: u64,
    #[serde(default)]
    pub kernel: KernelParams,
    /// Model file (JSON); a seeded synthetic model is used when absent.
    #[serde(default)]
    pub model: Option<PathBuf>,
}

fn one() -> u32 {
    1
}

fn default_buffer() -> u32 {
    DEFAULT_BUFFER_BYTES
}

fn default_stack() -> u64 {
    2048
}

fn spec(name: &str, rate: u32, bits: u8, ch: u32) -> SignalSpec {
    SignalSpec { name: name.into(), sample_rate: rate, bits_per_sample: bits, channels: ch }
}

impl AppConfig {
    /// Reference configuration of each application.
    pub fn default_for(app: AppId) -> Self {
        let (signals, window, segments, arithmetic) = match app {
            AppId::Hcl => (vec![spec("ecg", 256, 16, 3)], 15.0, 1, Arithmetic::Fixed),
            AppId::SeizDetSvm => (vec![spec("ecg", 64, 16, 1)], 60.0, 1, Arithmetic::Fixed),
            AppId::SeizDetCnn => (vec![spec("eeg", 256, 16, 23)], 4.0, 1, Arithmetic::Fixed),
            AppId::Cwm => (vec![spec("eeg", 256, 32, 4)], 56.0, 14, Arithmetic::Fixed),
            AppId::Gcl => (vec![spec("semg", 4000, 24, 16)], 0.2, 1, Arithmetic::Float),
            AppId::CoughDet => (vec![spec("audio", 16000, 32, 1), spec("imu", 100, 16, 6)], 0.3, 1, Arithmetic::Float),
            AppId::Ecl => (vec![spec("ppg", 200, 32, 1), spec("gsr", 5, 32, 1), spec("st", 1, 16, 1)], 10.0, 10, Arithmetic::Float),
            AppId::BpFree => (vec![], 0.0, 1, Arithmetic::Float),
        };
        let stack_bytes = match app {
            AppId::Ecl => 1024,
            AppId::BpFree => 8192,
            _ => default_stack(),
        };
        AppConfig {
            app,
            signals,
            window_seconds: window,
            segments,
            arithmetic,
            seed: 0,
            buffer_bytes: DEFAULT_BUFFER_BYTES,
            stack_bytes,
            kernel: KernelParams::default(),
            model: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: AppConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let c: AppConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Load a `.toml` or `.json` file. A relative model path is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut c = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text)?,
            _ => Self::from_toml_str(&text)?,
        };
        if let (Some(m), Some(dir)) = (&c.model, path.parent()) {
            if m.is_relative() {
                c.model = Some(dir.join(m));
            }
        }
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical JSON; the basis of the configuration hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{}: {m}", self.app)));
        if self.app == AppId::BpFree {
            if !self.signals.is_empty() {
                return bad("the training workload has no acquisition".into());
            }
        } else {
            if self.signals.is_empty() {
                return bad("at least one signal is required".into());
            }
            for s in &self.signals {
                s.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            if !(self.window_seconds > 0.0) || !self.window_seconds.is_finite() {
                return bad(format!("window must be positive, got {}", self.window_seconds));
            }
            if self.segments == 0 {
                return bad("segments must be >= 1".into());
            }
            let seg = self.window_seconds / self.segments as f64;
            for s in &self.signals {
                let n = seg * s.sample_rate as f64;
                if (n - n.round()).abs() > 1e-6 || n.round() < 1.0 {
                    return bad(format!("signal '{}': a {seg} s segment is not a whole number of samples", s.name));
                }
            }
            if self.buffer_bytes == 0 {
                return bad("buffer must be non-empty".into());
            }
        }
        if self.arithmetic == Arithmetic::Fixed && !matches!(self.app, AppId::Hcl | AppId::SeizDetSvm | AppId::SeizDetCnn | AppId::Cwm) {
            return bad("no fixed-point implementation; use arithmetic = \"float\"".into());
        }
        if let Some(m) = &self.model {
            if !m.exists() {
                return bad(format!("model file {} not found", m.display()));
            }
        }
        Ok(())
    }

    /// Aggregate input bandwidth in B/s; `None` without acquisition.
    pub fn input_bandwidth(&self) -> Option<u64> {
        if self.signals.is_empty() {
            None
        } else {
            input_bandwidth(&self.signals).ok()
        }
    }

    pub fn segment_seconds(&self) -> f64 {
        self.window_seconds / self.segments.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_bandwidths() {
        let expect = [1536, 128, 11776, 4096, 192000, 65200, 822];
        for (app, bw) in AppId::ALL.iter().zip(expect) {
            let c = AppConfig::default_for(*app);
            c.validate().unwrap();
            assert_eq!(c.input_bandwidth(), Some(bw), "{app}");
            assert_eq!(Some(c.window_seconds), app.window_seconds());
        }
        let b = AppConfig::default_for(AppId::BpFree);
        b.validate().unwrap();
        assert_eq!(b.input_bandwidth(), None);
    }

    #[test]
    fn toml_round_trip() {
        for app in AppId::ALL {
            let c = AppConfig::default_for(app);
            let t = c.to_toml_string().unwrap();
            assert_eq!(AppConfig::from_toml_str(&t).unwrap(), c);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = AppConfig::default_for(AppId::Gcl);
        c.arithmetic = Arithmetic::Fixed;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = AppConfig::default_for(AppId::Hcl);
        c.model = Some("/nonexistent/model.json".into());
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = AppConfig::default_for(AppId::Ecl);
        c.segments = 7;
        assert!(c.validate().is_err());
        assert!(AppConfig::from_toml_str("app = \"XYZ\"\narithmetic = \"float\"").is_err());
        assert!(AppConfig::from_toml_str("app = \"HCL\"\narithmetic = \"fixed\"\nbogus = 1").is_err());
    }
}
