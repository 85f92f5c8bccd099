use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SampleBuffer, SignalSpec};
use crate::error::{Error, Result};

/// On-disk signal layouts.
///
/// * `Csv`: header `t,ch0,ch1,...`, one row per sample instant.
/// * `RawLe`: little-endian interleaved codes, 2 bytes for 16-bit sensors
///   and 4 bytes otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFormat {
    Csv,
    RawLe,
}

impl SignalFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SignalFormat::Csv => "csv",
            SignalFormat::RawLe => "raw",
        }
    }
}

fn fmt_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {msg}", path.display()))
}

pub fn store_signal(buf: &SampleBuffer, path: &Path, format: SignalFormat) -> Result<()> {
    match format {
        SignalFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(|e| fmt_err(path, e))?;
            let mut header = vec!["t".to_string()];
            header.extend((0..buf.channels()).map(|c| format!("ch{c}")));
            w.write_record(&header).map_err(|e| fmt_err(path, e))?;
            let fs = buf.spec.sample_rate as f64;
            for i in 0..buf.window_samples() {
                let mut row = vec![format!("{:.6}", i as f64 / fs)];
                row.extend(buf.data.iter().map(|ch| ch[i].to_string()));
                w.write_record(&row).map_err(|e| fmt_err(path, e))?;
            }
            w.flush()?;
        }
        SignalFormat::RawLe => {
            let width = buf.spec.container_bytes() as usize;
            let mut bytes = Vec::with_capacity(buf.container_bytes());
            for i in 0..buf.window_samples() {
                for ch in &buf.data {
                    if width == 2 {
                        bytes.extend_from_slice(&(ch[i] as i16).to_le_bytes());
                    } else {
                        bytes.extend_from_slice(&ch[i].to_le_bytes());
                    }
                }
            }
            fs::write(path, bytes)?;
        }
    }
    Ok(())
}

/// Reads a window for `spec`; the file must hold exactly
/// `sample_rate * window_seconds` samples on `spec.channels` channels.
pub fn load_signal(path: &Path, format: SignalFormat, spec: &SignalSpec, window_seconds: f64) -> Result<SampleBuffer> {
    spec.validate()?;
    let n = spec.window_samples(window_seconds)?;
    let chans = spec.channels as usize;
    let mut data = vec![Vec::with_capacity(n); chans];
    match format {
        SignalFormat::Csv => {
            let mut r = csv::Reader::from_path(path).map_err(|e| fmt_err(path, e))?;
            let header = r.headers().map_err(|e| fmt_err(path, e))?.clone();
            if header.len() != chans + 1 || header.get(0) != Some("t") {
                return Err(fmt_err(path, format!("expected header t + {chans} channels, got {} columns", header.len())));
            }
            for (row_idx, rec) in r.records().enumerate() {
                let rec = rec.map_err(|e| fmt_err(path, e))?;
                if rec.len() != chans + 1 {
                    return Err(fmt_err(path, format!("row {} has {} columns", row_idx + 1, rec.len())));
                }
                for (c, ch) in data.iter_mut().enumerate() {
                    let v: i32 = rec[c + 1].trim().parse().map_err(|e| fmt_err(path, format!("row {} col {}: {e}", row_idx + 1, c + 1)))?;
                    ch.push(v);
                }
            }
        }
        SignalFormat::RawLe => {
            let bytes = fs::read(path)?;
            let width = spec.container_bytes() as usize;
            if bytes.len() != n * chans * width {
                return Err(fmt_err(path, format!("{} bytes, expected {}", bytes.len(), n * chans * width)));
            }
            for (i, chunk) in bytes.chunks_exact(width).enumerate() {
                let v = if width == 2 {
                    i16::from_le_bytes([chunk[0], chunk[1]]) as i32
                } else {
                    i32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]])
                };
                data[i % chans].push(v);
            }
        }
    }
    if data.iter().any(|c| c.len() != n) {
        return Err(fmt_err(path, format!("{} samples per channel, expected {n}", data[0].len())));
    }
    SampleBuffer::new(spec.clone(), data, window_seconds)
}
