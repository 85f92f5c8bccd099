use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{AppConfig, Arithmetic};
use super::features::{hrv, lorenz, lpc};
use super::memory::{MemoryLedger, CODE_BYTES_PER_STAGE};
use super::models::{calibration_inputs, AppModel, COUGH_BANDS_HZ, CWM_FEATURES_PER_CHANNEL};
use super::synth::WindowInput;
use super::AppId;
use crate::dsp::{
    band_power, butterworth_highpass, butterworth_lowpass, delineate, detect_r_peaks, fft_q15, iir_biquad_cascade, lomb_scargle, mfcc,
    morph_filter, moving_average_subtract, odd_window, power_spectral_density, relative_energy, spectral_entropy, stat_features, Biquad,
    MfccConfig, MorphMode, SpectralResult,
};
use crate::error::{Error, Result};
use crate::infer::{
    argmax_first, cnn_forward, fastica_unmix, forest_predict, knn_fear_predict, mlp_forward, qcnn_forward, rp_classify, svm_predict,
    BeatClass, Cnn1dModel, DenseLayer, ForestModel, IcaOptions, KnnTrainingSet, QCnnModel, RuleSet, SvmModel, Tensor2,
};
use crate::ops::OpCounters;
use crate::scalar::{Real, Scalar};
use crate::sigio::SampleBuffer;
use crate::train::{bpfree_train_epoch, default_order, SampleBatch, DEFAULT_MARGIN};
use crate::{Q15, Q16};

/// Outcome of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    pub class_index: usize,
    pub score: f64,
    /// Named intermediate quantities (beat counts, votes, losses, ...).
    pub details: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub ops: OpCounters,
}

/// Everything recorded while processing one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRun {
    pub app: AppId,
    pub result: Classification,
    pub stages: Vec<StageRecord>,
    pub ops: OpCounters,
    pub static_bytes: u64,
    pub dynamic_peak_bytes: u64,
}

/// Stage names in execution order.
pub fn stage_names(app: AppId) -> &'static [&'static str] {
    match app {
        AppId::Hcl => &["mf", "rms_combine", "relen", "r_peaks", "delineation", "rp_classify"],
        AppId::SeizDetSvm => &["ma_subtract", "relen", "r_peaks", "rri_edr", "hrv_lorenz", "lomb", "lpc", "svm"],
        AppId::SeizDetCnn => &["cnn"],
        AppId::Cwm => &["baseline", "bandpass", "time_features", "frequency_features", "forest"],
        AppId::Gcl => &["ica", "features", "mlp"],
        AppId::CoughDet => &["imu_features", "spectral", "mfcc", "forest"],
        AppId::Ecl => &["averages", "knn", "vote"],
        AppId::BpFree => &["training"],
    }
}

struct Stages(Vec<StageRecord>);

impl Stages {
    fn new(app: AppId) -> Self {
        Stages(stage_names(app).iter().map(|n| StageRecord { name: n.to_string(), ops: OpCounters::new() }).collect())
    }

    /// Run `f`, charging its operations to stage `name`.
    fn run<R>(&mut self, name: &str, f: impl FnOnce(&mut OpCounters) -> Result<R>) -> Result<R> {
        let rec = self.0.iter_mut().find(|s| s.name == name).expect("stage declared in stage_names");
        f(&mut rec.ops)
    }
}

fn bytes_of<S: Scalar>() -> u64 {
    S::ARITH.bits() as u64 / 8
}

fn to_t<S: Scalar, T: Scalar>(x: &[S]) -> Vec<T> {
    x.iter().map(|v| T::from_f64(v.to_f64())).collect()
}

fn class(label: &str, class_index: usize, score: f64, details: &[(&str, f64)]) -> Classification {
    Classification { label: label.into(), class_index, score, details: details.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
}

/// Majority of partial decisions; a tie is negative.
pub fn majority_vote(votes: &[bool]) -> bool {
    2 * votes.iter().filter(|&&v| v).count() > votes.len()
}

/// An application ready to process windows.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: AppConfig,
    model: AppModel,
    qcnn: Option<QCnnModel>,
    static_bytes: u64,
    ledger: MemoryLedger,
    last: Option<WindowRun>,
}

/// Assemble the stage graph and model of `config`.
pub fn build_app(config: AppConfig) -> Result<Pipeline> {
    config.validate()?;
    let model = AppModel::for_config(&config)?;
    let qcnn = match (&model, config.arithmetic) {
        (AppModel::Cnn { quantized: Some(q), .. }, Arithmetic::Fixed) => Some(q.clone()),
        (AppModel::Cnn { float, quantized: None }, Arithmetic::Fixed) => Some(
            QCnnModel::quantize(float, &calibration_inputs(&config)?).map_err(|e| Error::Config(format!("quantization failed: {e}")))?,
        ),
        _ => None,
    };
    let params = match &qcnn {
        Some(q) => q.param_bytes() as u64,
        None => model.param_bytes(config.arithmetic),
    };
    let static_bytes = params + lut_bytes(&config) + CODE_BYTES_PER_STAGE * stage_names(config.app).len() as u64;
    let ledger = MemoryLedger::new(static_bytes, config.stack_bytes);
    Ok(Pipeline { config, model, qcnn, static_bytes, ledger, last: None })
}

/// Read-only tables: FFT twiddles, windows, filterbanks, filter
/// coefficients.
fn lut_bytes(cfg: &AppConfig) -> u64 {
    let k = &cfg.kernel;
    match cfg.app {
        AppId::Cwm => {
            let n = cwm_fft_points(cfg) as u64;
            // Q15 twiddles plus three biquads of five 32-bit coefficients
            n / 2 * 4 + 3 * 5 * 4
        }
        AppId::CoughDet => {
            let n = cough_fft_points(cfg) as u64;
            let frame = k.mfcc_frame.unwrap_or(512) as u64;
            let mels = k.n_mels.unwrap_or(40) as u64;
            let coeffs = k.n_coeffs.unwrap_or(13) as u64;
            n / 2 * 8 + frame * 4 + (frame / 2 + 1) * 2 * 4 + coeffs * mels * 4
        }
        _ => 0,
    }
}

fn cwm_fft_points(cfg: &AppConfig) -> usize {
    let seg = cfg.signals.first().map_or(1, |s| (s.sample_rate as f64 * cfg.segment_seconds()).round() as usize);
    cfg.kernel.fft_points.unwrap_or(seg.next_power_of_two())
}

fn cough_fft_points(cfg: &AppConfig) -> usize {
    let n = cfg.signals.first().map_or(1, |s| (s.sample_rate as f64 * cfg.window_seconds).round() as usize);
    cfg.kernel.fft_points.unwrap_or(n.next_power_of_two())
}

impl Pipeline {
    pub fn config(&self) -> &AppConfig {
        &self.config
    }

    pub fn model(&self) -> &AppModel {
        &self.model
    }

    pub fn quantized_model(&self) -> Option<&QCnnModel> {
        self.qcnn.as_ref()
    }

    pub fn ledger(&self) -> &MemoryLedger {
        &self.ledger
    }

    pub fn static_bytes(&self) -> u64 {
        self.static_bytes
    }

    pub fn last_run(&self) -> Option<&WindowRun> {
        self.last.as_ref()
    }

    /// Width in bits of the fixed-point type carrying the main workload.
    pub fn fixed_bits(&self) -> u32 {
        match self.config.app {
            AppId::Hcl | AppId::SeizDetCnn => 16,
            _ => 32,
        }
    }

    /// Run one window through every stage.
    pub fn process_window(&mut self, input: &WindowInput) -> Result<WindowRun> {
        input.check(&self.config)?;
        self.ledger.reset();
        let mut st = Stages::new(self.config.app);
        let cfg = &self.config;
        let mem = &mut self.ledger;
        let fixed = cfg.arithmetic == Arithmetic::Fixed;
        let result = match (&self.model, cfg.app) {
            (AppModel::Rules { rules }, AppId::Hcl) => {
                if fixed {
                    hcl::<Q15, Q16>(cfg, rules, input, &mut st, mem)
                } else {
                    hcl::<f32, f32>(cfg, rules, input, &mut st, mem)
                }
            }
            (AppModel::Svm { svm }, AppId::SeizDetSvm) => {
                if fixed {
                    seizdet_svm::<Q16>(cfg, svm, input, &mut st, mem)
                } else {
                    seizdet_svm::<f32>(cfg, svm, input, &mut st, mem)
                }
            }
            (AppModel::Cnn { float, .. }, AppId::SeizDetCnn) => seizdet_cnn(float, self.qcnn.as_ref(), input, &mut st, mem),
            (AppModel::Forest { forest }, AppId::Cwm) => {
                if fixed {
                    cwm::<Q16>(cfg, forest, input, true, &mut st, mem)
                } else {
                    cwm::<f32>(cfg, forest, input, false, &mut st, mem)
                }
            }
            (AppModel::Mlp { layers }, AppId::Gcl) => gcl(cfg, layers, input, &mut st, mem),
            (AppModel::Forest { forest }, AppId::CoughDet) => coughdet(cfg, forest, input, &mut st, mem),
            (AppModel::Knn { training }, AppId::Ecl) => ecl(cfg, training, input, &mut st, mem),
            (AppModel::Training { model, batch }, AppId::BpFree) => bpfree(cfg, model, batch, &mut st, mem),
            (m, app) => Err(Error::Config(format!("{app} cannot use a '{}' model", m.kind()))),
        }?;
        let mut ops = OpCounters::new();
        for s in &st.0 {
            ops.merge(&s.ops);
        }
        let run = WindowRun {
            app: cfg.app,
            result,
            stages: st.0,
            ops,
            static_bytes: self.static_bytes,
            dynamic_peak_bytes: self.ledger.dynamic_peak_bytes(),
        };
        self.last = Some(run.clone());
        Ok(run)
    }
}

fn hcl<S: Scalar, T: Real>(
    cfg: &AppConfig,
    rules: &RuleSet,
    input: &WindowInput,
    st: &mut Stages,
    mem: &mut MemoryLedger,
) -> Result<Classification> {
    let k = &cfg.kernel;
    let buf = &input.buffers[0];
    let fs = buf.spec.sample_rate as f64;
    let n = buf.window_samples();
    let leads_n = buf.channels();
    let input_bytes = buf.container_bytes() as u64;
    mem.alloc(input_bytes);

    let mf_k = odd_window(k.mf_window_ms.unwrap_or(300.0), fs);
    let scratch = 2 * n as u64 * bytes_of::<S>();
    mem.alloc(scratch);
    let leads: Vec<Vec<S>> =
        st.run("mf", |ops| (0..leads_n).map(|c| morph_filter(&buf.normalized::<S>(c), mf_k, MorphMode::BaselineCorrect, ops)).collect())?;
    mem.free(scratch)?;

    let t_bytes = n as u64 * bytes_of::<T>();
    mem.alloc(t_bytes);
    let combined: Vec<T> = st.run("rms_combine", |ops| {
        let inv = T::from_f64(1.0 / leads_n as f64);
        let wide: Vec<Vec<T>> = leads.iter().map(|l| to_t::<S, T>(l)).collect();
        let out = (0..n)
            .map(|i| {
                let ss = wide.iter().fold(T::zero(), |a, l| a + l[i] * l[i]);
                (ss * inv).sqrt()
            })
            .collect();
        ops.mac::<T>((leads_n * n) as u64);
        ops.mul::<T>(n as u64 * (1 + T::TRANSCENDENTAL_COST));
        ops.mem((leads_n * n) as u64);
        Ok(out)
    })?;
    mem.free(input_bytes)?;

    mem.alloc(t_bytes);
    let ws = odd_window(k.relen_short_ms.unwrap_or(95.0), fs);
    let wl = odd_window(k.relen_long_ms.unwrap_or(1500.0), fs);
    let relen = st.run("relen", |ops| relative_energy(&combined, ws, wl, ops))?;
    let refractory = k.refractory_ms.unwrap_or(250.0);
    let peaks = st.run("r_peaks", |ops| detect_r_peaks(&relen, fs, refractory, ops))?;
    mem.free(t_bytes)?;
    mem.alloc(peaks.len() as u64 * 5 * 2);
    let beats = st.run("delineation", |ops| delineate(&combined, &peaks, fs, ops))?;
    let abnormal = st.run("rp_classify", |ops| {
        let mut count = 0usize;
        for i in 1..beats.len() {
            if rp_classify(&beats, i, rules, ops)? == BeatClass::Abnormal {
                count += 1;
            }
        }
        Ok(count)
    })?;
    let bpm = if peaks.len() >= 2 { 60.0 * (peaks.len() - 1) as f64 * fs / (peaks[peaks.len() - 1] - peaks[0]) as f64 } else { 0.0 };
    let classified = beats.len().saturating_sub(1);
    let frac = if classified > 0 { abnormal as f64 / classified as f64 } else { 0.0 };
    let (label, idx) = if abnormal > 0 { ("abnormal", 1) } else { ("normal", 0) };
    Ok(class(label, idx, frac, &[("beats", beats.len() as f64), ("abnormal_beats", abnormal as f64), ("heart_rate_bpm", bpm)]))
}

/// Band power of a periodogram sampled on a uniform frequency grid.
fn grid_band(freqs: &[f64], p: &[f64], lo: f64, hi: f64) -> f64 {
    let df = if freqs.len() > 1 { freqs[1] - freqs[0] } else { 1.0 };
    freqs.iter().zip(p).filter(|(f, _)| **f >= lo && **f < hi).map(|(_, v)| v).sum::<f64>() * df
}

fn seizdet_svm<T: Real>(
    cfg: &AppConfig,
    svm: &SvmModel<f64>,
    input: &WindowInput,
    st: &mut Stages,
    mem: &mut MemoryLedger,
) -> Result<Classification> {
    let k = &cfg.kernel;
    let buf = &input.buffers[0];
    let fs = buf.spec.sample_rate as f64;
    let n = buf.window_samples();
    mem.alloc(buf.container_bytes() as u64);
    let x: Vec<T> = buf.normalized(0);
    let nb = n as u64 * bytes_of::<T>();
    mem.alloc(2 * nb);
    let ma_w = odd_window(k.ma_window_ms.unwrap_or(1000.0), fs);
    let y = st.run("ma_subtract", |ops| moving_average_subtract(&x, ma_w, ops))?;
    let ws = odd_window(k.relen_short_ms.unwrap_or(95.0), fs);
    let wl = odd_window(k.relen_long_ms.unwrap_or(1500.0), fs);
    let relen = st.run("relen", |ops| relative_energy(&y, ws, wl, ops))?;
    let refractory = k.refractory_ms.unwrap_or(250.0);
    let peaks = st.run("r_peaks", |ops| detect_r_peaks(&relen, fs, refractory, ops))?;
    mem.free(nb)?;

    let m = peaks.len().saturating_sub(1);
    mem.alloc(3 * m as u64 * bytes_of::<T>());
    let (times, rr, edr) = st.run("rri_edr", |ops| {
        let inv_fs = T::from_f64(1.0 / fs);
        let times: Vec<T> = peaks[1.min(peaks.len())..].iter().map(|&p| T::from_usize(p) * inv_fs).collect();
        let rr: Vec<T> = peaks.windows(2).map(|w| T::from_usize(w[1] - w[0]) * inv_fs).collect();
        let edr: Vec<T> = peaks[1.min(peaks.len())..].iter().map(|&p| y[p]).collect();
        ops.mul::<T>(2 * m as u64);
        ops.mem(3 * m as u64);
        Ok((times, rr, edr))
    })?;

    let (h, l) =
        st.run("hrv_lorenz", |ops| if rr.len() >= 3 { Ok((Some(hrv(&rr, ops)?), Some(lorenz(&rr, ops)?))) } else { Ok((None, None)) })?;

    let n_freqs = k.lomb_freqs.unwrap_or(64).max(2);
    let freqs: Vec<f64> = (0..n_freqs).map(|i| 0.01 + 0.49 * i as f64 / (n_freqs - 1) as f64).collect();
    mem.alloc(2 * n_freqs as u64 * bytes_of::<T>());
    let (p_rr, p_edr) = st.run("lomb", |ops| {
        if rr.len() >= 4 {
            let a = lomb_scargle(&times, &rr, &freqs, ops)?;
            let b = lomb_scargle(&times, &edr, &freqs, ops)?;
            Ok((a.iter().map(|v| v.to_f64()).collect::<Vec<_>>(), b.iter().map(|v| v.to_f64()).collect::<Vec<_>>()))
        } else {
            Ok((vec![0.0; n_freqs], vec![0.0; n_freqs]))
        }
    })?;
    let order = k.lpc_order.unwrap_or(8);
    let coeffs = st.run("lpc", |ops| {
        if edr.len() > order + 1 {
            Ok(lpc(&edr, order, ops)?.0.iter().map(|v| v.to_f64()).collect())
        } else {
            Ok(vec![0.0; order])
        }
    })?;

    let lf = grid_band(&freqs, &p_rr, 0.04, 0.15);
    let hf = grid_band(&freqs, &p_rr, 0.15, 0.4);
    let mut feats = vec![
        h.map_or(0.0, |h| h.mean_rr),
        h.map_or(0.0, |h| h.sdnn),
        h.map_or(0.0, |h| h.rmssd),
        h.map_or(0.0, |h| h.pnn50),
        l.map_or(0.0, |l| l.sd1),
        l.map_or(0.0, |l| l.sd2),
        lf,
        hf,
        if hf > 0.0 { lf / hf } else { 0.0 },
    ];
    feats.extend(coeffs);
    feats.push(grid_band(&freqs, &p_edr, 0.1, 0.25));
    feats.push(grid_band(&freqs, &p_edr, 0.25, 0.4));
    let model: SvmModel<T> = svm.cast();
    let fx: Vec<T> = feats.iter().map(|&v| T::from_f64(v)).collect();
    let d = st.run("svm", |ops| svm_predict(&model, &fx, ops))?;
    let (label, idx) = if d.positive { ("seizure", 1) } else { ("no-seizure", 0) };
    Ok(class(label, idx, d.score, &[("beats", peaks.len() as f64), ("lf_hf", feats[8]), ("mean_rr_s", feats[0])]))
}

/// Live activations of a conv stack evaluated one output row at a time.
fn cnn_activation_bytes(blocks: &[(usize, usize, usize, usize)], input_len: usize, act_bytes: u64, mem: &mut MemoryLedger) -> Result<()> {
    let mut len = input_len;
    let mut live = 0u64;
    for &(cin, cout, k, pool) in blocks {
        let cl = len + 1 - k;
        let pl = cl / pool;
        let (row, out) = (cl as u64 * act_bytes, (cout * pl) as u64 * act_bytes);
        mem.alloc(row + out);
        mem.free(row)?;
        if live > 0 {
            mem.free(live)?;
        }
        let _ = cin;
        live = out;
        len = pl;
    }
    Ok(())
}

fn seizdet_cnn(
    float: &Cnn1dModel<f64>,
    q: Option<&QCnnModel>,
    input: &WindowInput,
    st: &mut Stages,
    mem: &mut MemoryLedger,
) -> Result<Classification> {
    let buf = &input.buffers[0];
    mem.alloc(buf.container_bytes() as u64);
    let scores: Vec<f64> = match q {
        Some(q) => {
            let rows: Vec<Vec<Q15>> = (0..buf.channels()).map(|c| buf.normalized(c)).collect();
            let x = Tensor2::from_rows(&rows)?;
            let shapes: Vec<_> = q.blocks.iter().map(|b| (b.in_channels, b.out_channels, b.kernel, b.pool)).collect();
            cnn_activation_bytes(&shapes, x.len, 2, mem)?;
            st.run("cnn", |ops| qcnn_forward(q, &x, ops))?
        }
        None => {
            let rows: Vec<Vec<f32>> = (0..buf.channels()).map(|c| buf.normalized(c)).collect();
            let x = Tensor2::from_rows(&rows)?;
            let shapes: Vec<_> = float.blocks.iter().map(|b| (b.in_channels, b.out_channels, b.kernel, b.pool)).collect();
            cnn_activation_bytes(&shapes, x.len, 4, mem)?;
            let m: Cnn1dModel<f32> = float.cast();
            st.run("cnn", |ops| cnn_forward(&m, &x, ops))?.iter().map(|v| v.to_f64()).collect()
        }
    };
    let idx = argmax_first(&scores);
    let label = if idx == 1 { "seizure" } else { "no-seizure" };
    let mut details = vec![];
    let names: Vec<String> = (0..scores.len()).map(|i| format!("score_{i}")).collect();
    for (n, s) in names.iter().zip(&scores) {
        details.push((n.as_str(), *s));
    }
    Ok(class(label, idx, scores[idx], &details))
}

const EEG_BANDS: [(f64, f64); 5] = [(1.0, 4.0), (4.0, 8.0), (8.0, 13.0), (13.0, 30.0), (30.0, 40.0)];

fn cwm<T: Real>(
    cfg: &AppConfig,
    forest: &ForestModel,
    input: &WindowInput,
    fixed_fft: bool,
    st: &mut Stages,
    mem: &mut MemoryLedger,
) -> Result<Classification> {
    let k = &cfg.kernel;
    let buf = &input.buffers[0];
    let fs = buf.spec.sample_rate as f64;
    let seg_n = (fs * cfg.segment_seconds()).round() as usize;
    let n_fft = cwm_fft_points(cfg);
    let sections: Vec<Biquad> =
        [butterworth_highpass(2, k.bpf_low_hz.unwrap_or(1.0), fs)?, butterworth_lowpass(4, k.bpf_high_hz.unwrap_or(40.0), fs)?].concat();
    let ma_w = odd_window(k.ma_window_ms.unwrap_or(1000.0), fs);
    let channels = buf.channels();
    let mut acc = vec![0.0f64; channels * CWM_FEATURES_PER_CHANNEL];
    let tb = bytes_of::<T>();
    let seg_bytes = (channels * seg_n) as u64 * buf.spec.container_bytes() as u64;
    let work_bytes = seg_n as u64 * tb + n_fft as u64 * if fixed_fft { 4 } else { 2 * tb } + (n_fft / 2 + 1) as u64 * tb;
    for s in 0..cfg.segments as usize {
        let seg = buf.slice(s * seg_n, (s + 1) * seg_n)?;
        mem.alloc(seg_bytes);
        for c in 0..channels {
            mem.alloc(work_bytes);
            let x: Vec<T> = seg.normalized(c);
            let base = st.run("baseline", |ops| moving_average_subtract(&x, ma_w, ops))?;
            let filtered = st.run("bandpass", |ops| iir_biquad_cascade(&base, &sections, true, ops))?;
            let tf = st.run("time_features", |ops| {
                // rescale to full range so fourth powers keep precision
                let peak = filtered.iter().fold(T::zero(), |a, v| a.max_of(v.abs()));
                ops.branch(filtered.len() as u64);
                if peak <= T::zero() {
                    return Ok([0.0; 3]);
                }
                let inv = T::one() / peak;
                let scaled: Vec<T> = filtered.iter().map(|&v| v * inv).collect();
                ops.mul::<T>(filtered.len() as u64 + 1);
                let f = stat_features(&scaled, ops)?;
                let p = peak.to_f64();
                Ok([f.skewness.unwrap_or(0.0), f.kurtosis.unwrap_or(0.0), f.hjorth_activity * p * p])
            })?;
            let ff = st.run("frequency_features", |ops| {
                let psd: SpectralResult<T> = if fixed_fft {
                    let q: Vec<Q15> = filtered.iter().map(|v| Q15::from_f64(v.to_f64())).collect();
                    let spec = fft_q15(&q, n_fft, ops)?;
                    // undo half the 1/n scaling so squares stay above the Q16 LSB
                    let up = T::from_f64((1u64 << (spec.scale_log2 / 2)) as f64);
                    let bins = spec.bins[..=n_fft / 2]
                        .iter()
                        .map(|c| {
                            let (re, im) = (T::from_f64(c.re.to_f64()) * up, T::from_f64(c.im.to_f64()) * up);
                            re * re + im * im
                        })
                        .collect();
                    ops.mul::<T>(4 * (n_fft / 2 + 1) as u64);
                    SpectralResult { bins, resolution: fs / n_fft as f64, n_points: n_fft, scale_log2: spec.scale_log2 }
                } else {
                    power_spectral_density(&filtered, fs, n_fft, ops)?
                };
                let total: f64 = psd.bins.iter().map(|v| v.to_f64()).sum::<f64>() * psd.resolution;
                let mut out = [0.0f64; 6];
                if total > 0.0 {
                    for (o, (lo, hi)) in out.iter_mut().zip(EEG_BANDS) {
                        *o = band_power(&psd, lo, hi) / total;
                    }
                    out[5] = spectral_entropy(&psd, ops)?;
                }
                ops.branch(psd.bins.len() as u64);
                Ok(out)
            })?;
            let a = &mut acc[c * CWM_FEATURES_PER_CHANNEL..(c + 1) * CWM_FEATURES_PER_CHANNEL];
            for (dst, v) in a.iter_mut().zip(tf.iter().chain(ff.iter())) {
                *dst += v;
            }
            mem.free(work_bytes)?;
        }
        mem.free(seg_bytes)?;
    }
    let inv = 1.0 / cfg.segments as f64;
    let feats: Vec<T> = acc.iter().map(|v| T::from_f64(v * inv)).collect();
    let d = st.run("forest", |ops| forest_predict(forest, &feats, ops))?;
    let (label, idx) = if d.positive { ("high-workload", 1) } else { ("low-workload", 0) };
    Ok(class(label, idx, d.score, &[("segments", cfg.segments as f64)]))
}

fn gcl(
    cfg: &AppConfig,
    layers: &[DenseLayer<f64>],
    input: &WindowInput,
    st: &mut Stages,
    mem: &mut MemoryLedger,
) -> Result<Classification> {
    let k = &cfg.kernel;
    let buf = &input.buffers[0];
    let n = buf.window_samples() as u64;
    let ch = buf.channels() as u64;
    let comps = k.ica_components.unwrap_or(8);
    mem.alloc(buf.container_bytes() as u64);
    mem.alloc(ch * ch * 4 + 2 * comps as u64 * n * 4);
    let x: Vec<Vec<f32>> = (0..buf.channels()).map(|c| buf.normalized(c)).collect();
    let mut opts = IcaOptions::new(comps);
    opts.seed = cfg.seed;
    if let Some(it) = k.ica_max_iter {
        opts.max_iter = it;
    }
    let ica = st.run("ica", |ops| fastica_unmix(&x, &opts, ops))?;
    let feats = st.run("features", |ops| {
        // fourth moment of each unit-variance source, sorted to remove
        // the permutation ambiguity
        let mut f: Vec<f32> =
            ica.sources.iter().map(|s| s.iter().fold(0.0f32, |a, &v| a + (v * v) * (v * v)) / s.len() as f32 - 3.0).collect();
        ops.mul::<f32>(n * comps as u64 + comps as u64);
        ops.mac::<f32>(n * comps as u64);
        ops.branch((comps * comps) as u64);
        f.sort_by(|a, b| b.total_cmp(a));
        Ok(f)
    })?;
    let net: Vec<DenseLayer<f32>> = layers.iter().map(|l| l.cast()).collect();
    let probs = st.run("mlp", |ops| mlp_forward(&net, &feats, ops))?;
    let idx = argmax_first(&probs);
    Ok(class(
        &format!("gesture-{idx}"),
        idx,
        probs[idx] as f64,
        &[("ica_iterations", ica.iterations as f64), ("ica_converged", ica.converged as u8 as f64)],
    ))
}

fn coughdet(cfg: &AppConfig, forest: &ForestModel, input: &WindowInput, st: &mut Stages, mem: &mut MemoryLedger) -> Result<Classification> {
    let k = &cfg.kernel;
    let (audio_buf, imu_buf) = (&input.buffers[0], &input.buffers[1]);
    let fs = audio_buf.spec.sample_rate as f64;
    mem.alloc(audio_buf.container_bytes() as u64 + imu_buf.container_bytes() as u64);
    let mut feats: Vec<f64> = st.run("imu_features", |ops| {
        let mut v = Vec::new();
        for c in 0..imu_buf.channels() {
            v.extend(stat_features(&imu_buf.normalized::<f32>(c), ops)?.to_vec());
        }
        Ok(v)
    })?;
    let audio: Vec<f32> = audio_buf.normalized(0);
    let n_fft = cough_fft_points(cfg);
    mem.alloc(n_fft as u64 * 8 + (n_fft / 2 + 1) as u64 * 4);
    let spectral = st.run("spectral", |ops| {
        let psd = power_spectral_density(&audio, fs, n_fft, ops)?;
        let p: Vec<f64> = psd.bins.iter().map(|v| v.to_f64()).collect();
        let total: f64 = p.iter().sum();
        let mut out = vec![0.0; 3 + COUGH_BANDS_HZ.len() - 1];
        if total > 0.0 {
            let f = |k: usize| k as f64 * psd.resolution;
            let centroid = p.iter().enumerate().map(|(k, v)| f(k) * v).sum::<f64>() / total;
            let spread = (p.iter().enumerate().map(|(k, v)| (f(k) - centroid).powi(2) * v).sum::<f64>() / total).sqrt();
            let dominant = f(argmax_first(&p));
            out[0] = centroid;
            out[1] = spread;
            out[2] = dominant;
            for (i, w) in COUGH_BANDS_HZ.windows(2).enumerate() {
                out[3 + i] = band_power(&psd, w[0], w[1]);
            }
        }
        ops.mul::<f32>(4 * p.len() as u64);
        ops.branch(p.len() as u64);
        Ok(out)
    })?;
    feats.extend(spectral);
    let mcfg = MfccConfig::new(k.mfcc_frame.unwrap_or(512), k.n_mels.unwrap_or(40), k.n_coeffs.unwrap_or(13));
    let coeffs = st.run("mfcc", |ops| {
        let frames = mfcc(&audio, fs, &mcfg, ops)?;
        let mut mean = vec![0.0f64; mcfg.n_coeffs];
        for fr in &frames {
            for (m, v) in mean.iter_mut().zip(fr) {
                *m += v.to_f64();
            }
        }
        let inv = 1.0 / frames.len().max(1) as f64;
        ops.mul::<f32>(mcfg.n_coeffs as u64);
        Ok(mean.into_iter().map(|v| v * inv).collect::<Vec<_>>())
    })?;
    feats.extend(coeffs);
    let fx: Vec<f32> = feats.iter().map(|&v| v as f32).collect();
    let d = st.run("forest", |ops| forest_predict(forest, &fx, ops))?;
    let (label, idx) = if d.positive { ("cough", 1) } else { ("no-cough", 0) };
    Ok(class(label, idx, d.score, &[("features", fx.len() as f64)]))
}

fn segment_mean(buf: &SampleBuffer, seg: usize, segments: usize) -> f32 {
    let n = buf.window_samples() / segments;
    let x: Vec<f32> = buf.normalized(0);
    x[seg * n..(seg + 1) * n].iter().sum::<f32>() / n as f32
}

fn ecl(
    cfg: &AppConfig,
    training: &KnnTrainingSet<f64>,
    input: &WindowInput,
    st: &mut Stages,
    mem: &mut MemoryLedger,
) -> Result<Classification> {
    let segs = cfg.segments as usize;
    let train: KnnTrainingSet<f32> =
        KnnTrainingSet { points: training.points.iter().map(|p| p.map(|v| v as f32)).collect(), labels: training.labels.clone() };
    let seg_bytes: u64 = input.buffers.iter().map(|b| b.container_bytes() as u64 / segs as u64).sum();
    let n = train.points.len() as u64;
    let mut votes = Vec::with_capacity(segs);
    for s in 0..segs {
        mem.alloc(seg_bytes);
        let x = st.run("averages", |ops| {
            let v = [
                segment_mean(&input.buffers[0], s, segs),
                segment_mean(&input.buffers[1], s, segs),
                segment_mean(&input.buffers[2], s, segs),
            ];
            ops.mul::<f32>(3);
            ops.mem(seg_bytes / 2);
            Ok(v)
        })?;
        // distances plus a label copy reordered by the selection sort
        mem.alloc(4 * n + n);
        let d = st.run("knn", |ops| knn_fear_predict(&train, &x, ops))?;
        mem.free(4 * n + n)?;
        mem.free(seg_bytes)?;
        votes.push(d.positive);
    }
    let fear = st.run("vote", |ops| {
        ops.branch(votes.len() as u64 + 1);
        Ok(majority_vote(&votes))
    })?;
    let fear_votes = votes.iter().filter(|&&v| v).count();
    let (label, idx) = if fear { ("fear", 1) } else { ("no-fear", 0) };
    Ok(class(label, idx, fear_votes as f64 / segs as f64, &[("fear_votes", fear_votes as f64), ("partial_decisions", segs as f64)]))
}

fn bpfree(
    cfg: &AppConfig,
    model: &Cnn1dModel<f64>,
    batch: &SampleBatch<f64>,
    st: &mut Stages,
    mem: &mut MemoryLedger,
) -> Result<Classification> {
    let k = &cfg.kernel;
    let m: Cnn1dModel<f32> = model.cast();
    let b = SampleBatch { inputs: batch.inputs.iter().map(|x| x.cast::<f32>()).collect(), labels: batch.labels.clone() };
    // per-layer training keeps, for every sample, the layer input and its
    // conv/pre-activation/argmax/pooled outputs, plus one gradient copy
    let samples = b.inputs.len() as u64;
    let mut len = m.input_len;
    let mut worst = 0u64;
    for blk in &m.blocks {
        let cl = len + 1 - blk.kernel;
        let pl = cl / blk.pool;
        let per = (blk.in_channels * len + 2 * blk.out_channels * cl + 2 * blk.out_channels * pl) as u64 * 4;
        let grads = 2 * (blk.weights.len() + 2 * blk.out_channels) as u64 * 4;
        worst = worst.max(samples * per + grads);
        len = pl;
    }
    mem.alloc(worst);
    let lr = k.learning_rate.unwrap_or(0.01);
    let margin = k.margin.unwrap_or(DEFAULT_MARGIN);
    let order = default_order(&m);
    let (_, trace) = st.run("training", |ops| bpfree_train_epoch(&m, &b, lr, &order, margin, ops))?;
    let before: f64 = trace.iter().map(|t| t.loss_before).sum();
    let after: f64 = trace.iter().map(|t| t.loss_after).sum();
    let halvings: u32 = trace.iter().map(|t| t.halvings).sum();
    Ok(class(
        "trained",
        0,
        after,
        &[("loss_before", before), ("loss_after", after), ("halvings", halvings as f64), ("layers", trace.len() as f64)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::synth::synthetic_input;

    fn run(app: AppId) -> (Pipeline, WindowRun) {
        let mut p = build_app(AppConfig::default_for(app)).unwrap();
        let input = synthetic_input(p.config(), 7).unwrap();
        let r = p.process_window(&input).unwrap();
        (p, r)
    }

    #[test]
    fn majority_rule() {
        let v = |f: usize, n: usize| (0..n).map(|i| i < f).collect::<Vec<_>>();
        assert!(majority_vote(&v(7, 10)));
        assert!(!majority_vote(&v(5, 10)));
        assert!(!majority_vote(&v(3, 10)));
        assert!(!majority_vote(&[]));
    }

    #[test]
    fn hcl_counts_beats_at_60_bpm() {
        let (_, r) = run(AppId::Hcl);
        let beats = r.result.details["beats"];
        assert!((beats - 15.0).abs() <= 1.0, "{beats}");
        assert_eq!(r.ops.dominant(), Some(crate::OpCategory::Branches));
        assert_eq!(r.stages.len(), stage_names(AppId::Hcl).len());
    }

    #[test]
    fn stage_ops_sum_to_total() {
        let (_, r) = run(AppId::Ecl);
        let mut sum = OpCounters::new();
        for s in &r.stages {
            sum.merge(&s.ops);
        }
        assert_eq!(sum, r.ops);
    }

    #[test]
    fn repeated_windows_are_identical() {
        let mut p = build_app(AppConfig::default_for(AppId::SeizDetSvm)).unwrap();
        let input = synthetic_input(p.config(), 1).unwrap();
        let a = p.process_window(&input).unwrap();
        let b = p.process_window(&input).unwrap();
        assert_eq!(a, b);
        assert_eq!(p.last_run(), Some(&b));
    }

    #[test]
    fn wrong_input_is_format_error() {
        let mut p = build_app(AppConfig::default_for(AppId::Hcl)).unwrap();
        let other = synthetic_input(&AppConfig::default_for(AppId::Ecl), 0).unwrap();
        assert!(matches!(p.process_window(&other), Err(Error::Format(_))));
        assert!(p.last_run().is_none());
    }
}
