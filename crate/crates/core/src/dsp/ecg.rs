use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::{Real, Scalar};

/// Sample count for a window of `ms` milliseconds, rounded and bumped to
/// the next odd integer.
pub fn odd_window(ms: f64, sample_rate: f64) -> usize {
    let n = (ms * sample_rate / 1000.0).round().max(1.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

fn centered_energy<T: Real>(sq: &[T], w: usize) -> Vec<T> {
    let n = sq.len();
    let h = (w / 2) as isize;
    let at = |j: isize| sq[j.clamp(0, n as isize - 1) as usize];
    let mut acc = (-h..=h).fold(T::zero(), |a, j| a + at(j));
    let mut out = Vec::with_capacity(n);
    out.push(acc);
    for i in 1..n as isize {
        acc = acc + at(i + h) - at(i - 1 - h);
        out.push(acc);
    }
    out
}

/// Ratio of short- to long-window energy around each sample.
pub fn relative_energy<T: Real>(x: &[T], w_short: usize, w_long: usize, ops: &mut OpCounters) -> Result<Vec<T>> {
    if w_short.is_multiple_of(2) || w_long.is_multiple_of(2) {
        return domain(format!("windows must be odd, got {w_short} and {w_long}"));
    }
    if w_short >= w_long || w_long > x.len() {
        return domain(format!("need w_short < w_long <= {}, got {w_short} and {w_long}", x.len()));
    }
    let sq: Vec<T> = x.iter().map(|&v| v * v).collect();
    let es = centered_energy(&sq, w_short);
    let el = centered_energy(&sq, w_long);
    ops.mul::<T>(2 * x.len() as u64);
    ops.mem(6 * x.len() as u64);
    let eps = T::tiny();
    Ok(es.into_iter().zip(el).map(|(s, l)| s / (l + eps)).collect())
}

/// Adaptive-threshold peak picker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakDetector {
    /// A peak must exceed `theta` times the trailing running mean.
    pub theta: f64,
    pub refractory_ms: f64,
    pub mean_window_s: f64,
}

impl Default for PeakDetector {
    fn default() -> Self {
        Self { theta: 2.0, refractory_ms: 200.0, mean_window_s: 2.0 }
    }
}

impl PeakDetector {
    pub fn detect<S: Scalar>(&self, x: &[S], sample_rate: f64, ops: &mut OpCounters) -> Result<Vec<usize>> {
        if !(self.refractory_ms > 0.0) {
            return domain("refractory period must be positive");
        }
        if !(sample_rate > 0.0) {
            return domain("sample rate must be positive");
        }
        let n = x.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let v: Vec<f64> = x.iter().map(|s| s.to_f64()).collect();
        let refractory = ((self.refractory_ms * sample_rate / 1000.0).round() as usize).max(1);
        let mean_w = ((self.mean_window_s * sample_rate).round() as usize).max(1);
        let mut peaks: Vec<usize> = Vec::new();
        let mut run = 0.0;
        let mut branches = 0u64;
        for i in 0..n {
            run += v[i];
            if i >= mean_w {
                run -= v[i - mean_w];
            }
            let mean = run / (i + 1).min(mean_w) as f64;
            let prev = v[i.saturating_sub(1)];
            let next = if i + 1 < n { v[i + 1] } else { v[i] };
            branches += 2;
            if !(v[i] >= prev && v[i] > next) {
                continue;
            }
            branches += 1;
            if !(v[i] > self.theta * mean) {
                continue;
            }
            branches += 1;
            match peaks.last_mut() {
                Some(last) if i - *last < refractory => {
                    branches += 1;
                    if v[i] > v[*last] {
                        *last = i;
                    }
                }
                _ => peaks.push(i),
            }
        }
        ops.branch(branches);
        ops.mem(2 * n as u64);
        Ok(peaks)
    }
}

/// Peaks of `relen` using the default threshold and running-mean window.
pub fn detect_r_peaks<S: Scalar>(relen: &[S], sample_rate: f64, refractory_ms: f64, ops: &mut OpCounters) -> Result<Vec<usize>> {
    PeakDetector { refractory_ms, ..PeakDetector::default() }.detect(relen, sample_rate, ops)
}

/// Fiducial points of one beat, as sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatFiducials {
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub r: usize,
    pub s: Option<usize>,
    pub t: Option<usize>,
}

fn arg_extreme(x: &[f64], lo: isize, hi: isize, want_max: bool, ops: &mut OpCounters) -> Option<usize> {
    let lo = lo.max(0) as usize;
    let hi = hi.min(x.len() as isize - 1);
    if hi < lo as isize {
        return None;
    }
    let hi = hi as usize;
    ops.branch((hi - lo + 1) as u64);
    let mut best = lo;
    for i in lo..=hi {
        let better = if want_max { x[i] > x[best] } else { x[i] < x[best] };
        if better {
            best = i;
        }
    }
    Some(best)
}

/// Locate Q/S as minima within 40 ms of R, P as the maximum 250..80 ms
/// before R and T as the maximum 100..400 ms after.
pub fn delineate<S: Scalar>(x: &[S], r_peaks: &[usize], sample_rate: f64, ops: &mut OpCounters) -> Result<Vec<BeatFiducials>> {
    if let Some(&bad) = r_peaks.iter().find(|&&r| r >= x.len()) {
        return domain(format!("R peak {bad} outside signal of length {}", x.len()));
    }
    let v: Vec<f64> = x.iter().map(|s| s.to_f64()).collect();
    let ms = |m: f64| (m * sample_rate / 1000.0).round() as isize;
    Ok(r_peaks
        .iter()
        .map(|&r| {
            let ri = r as isize;
            BeatFiducials {
                p: arg_extreme(&v, ri - ms(250.0), ri - ms(80.0), true, ops),
                q: arg_extreme(&v, ri - ms(40.0), ri - 1, false, ops),
                r,
                s: arg_extreme(&v, ri + 1, ri + ms(40.0), false, ops),
                t: arg_extreme(&v, ri + ms(100.0), ri + ms(400.0), true, ops),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops() -> OpCounters {
        OpCounters::new()
    }

    #[test]
    fn odd_windows() {
        assert_eq!(odd_window(25.0, 256.0), 7);
        assert_eq!(odd_window(95.0, 256.0), 25);
        assert_eq!(odd_window(0.1, 256.0), 1);
        assert_eq!(odd_window(25.0, 500.0) % 2, 1);
    }

    #[test]
    fn constant_ratio() {
        let r = relative_energy(&vec![0.5f64; 100], 7, 25, &mut ops()).unwrap();
        assert!(r.iter().all(|v| (v - 7.0 / 25.0).abs() < 1e-12));
    }

    #[test]
    fn zeros_stay_zero() {
        let r = relative_energy(&vec![0.0f64; 50], 3, 9, &mut ops()).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spike_is_global_max_and_matches_brute_force() {
        let mut x = vec![0.01f64; 200];
        x[120] = 1.0;
        let r = relative_energy(&x, 7, 25, &mut ops()).unwrap();
        let top = r.iter().copied().fold(f64::MIN, f64::max);
        assert!(r[120] >= top - 1e-12);
        assert!(r[..110].iter().chain(&r[131..]).all(|v| *v < 0.5 * top));
        let e = |i: usize, w: usize| -> f64 {
            let h = (w / 2) as isize;
            (-h..=h).map(|d| x[(i as isize + d).clamp(0, 199) as usize].powi(2)).sum()
        };
        for i in [0usize, 3, 110, 120, 199] {
            assert!((r[i] - e(i, 7) / (e(i, 25) + f64::MIN_POSITIVE)).abs() < 1e-12);
        }
    }

    #[test]
    fn window_violations() {
        assert!(relative_energy(&[1.0f64; 10], 4, 7, &mut ops()).is_err());
        assert!(relative_energy(&[1.0f64; 10], 7, 7, &mut ops()).is_err());
        assert!(relative_energy(&[1.0f64; 10], 3, 11, &mut ops()).is_err());
    }

    #[test]
    fn q16_relen() {
        use crate::{Scalar, Q16};
        let x: Vec<Q16> = (0..64).map(|i| Q16::from_f64(if i == 30 { 0.8 } else { 0.05 })).collect();
        let mut c = ops();
        let r = relative_energy(&x, 3, 11, &mut c).unwrap();
        let top = r.iter().map(|v| v.to_f64()).fold(f64::MIN, f64::max);
        assert!(r[30].to_f64() >= top - 1e-4);
        assert!(c.fxp_mul > 0);
    }

    #[test]
    fn spike_train_spacing() {
        let fs = 256.0;
        let mut x = vec![0.0f64; 256 * 10];
        for k in 0..10 {
            x[100 + 256 * k] = 1.0;
        }
        let p = detect_r_peaks(&x, fs, 200.0, &mut ops()).unwrap();
        assert_eq!(p.len(), 10);
        assert!(p.windows(2).all(|w| (w[1] - w[0]).abs_diff(256) <= 2));
    }

    #[test]
    fn flat_and_empty() {
        assert!(detect_r_peaks(&[0.3f64; 1000], 256.0, 200.0, &mut ops()).unwrap().is_empty());
        assert!(detect_r_peaks::<f64>(&[], 256.0, 200.0, &mut ops()).unwrap().is_empty());
        assert!(detect_r_peaks(&[0.3f64; 10], 256.0, 0.0, &mut ops()).is_err());
    }

    #[test]
    fn refractory_merges_close_spikes() {
        let mut x = vec![0.0f64; 1024];
        x[400] = 1.0;
        x[400 + 13] = 0.9;
        let p = detect_r_peaks(&x, 256.0, 200.0, &mut ops()).unwrap();
        assert_eq!(p, vec![400]);
    }

    #[test]
    fn delineation_finds_waves() {
        let fs = 250.0;
        let g = |t: f64, mu: f64, s: f64, a: f64| a * (-(t - mu).powi(2) / (2.0 * s * s)).exp();
        let x: Vec<f64> = (0..500)
            .map(|i| {
                let t = i as f64 / fs;
                g(t, 0.84, 0.02, 0.15) + g(t, 0.98, 0.008, -0.2) + g(t, 1.0, 0.01, 1.0) + g(t, 1.02, 0.008, -0.25) + g(t, 1.25, 0.04, 0.3)
            })
            .collect();
        let b = delineate(&x, &[250], fs, &mut ops()).unwrap()[0];
        assert_eq!(b.r, 250);
        assert!(b.p.unwrap().abs_diff(210) <= 1);
        assert!(b.q.unwrap() < 250 && b.q.unwrap() >= 240);
        assert!(b.s.unwrap() > 250 && b.s.unwrap() <= 260);
        assert!(b.t.unwrap().abs_diff(312) <= 1);
        assert!(delineate(&x, &[600], fs, &mut ops()).is_err());
        let edge = delineate(&x, &[5], fs, &mut ops()).unwrap()[0];
        assert_eq!(edge.p, None);
    }
}
