//! Heart-rate-variability, Lorenz-plot and linear-prediction features.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

/// Time-domain HRV statistics of an RR series in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hrv {
    pub mean_rr: f64,
    /// Population standard deviation of RR.
    pub sdnn: f64,
    /// Root mean square of successive differences.
    pub rmssd: f64,
    /// Fraction of successive differences above 50 ms.
    pub pnn50: f64,
}

/// Lorenz (Poincare) plot widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz {
    pub sd1: f64,
    pub sd2: f64,
}

fn mean_var<T: Real>(x: &[T], ops: &mut OpCounters) -> (T, T) {
    let n = T::from_usize(x.len());
    let mean = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let var = x.iter().fold(T::zero(), |a, &v| {
        let d = v - mean;
        a + d * d
    }) / n;
    ops.mac::<T>(x.len() as u64);
    ops.mul::<T>(2);
    (mean, var)
}

pub fn hrv<T: Real>(rr: &[T], ops: &mut OpCounters) -> Result<Hrv> {
    if rr.len() < 2 {
        return domain(format!("need at least two RR intervals, got {}", rr.len()));
    }
    let (mean, var) = mean_var(rr, ops);
    let diffs: Vec<T> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let ssd = diffs.iter().fold(T::zero(), |a, &d| a + d * d);
    ops.mac::<T>(diffs.len() as u64);
    let limit = T::from_f64(0.05);
    let over = diffs.iter().filter(|d| d.abs() > limit).count();
    ops.branch(diffs.len() as u64);
    let rmssd = (ssd / T::from_usize(diffs.len())).sqrt();
    ops.mul::<T>(2 + 2 * T::TRANSCENDENTAL_COST);
    Ok(Hrv { mean_rr: mean.to_f64(), sdnn: var.sqrt().to_f64(), rmssd: rmssd.to_f64(), pnn50: over as f64 / diffs.len() as f64 })
}

/// `SD1^2 = var(dRR) / 2`, `SD2^2 = 2 var(RR) - SD1^2`.
pub fn lorenz<T: Real>(rr: &[T], ops: &mut OpCounters) -> Result<Lorenz> {
    if rr.len() < 3 {
        return domain(format!("need at least three RR intervals, got {}", rr.len()));
    }
    let (_, var) = mean_var(rr, ops);
    let diffs: Vec<T> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let (_, dvar) = mean_var(&diffs, ops);
    let half = T::from_f64(0.5);
    let sd1_sq = dvar * half;
    let sd2_sq = var + var - sd1_sq;
    ops.mul::<T>(1 + 2 * T::TRANSCENDENTAL_COST);
    let clamp = |v: T| if v < T::zero() { T::zero() } else { v };
    Ok(Lorenz { sd1: clamp(sd1_sq).sqrt().to_f64(), sd2: clamp(sd2_sq).sqrt().to_f64() })
}

/// Biased autocorrelation at lags `0..=order`.
pub fn autocorrelation<T: Real>(x: &[T], order: usize, ops: &mut OpCounters) -> Vec<T> {
    let n = x.len();
    let r: Vec<T> = (0..=order)
        .map(|k| {
            if k >= n {
                return T::zero();
            }
            (k..n).fold(T::zero(), |a, i| a + x[i] * x[i - k])
        })
        .collect();
    ops.mac::<T>((0..=order.min(n.saturating_sub(1))).map(|k| (n - k) as u64).sum());
    r
}

/// Levinson-Durbin recursion on the autocorrelation of the mean-removed
/// input. Returns `a[1..=order]` with `x[n] ~ sum_k a[k] x[n-k]` and the
/// final prediction error. Coefficients past a vanishing error are zero.
pub fn lpc<T: Real>(x: &[T], order: usize, ops: &mut OpCounters) -> Result<(Vec<T>, T)> {
    if order == 0 || x.len() <= order {
        return domain(format!("LPC order {order} needs more than {order} samples, got {}", x.len()));
    }
    let n = T::from_usize(x.len());
    let mean = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let xc: Vec<T> = x.iter().map(|&v| v - mean).collect();
    let r = autocorrelation(&xc, order, ops);
    let mut a = vec![T::zero(); order + 1];
    let mut err = r[0];
    for i in 1..=order {
        ops.branch(1);
        if err <= T::zero() {
            break;
        }
        let mut acc = r[i];
        for j in 1..i {
            acc = acc - a[j] * r[i - j];
        }
        ops.mac::<T>(i as u64 - 1);
        let k = acc / err;
        let prev = a.clone();
        a[i] = k;
        for j in 1..i {
            a[j] = prev[j] - k * prev[i - j];
        }
        ops.mul::<T>(i as u64 + 2);
        err = err * (T::one() - k * k);
    }
    Ok((a[1..].to_vec(), err))
}
