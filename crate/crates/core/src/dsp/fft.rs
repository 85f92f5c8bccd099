use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::{Real, Scalar};
use crate::Q15;

/// Frequency-domain output of [`fft`], [`fft_q15`] or
/// [`power_spectral_density`](super::power_spectral_density).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult<B> {
    pub bins: Vec<B>,
    /// Bin spacing in Hz (`sample_rate / n_points`), or `1 / n_points`
    /// cycles per sample when no rate is attached.
    pub resolution: f64,
    pub n_points: usize,
    /// The stored bins equal the transform divided by `2^scale_log2`.
    pub scale_log2: u32,
}

impl<B> SpectralResult<B> {
    pub fn with_sample_rate(mut self, sample_rate: f64) -> Self {
        self.resolution = sample_rate / self.n_points as f64;
        self
    }
}

fn check_size(len: usize, n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return domain(format!("FFT size {n} is not a power of two"));
    }
    if len > n {
        return domain(format!("input of length {len} does not fit a {n}-point FFT"));
    }
    Ok(n.trailing_zeros())
}

fn bit_reverse<T>(a: &mut [T], ops: &mut OpCounters) {
    let n = a.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
            ops.mem(4);
        }
    }
}

/// Radix-2 decimation-in-time forward transform of zero-padded `x`,
/// without normalization.
pub fn fft<T: Real>(x: &[T], n: usize, ops: &mut OpCounters) -> Result<SpectralResult<Complex<T>>> {
    let stages = check_size(x.len(), n)?;
    let mut a: Vec<Complex<T>> = (0..n).map(|i| Complex::new(x.get(i).copied().unwrap_or_else(T::zero), T::zero())).collect();
    bit_reverse(&mut a, ops);
    let twiddles: Vec<Complex<T>> = (0..n / 2)
        .map(|k| {
            let ang = -2.0 * PI * k as f64 / n as f64;
            Complex::new(T::from_f64(ang.cos()), T::from_f64(ang.sin()))
        })
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * step];
                let b = a[start + k + half];
                let t = Complex::new(w.re * b.re - w.im * b.im, w.re * b.im + w.im * b.re);
                let u = a[start + k];
                a[start + k] = Complex::new(u.re + t.re, u.im + t.im);
                a[start + k + half] = Complex::new(u.re - t.re, u.im - t.im);
            }
        }
        ops.mul::<T>(4 * (n / 2) as u64);
        len <<= 1;
    }
    let _ = stages;
    Ok(SpectralResult { bins: a, resolution: 1.0 / n as f64, n_points: n, scale_log2: 0 })
}

#[inline]
fn sat16(v: i32) -> i16 {
    v.clamp(i16::MIN as i32, i16::MAX as i32) as i16
}

/// Q15 radix-2 transform; each stage halves its outputs, so the bins hold
/// the transform divided by `n` (`scale_log2 = log2(n)`).
pub fn fft_q15(x: &[Q15], n: usize, ops: &mut OpCounters) -> Result<SpectralResult<Complex<Q15>>> {
    let stages = check_size(x.len(), n)?;
    let mut a: Vec<Complex<i16>> = (0..n).map(|i| Complex::new(x.get(i).map_or(0, |v| v.raw()), 0)).collect();
    bit_reverse(&mut a, ops);
    let twiddles: Vec<Complex<i16>> = (0..n / 2)
        .map(|k| {
            let ang = -2.0 * PI * k as f64 / n as f64;
            Complex::new(Q15::from_f64(ang.cos()).raw(), Q15::from_f64(ang.sin()).raw())
        })
        .collect();
    const ROUND: i32 = 1 << 14;
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * step];
                let b = a[start + k + half];
                let (wr, wi, br, bi) = (w.re as i32, w.im as i32, b.re as i32, b.im as i32);
                let tr = (wr * br - wi * bi + ROUND) >> 15;
                let ti = (wr * bi + wi * br + ROUND) >> 15;
                let u = a[start + k];
                let (ur, ui) = (u.re as i32, u.im as i32);
                a[start + k] = Complex::new(sat16((ur + tr + 1) >> 1), sat16((ui + ti + 1) >> 1));
                a[start + k + half] = Complex::new(sat16((ur - tr + 1) >> 1), sat16((ui - ti + 1) >> 1));
            }
        }
        ops.mul::<Q15>(4 * (n / 2) as u64);
        len <<= 1;
    }
    Ok(SpectralResult {
        bins: a.into_iter().map(|c| Complex::new(Q15::from_raw(c.re), Q15::from_raw(c.im))).collect(),
        resolution: 1.0 / n as f64,
        n_points: n,
        scale_log2: stages,
    })
}
