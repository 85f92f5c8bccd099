use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

/// Normalized Lomb periodogram of an unevenly sampled series at the given
/// frequencies (Hz).
///
/// The mean is removed first and powers are divided by twice the sample
/// variance, so a constant series yields zeros.
pub fn lomb_scargle<T: Real>(t: &[T], x: &[T], freqs: &[f64], ops: &mut OpCounters) -> Result<Vec<T>> {
    if t.len() != x.len() {
        return domain(format!("{} times for {} samples", t.len(), x.len()));
    }
    if t.len() < 2 {
        return domain("need at least two samples");
    }
    if freqs.is_empty() {
        return domain("empty frequency grid");
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return domain("timestamps must be strictly increasing");
    }
    let n = x.len();
    let mean = x.iter().fold(T::zero(), |a, &v| a + v) / T::from_usize(n);
    let y: Vec<T> = x.iter().map(|&v| v - mean).collect();
    let ss = y.iter().fold(T::zero(), |a, &v| a + v * v);
    ops.mul::<T>(n as u64);
    ops.mem(2 * n as u64);
    let var = ss / T::from_usize(n - 1);
    if var <= T::zero() {
        return Ok(vec![T::zero(); freqs.len()]);
    }
    let two = T::from_f64(2.0);
    let denom = two * var;
    let trig_cost = 3 * T::TRANSCENDENTAL_COST;

    let mut out = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let w = T::from_f64(2.0 * PI * f);
        let (mut s2, mut c2) = (T::zero(), T::zero());
        for &ti in t {
            let a = two * w * ti;
            s2 = s2 + a.sin();
            c2 = c2 + a.cos();
        }
        let tau = s2.atan2(c2) / (two * w);
        let (mut yc, mut ys, mut cc, mut sn) = (T::zero(), T::zero(), T::zero(), T::zero());
        for (&ti, &yi) in t.iter().zip(&y) {
            let a = w * (ti - tau);
            let (s, c) = (a.sin(), a.cos());
            yc = yc + yi * c;
            ys = ys + yi * s;
            cc = cc + c * c;
            sn = sn + s * s;
        }
        let mut p = T::zero();
        if cc > T::zero() {
            p = p + yc * yc / cc;
        }
        if sn > T::zero() {
            p = p + ys * ys / sn;
        }
        out.push(p / denom);
        ops.mul::<T>(n as u64 * (7 + 2 * trig_cost) + 8);
        ops.mem(4 * n as u64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Explained sum of squares of a two-term sinusoid least-squares fit,
    /// solved from the 2x2 normal equations, over twice the variance.
    fn ls_oracle(t: &[f64], x: &[f64], f: f64) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let y: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let var = y.iter().map(|v| v * v).sum::<f64>() / (n - 1.0);
        let w = 2.0 * PI * f;
        let (mut cc, mut cs, mut ss, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(&y) {
            let (s, c) = (w * ti).sin_cos();
            cc += c * c;
            cs += c * s;
            ss += s * s;
            yc += yi * c;
            ys += yi * s;
        }
        let det = cc * ss - cs * cs;
        let a = (yc * ss - ys * cs) / det;
        let b = (ys * cc - yc * cs) / det;
        (a * yc + b * ys) / (2.0 * var)
    }

    #[test]
    fn sine_peak_at_f0() {
        let fs = 4.0;
        let t: Vec<f64> = (0..256).map(|i| i as f64 / fs).collect();
        let x: Vec<f64> = t.iter().map(|&ti| (2.0 * PI * 0.25 * ti).sin()).collect();
        let freqs: Vec<f64> = (1..=40).map(|k| k as f64 * 0.025).collect();
        let p = lomb_scargle(&t, &x, &freqs, &mut OpCounters::new()).unwrap();
        let best = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
        assert!((freqs[best] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_is_zero() {
        let t = [0.0, 0.7, 1.1, 2.0];
        let p = lomb_scargle(&t, &[3.0f64; 4], &[0.1, 0.2], &mut OpCounters::new()).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = OpCounters::new();
        assert!(lomb_scargle(&[0.0, 1.0, 1.0], &[1.0f64, 2.0, 3.0], &[0.1], &mut c).is_err());
        assert!(lomb_scargle(&[0.0], &[1.0f64], &[0.1], &mut c).is_err());
        assert!(lomb_scargle(&[0.0, 1.0], &[1.0f64, 2.0], &[], &mut c).is_err());
    }

    #[test]
    fn matches_least_squares_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let mut t = Vec::new();
            let mut acc = 0.0;
            for _ in 0..120 {
                acc += rng.random_range(0.4..1.2);
                t.push(acc);
            }
            let x: Vec<f64> = t.iter().map(|&ti| (0.9 * ti).sin() + rng.random_range(-0.5..0.5)).collect();
            let freqs: Vec<f64> = (1..50).map(|k| k as f64 * 0.01).collect();
            let p = lomb_scargle(&t, &x, &freqs, &mut OpCounters::new()).unwrap();
            for (pi, &f) in p.iter().zip(&freqs) {
                let want = ls_oracle(&t, &x, f);
                assert!((pi - want).abs() <= 1e-6 * want.abs().max(1e-12), "f={f} {pi} vs {want}");
            }
        }
    }

    #[test]
    fn fixed_point_tracks_float() {
        use crate::{Scalar, Q16};
        let t: Vec<f64> = (0..64).map(|i| i as f64 * 0.8 + 0.1 * (i % 3) as f64).collect();
        let x: Vec<f64> = t.iter().map(|&ti| 0.5 * (2.0 * PI * 0.2 * ti).sin()).collect();
        let freqs = [0.1, 0.2, 0.3];
        let pf = lomb_scargle(&t, &x, &freqs, &mut OpCounters::new()).unwrap();
        let tq: Vec<Q16> = t.iter().map(|&v| Q16::from_f64(v)).collect();
        let xq: Vec<Q16> = x.iter().map(|&v| Q16::from_f64(v)).collect();
        let mut c = OpCounters::new();
        let pq = lomb_scargle(&tq, &xq, &freqs, &mut c).unwrap();
        assert!(c.fxp_mul > 0 && c.fp_mul == 0);
        for (a, b) in pf.iter().zip(&pq) {
            assert!((a - b.to_f64()).abs() < 0.05 * pf[1], "{a} vs {b}");
        }
    }
}
