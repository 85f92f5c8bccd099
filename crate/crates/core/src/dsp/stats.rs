use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

/// Time-domain statistics over population moments.
///
/// `kurtosis` is the plain fourth standardized moment (3 for a Gaussian).
/// Skewness and kurtosis are `None` for a zero-variance input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatFeatures {
    pub mean: f64,
    pub rms: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub zero_crossing_rate: f64,
    pub hjorth_activity: f64,
}

impl StatFeatures {
    /// Flattened values with undefined moments mapped to 0.
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.mean,
            self.rms,
            self.variance,
            self.skewness.unwrap_or(0.0),
            self.kurtosis.unwrap_or(0.0),
            self.zero_crossing_rate,
            self.hjorth_activity,
        ]
    }
}

pub fn stat_features<T: Real>(x: &[T], ops: &mut OpCounters) -> Result<StatFeatures> {
    let n = x.len();
    if n < 2 {
        return domain(format!("need at least two samples, got {n}"));
    }
    let nn = T::from_usize(n);
    let mean = x.iter().fold(T::zero(), |a, &v| a + v) / nn;
    let (mut m2, mut m3, mut m4, mut sq) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 = m2 + d2;
        m3 = m3 + d2 * d;
        m4 = m4 + d2 * d2;
        sq = sq + v * v;
    }
    ops.mul::<T>(4 * n as u64);
    ops.mem(n as u64);
    let (m2, m3, m4) = (m2 / nn, m3 / nn, m4 / nn);
    let rms = (sq / nn).sqrt();
    let crossings = x.windows(2).filter(|w| (w[0] < T::zero()) != (w[1] < T::zero())).count();
    ops.branch(n as u64);
    let (skewness, kurtosis) = if m2 > T::zero() {
        let sd = m2.sqrt();
        ops.mul::<T>(4 + T::TRANSCENDENTAL_COST);
        (Some((m3 / (m2 * sd)).to_f64()), Some((m4 / (m2 * m2)).to_f64()))
    } else {
        (None, None)
    };
    Ok(StatFeatures {
        mean: mean.to_f64(),
        rms: rms.to_f64(),
        variance: m2.to_f64(),
        skewness,
        kurtosis,
        zero_crossing_rate: crossings as f64 / (n - 1) as f64,
        hjorth_activity: m2.to_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(x: &[f64]) -> StatFeatures {
        stat_features(x, &mut OpCounters::new()).unwrap()
    }

    #[test]
    fn symmetric_has_zero_skew() {
        assert_eq!(f(&[-1.0, 0.0, 1.0]).skewness, Some(0.0));
    }

    #[test]
    fn alternating_zcr() {
        assert_eq!(f(&[1.0, -1.0, 1.0, -1.0]).zero_crossing_rate, 1.0);
        assert_eq!(f(&[1.0, 2.0, 3.0]).zero_crossing_rate, 0.0);
    }

    #[test]
    fn constant_has_undefined_moments() {
        let s = f(&[2.0; 5]);
        assert_eq!(s.skewness, None);
        assert_eq!(s.kurtosis, None);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.rms, 2.0);
        assert!(stat_features(&[1.0f64], &mut OpCounters::new()).is_err());
    }

    #[test]
    fn random_vs_direct_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        for _ in 0..1000 {
            let n = rng.random_range(2..60);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let nf = n as f64;
            let mean = x.iter().sum::<f64>() / nf;
            let c = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / nf;
            let var = c(2);
            let s = f(&x);
            assert!(rel(s.mean, mean) < 1e-9 || (s.mean - mean).abs() < 1e-12);
            assert!(rel(s.variance, var) < 1e-9);
            assert!(rel(s.rms, (x.iter().map(|v| v * v).sum::<f64>() / nf).sqrt()) < 1e-9);
            assert!(rel(s.kurtosis.unwrap(), c(4) / var.powi(2)) < 1e-9);
            let sk = c(3) / var.powf(1.5);
            assert!(rel(s.skewness.unwrap(), sk) < 1e-9 || (s.skewness.unwrap() - sk).abs() < 1e-12);
            assert_eq!(s.hjorth_activity, s.variance);
        }
    }
}
