use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Scalar;

/// `y[n] = x[n] - mean(x[n-w+1..=n])`, replicating `x[0]` before the start.
pub fn moving_average_subtract<S: Scalar>(x: &[S], window: usize, ops: &mut OpCounters) -> Result<Vec<S>> {
    if window == 0 || window > x.len() {
        return domain(format!("window {window} must be in 1..={}", x.len()));
    }
    let inv = S::from_f64(1.0 / window as f64);
    let mut sum = S::zero();
    for _ in 0..window {
        sum = sum + x[0];
    }
    let mut out = Vec::with_capacity(x.len());
    for n in 0..x.len() {
        if n > 0 {
            let old = if n >= window { x[n - window] } else { x[0] };
            sum = sum + x[n] - old;
        }
        out.push(x[n] - sum * inv);
    }
    ops.mul::<S>(x.len() as u64);
    Ok(out)
}

/// Second-order section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub const IDENTITY: Biquad = Biquad { b0: 1.0, b1: 0.0, b2: 0.0, a1: 0.0, a2: 0.0 };

    /// Both poles strictly inside the unit circle (stability triangle).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    fn coefficients(&self) -> [f64; 5] {
        [self.b0, self.b1, self.b2, self.a1, self.a2]
    }
}

/// Runs `x` through the sections in order, direct form II transposed,
/// starting from zero state.
pub fn iir_biquad_cascade<S: Scalar>(x: &[S], sections: &[Biquad], check_stability: bool, ops: &mut OpCounters) -> Result<Vec<S>> {
    for (i, s) in sections.iter().enumerate() {
        if s.coefficients().iter().any(|c| !c.is_finite()) {
            return domain(format!("section {i} has non-finite coefficients"));
        }
        if check_stability && !s.is_stable() {
            return domain(format!("section {i} is unstable: a1={}, a2={}", s.a1, s.a2));
        }
    }
    let mut y = x.to_vec();
    for s in sections {
        let [b0, b1, b2, a1, a2] = s.coefficients().map(S::from_f64);
        let (mut s1, mut s2) = (S::zero(), S::zero());
        for v in y.iter_mut() {
            let xin = *v;
            let out = b0 * xin + s1;
            s1 = b1 * xin - a1 * out + s2;
            s2 = b2 * xin - a2 * out;
            *v = out;
        }
        ops.mul::<S>(5 * x.len() as u64);
    }
    Ok(y)
}

fn butterworth_q(order: usize) -> Result<Vec<f64>> {
    if order == 0 || !order.is_multiple_of(2) {
        return domain(format!("butterworth order must be even and positive, got {order}"));
    }
    Ok((0..order / 2).map(|k| 1.0 / (2.0 * (PI * (2 * k + 1) as f64 / (2 * order) as f64).cos())).collect())
}

fn check_cutoff(cutoff_hz: f64, fs: f64) -> Result<()> {
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return domain(format!("cutoff {cutoff_hz} Hz must lie in (0, {})", fs / 2.0));
    }
    Ok(())
}

/// Bilinear-transform Butterworth low-pass as cascaded biquads.
pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Vec<Biquad>> {
    check_cutoff(cutoff_hz, fs)?;
    let w0 = 2.0 * PI * cutoff_hz / fs;
    let (c, s) = (w0.cos(), w0.sin());
    Ok(butterworth_q(order)?
        .into_iter()
        .map(|q| {
            let alpha = s / (2.0 * q);
            let a0 = 1.0 + alpha;
            Biquad { b0: (1.0 - c) / 2.0 / a0, b1: (1.0 - c) / a0, b2: (1.0 - c) / 2.0 / a0, a1: -2.0 * c / a0, a2: (1.0 - alpha) / a0 }
        })
        .collect())
}

/// Bilinear-transform Butterworth high-pass as cascaded biquads.
pub fn butterworth_highpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Vec<Biquad>> {
    check_cutoff(cutoff_hz, fs)?;
    let w0 = 2.0 * PI * cutoff_hz / fs;
    let (c, s) = (w0.cos(), w0.sin());
    Ok(butterworth_q(order)?
        .into_iter()
        .map(|q| {
            let alpha = s / (2.0 * q);
            let a0 = 1.0 + alpha;
            Biquad { b0: (1.0 + c) / 2.0 / a0, b1: -(1.0 + c) / a0, b2: (1.0 + c) / 2.0 / a0, a1: -2.0 * c / a0, a2: (1.0 - alpha) / a0 }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q16;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops() -> OpCounters {
        OpCounters::new()
    }

    #[test]
    fn ma_constant_and_window_one() {
        let x = vec![3.5f64; 20];
        assert!(moving_average_subtract(&x, 7, &mut ops()).unwrap().iter().all(|&v| v == 0.0));
        let r = [1.0, -2.0, 5.0];
        assert_eq!(moving_average_subtract(&r, 1, &mut ops()).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn ma_hand_example() {
        let y = moving_average_subtract(&[1.0f64, 2.0, 3.0, 4.0], 2, &mut ops()).unwrap();
        assert_eq!(y, vec![0.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn ma_window_too_long() {
        assert!(moving_average_subtract(&[1.0f64, 2.0], 3, &mut ops()).is_err());
        assert!(moving_average_subtract(&[1.0f64, 2.0], 0, &mut ops()).is_err());
    }

    #[test]
    fn ma_fixed_point_counts_fxp() {
        let x: Vec<Q16> = (0..64).map(|i| Q16::from_f64((i as f64 * 0.1).sin())).collect();
        let mut c = ops();
        let y = moving_average_subtract(&x, 8, &mut c).unwrap();
        let yf = moving_average_subtract(&crate::scalar::to_f64_vec(&x), 8, &mut ops()).unwrap();
        for (a, b) in y.iter().zip(&yf) {
            assert!((a.to_f64() - b).abs() < 1e-3);
        }
        assert_eq!(c.fxp_mul, 64);
    }

    #[test]
    fn identity_section() {
        let x: Vec<f64> = (0..32).map(|i| (i as f64).cos()).collect();
        assert_eq!(iir_biquad_cascade(&x, &[Biquad::IDENTITY], true, &mut ops()).unwrap(), x);
    }

    #[test]
    fn one_pole_impulse_response() {
        let s = Biquad { b0: 1.0, b1: 0.0, b2: 0.0, a1: -0.5, a2: 0.0 };
        let mut x = vec![0.0f64; 8];
        x[0] = 1.0;
        let y = iir_biquad_cascade(&x, &[s], true, &mut ops()).unwrap();
        for (n, v) in y.iter().enumerate() {
            assert_eq!(*v, 0.5f64.powi(n as i32));
        }
    }

    #[test]
    fn unstable_section_rejected() {
        let s = Biquad { b0: 1.0, b1: 0.0, b2: 0.0, a1: -2.5, a2: 1.2 };
        assert!(iir_biquad_cascade(&[1.0f64], &[s], true, &mut ops()).is_err());
        assert!(iir_biquad_cascade(&[1.0f64], &[s], false, &mut ops()).is_ok());
    }

    fn difference_equation(x: &[f64], s: &Biquad) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for n in 0..x.len() {
            let xm = |k: usize| if n >= k { x[n - k] } else { 0.0 };
            let ym = |y: &[f64], k: usize| if n >= k { y[n - k] } else { 0.0 };
            y[n] = s.b0 * x[n] + s.b1 * xm(1) + s.b2 * xm(2) - s.a1 * ym(&y, 1) - s.a2 * ym(&y, 2);
        }
        y
    }

    #[test]
    fn random_cascade_matches_difference_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let sections: Vec<Biquad> = (0..2)
                .map(|_| {
                    let r: f64 = rng.random_range(0.1..0.95);
                    let th: f64 = rng.random_range(0.0..PI);
                    Biquad {
                        b0: rng.random_range(-1.0..1.0),
                        b1: rng.random_range(-1.0..1.0),
                        b2: rng.random_range(-1.0..1.0),
                        a1: -2.0 * r * th.cos(),
                        a2: r * r,
                    }
                })
                .collect();
            let x: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = iir_biquad_cascade(&x, &sections, true, &mut ops()).unwrap();
            let want = difference_equation(&difference_equation(&x, &sections[0]), &sections[1]);
            let diff = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-9, "{diff}");
        }
    }

    fn gain_at(sections: &[Biquad], f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let z1 = num_complex::Complex::new(w.cos(), -w.sin());
        let z2 = z1 * z1;
        sections.iter().map(|s| ((s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2)).norm()).product()
    }

    #[test]
    fn butterworth_cutoffs_are_minus_3db() {
        let lp = butterworth_lowpass(4, 40.0, 256.0).unwrap();
        let hp = butterworth_highpass(4, 0.5, 256.0).unwrap();
        assert!(lp.iter().chain(&hp).all(Biquad::is_stable));
        assert!((gain_at(&lp, 40.0, 256.0) - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((gain_at(&hp, 0.5, 256.0) - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((gain_at(&lp, 1.0, 256.0) - 1.0).abs() < 1e-6);
        assert!(gain_at(&lp, 100.0, 256.0) < 1e-2);
        assert!(butterworth_lowpass(3, 40.0, 256.0).is_err());
        assert!(butterworth_lowpass(4, 200.0, 256.0).is_err());
    }
}
