use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{matmul, sym_eigen, symmetric_decorrelate};
use crate::error::{domain, Error, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcaOptions {
    pub n_components: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl IcaOptions {
    pub fn new(n_components: usize) -> Self {
        IcaOptions { n_components, max_iter: 200, tol: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct IcaResult<T> {
    /// `n_components x channels`; applied to mean-removed data.
    pub unmixing: Vec<Vec<T>>,
    pub sources: Vec<Vec<T>>,
    pub mean: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// `out[r] = sum_c a[r][c] * x[c]` across all samples, in `T`.
fn apply<T: Real>(a: &[Vec<T>], x: &[Vec<T>], ops: &mut OpCounters) -> Vec<Vec<T>> {
    let n = x.first().map_or(0, Vec::len);
    let out = a
        .iter()
        .map(|row| {
            let mut y = vec![T::zero(); n];
            for (&w, xr) in row.iter().zip(x) {
                for (yi, &xi) in y.iter_mut().zip(xr) {
                    *yi = *yi + w * xi;
                }
            }
            y
        })
        .collect();
    ops.mac::<T>((a.len() * x.len() * n) as u64);
    ops.mem((a.len() * x.len() * n) as u64);
    out
}

fn to_t<T: Real>(m: &[Vec<f64>]) -> Vec<Vec<T>> {
    m.iter().map(|r| r.iter().map(|&v| T::from_f64(v)).collect()).collect()
}

/// Symmetric FastICA with a `tanh` contrast on `x` (`channels x samples`).
///
/// Data are centered and whitened through the covariance eigenvectors;
/// iterations stop once every row of the unmixing matrix moves less than
/// `tol` in direction.
pub fn fastica_unmix<T: Real>(x: &[Vec<T>], opts: &IcaOptions, ops: &mut OpCounters) -> Result<IcaResult<T>> {
    let ch = x.len();
    let k = opts.n_components;
    if k == 0 || k > ch {
        return domain(format!("need 1 <= n_components <= {ch}, got {k}"));
    }
    let n = x[0].len();
    if x.iter().any(|r| r.len() != n) {
        return domain("channels differ in length");
    }
    if n <= ch {
        return domain(format!("need more samples than channels ({n} <= {ch})"));
    }
    let nt = T::from_usize(n);
    let mean: Vec<T> = x.iter().map(|r| r.iter().fold(T::zero(), |a, &v| a + v) / nt).collect();
    let xc: Vec<Vec<T>> = x.iter().zip(&mean).map(|(r, &m)| r.iter().map(|&v| v - m).collect()).collect();

    let mut cov = vec![0.0f64; ch * ch];
    for i in 0..ch {
        for j in i..ch {
            let s = xc[i].iter().zip(&xc[j]).fold(T::zero(), |a, (&u, &v)| a + u * v).to_f64() / n as f64;
            cov[i * ch + j] = s;
            cov[j * ch + i] = s;
        }
    }
    ops.mac::<T>((ch * (ch + 1) / 2 * n) as u64);
    let (vals, vecs) = sym_eigen(&cov, ch)?;
    if vals[k - 1] <= 1e-10 * vals[0].max(f64::MIN_POSITIVE) || vals[0] <= 0.0 {
        return Err(Error::Numeric("covariance is singular in the requested subspace".into()));
    }
    let whiten: Vec<Vec<f64>> = (0..k).map(|e| vecs[e].iter().map(|v| v / vals[e].sqrt()).collect()).collect();
    let z = apply(&to_t::<T>(&whiten), &xc, ops);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let w0: Vec<Vec<f64>> = (0..k).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut w = symmetric_decorrelate(&w0)?;
    let mut converged = false;
    let mut iterations = 0;
    let inv_n = 1.0 / n as f64;
    while iterations < opts.max_iter {
        iterations += 1;
        let wt = to_t::<T>(&w);
        let mut g = apply(&wt, &z, ops);
        let mut gprime = vec![0.0f64; k];
        for (gi, gp) in g.iter_mut().zip(gprime.iter_mut()) {
            let mut acc = T::zero();
            for v in gi.iter_mut() {
                let t = v.tanh();
                acc = acc + (T::one() - t * t);
                *v = t;
            }
            *gp = acc.to_f64() * inv_n;
        }
        ops.mul::<T>((k * n) as u64 * (1 + T::TRANSCENDENTAL_COST));
        let mut next = vec![vec![0.0f64; k]; k];
        for i in 0..k {
            for j in 0..k {
                let s = g[i].iter().zip(&z[j]).fold(T::zero(), |a, (&u, &v)| a + u * v).to_f64();
                next[i][j] = s * inv_n - gprime[i] * w[i][j];
            }
        }
        ops.mac::<T>((k * k * n) as u64);
        ops.mem((2 * k * k * n) as u64);
        let next = symmetric_decorrelate(&next)?;
        let lim = (0..k).map(|i| (1.0 - next[i].iter().zip(&w[i]).map(|(a, b)| a * b).sum::<f64>().abs()).abs()).fold(0.0, f64::max);
        ops.branch(k as u64 + 1);
        w = next;
        if !lim.is_finite() {
            return Err(Error::Numeric("FastICA diverged".into()));
        }
        if lim < opts.tol {
            converged = true;
            break;
        }
    }
    let unmixing_f = matmul(&w, &whiten);
    let unmixing = to_t::<T>(&unmixing_f);
    let sources = apply(&to_t::<T>(&w), &z, ops);
    Ok(IcaResult { unmixing, sources, mean, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma).powi(2);
            sbb += (y - mb).powi(2);
        }
        sab / (saa * sbb).sqrt()
    }

    fn best_corr(rec: &[Vec<f64>], truth: &[f64]) -> f64 {
        rec.iter().map(|r| corr(r, truth).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn white_binary_sources() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<Vec<f64>> = (0..2).map(|_| (0..2000).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()).collect();
        let r = fastica_unmix(&s, &IcaOptions::new(2), &mut OpCounters::new()).unwrap();
        assert!(r.converged);
        for src in &s {
            assert!(best_corr(&r.sources, src) >= 0.95);
        }
    }

    #[test]
    fn single_component_from_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Vec<f64> = (0..500).map(|i| (i as f64 * 0.05).sin() + 0.1 * rng.random_range(-1.0..1.0)).collect();
        let x: Vec<Vec<f64>> = [1.0, -2.0, 0.5].iter().map(|a| s.iter().map(|v| a * v).collect()).collect();
        let r = fastica_unmix(&x, &IcaOptions::new(1), &mut OpCounters::new()).unwrap();
        assert!(corr(&r.sources[0], &s).abs() >= 0.99);
    }

    #[test]
    fn uniform_recovered_next_to_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gauss: Vec<f64> = (0..3000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let unif: Vec<f64> = (0..3000).map(|_| rng.random_range(-1.7..1.7)).collect();
        let r = fastica_unmix(&[gauss, unif.clone()], &IcaOptions::new(2), &mut OpCounters::new()).unwrap();
        assert!(best_corr(&r.sources, &unif) >= 0.95);
    }

    #[test]
    fn errors() {
        let mut c = OpCounters::new();
        let row: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        assert!(matches!(fastica_unmix(&[row.clone(), row.clone()], &IcaOptions::new(2), &mut c), Err(Error::Numeric(_))));
        assert!(fastica_unmix(std::slice::from_ref(&row), &IcaOptions::new(2), &mut c).is_err());
        assert!(fastica_unmix(&[vec![1.0, 2.0], vec![2.0, 1.0]], &IcaOptions::new(1), &mut c).is_err());
    }

    #[test]
    fn flags_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<Vec<f64>> = (0..3).map(|_| (0..300).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let r = fastica_unmix(&x, &IcaOptions { max_iter: 1, tol: 1e-12, ..IcaOptions::new(3) }, &mut OpCounters::new()).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn f32_counts_fp_mac() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<Vec<f32>> = (0..4).map(|_| (0..400).map(|_| rng.random_range(-1.0f32..1.0)).collect()).collect();
        let mut c = OpCounters::new();
        fastica_unmix(&x, &IcaOptions::new(4), &mut c).unwrap();
        assert_eq!(c.dominant(), Some(crate::OpCategory::FpMac));
    }
}
