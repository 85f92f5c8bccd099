//! Small dense symmetric eigen-solver used by whitening and decorrelation.

use crate::error::{Error, Result};

/// Eigen-decomposition of the symmetric `n x n` row-major matrix `a` by
/// cyclic Jacobi rotations. Returns eigenvalues in descending order and the
/// matching unit eigenvectors as rows.
pub fn sym_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if a.len() != n * n {
        return Err(Error::Domain(format!("{} entries for a {n}x{n} matrix", a.len())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b * n + b].total_cmp(&m[a * n + a]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    Ok((values, vectors))
}

/// `a * b` for row-major `a: r x k`, `b: k x c`.
pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let c = b.first().map_or(0, Vec::len);
    a.iter().map(|row| (0..c).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect()).collect()
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let c = a.first().map_or(0, Vec::len);
    (0..c).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// `(W W^T)^{-1/2} W`, which makes the rows of `W` orthonormal.
pub fn symmetric_decorrelate(w: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = w.len();
    let wwt = matmul(w, &transpose(w));
    let (vals, vecs) = sym_eigen(&wwt.concat(), k)?;
    if vals.iter().any(|&l| l <= 1e-12 * vals[0].max(f64::MIN_POSITIVE)) {
        return Err(Error::Numeric("unmixing rows became linearly dependent".into()));
    }
    let inv_sqrt: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| (0..k).map(|e| vecs[e][i] * vecs[e][j] / vals[e].sqrt()).sum()).collect()).collect();
    Ok(matmul(&inv_sqrt, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix() {
        let (v, e) = sym_eigen(&[1.0, 0.0, 0.0, 3.0], 2).unwrap();
        assert_eq!(v, vec![3.0, 1.0]);
        assert!((e[0][1].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in [2usize, 5, 16] {
            let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let a = matmul(&b, &transpose(&b));
            let (vals, vecs) = sym_eigen(&a.concat(), n).unwrap();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]));
            for i in 0..n {
                for j in 0..n {
                    let r: f64 = (0..n).map(|e| vals[e] * vecs[e][i] * vecs[e][j]).sum();
                    assert!((r - a[i][j]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn decorrelation_gives_orthonormal_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let d = symmetric_decorrelate(&w).unwrap();
        let g = matmul(&d, &transpose(&d));
        for i in 0..4 {
            for j in 0..4 {
                assert!((g[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }
}
