use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    None,
    Softmax,
}

/// Fully connected layer, `weights[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct DenseLayer<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> DenseLayer<T> {
    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.inputs();
        if self.weights.is_empty() || n == 0 || self.weights.iter().any(|r| r.len() != n) {
            return Err(Error::Config("dense weights are empty or ragged".into()));
        }
        if self.bias.len() != self.outputs() {
            return Err(Error::Config(format!("{} biases for {} outputs", self.bias.len(), self.outputs())));
        }
        Ok(())
    }

    /// Weights uniform in `[-scale, scale]`, zero bias.
    pub fn random<R: Rng>(rng: &mut R, n_in: usize, n_out: usize, scale: f64, activation: Activation) -> Self {
        DenseLayer {
            weights: (0..n_out).map(|_| (0..n_in).map(|_| T::from_f64(rng.random_range(-scale..=scale))).collect()).collect(),
            bias: vec![T::zero(); n_out],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.outputs() * (self.inputs() + 1)
    }

    pub fn cast<U: Real>(&self) -> DenseLayer<U> {
        DenseLayer {
            weights: self.weights.iter().map(|r| crate::scalar::cast_slice::<T, U>(r)).collect(),
            bias: crate::scalar::cast_slice::<T, U>(&self.bias),
            activation: self.activation,
        }
    }

    pub fn forward(&self, x: &[T], ops: &mut OpCounters) -> Result<Vec<T>> {
        if x.len() != self.inputs() {
            return domain(format!("dense layer expects {} inputs, got {}", self.inputs(), x.len()));
        }
        let mut y: Vec<T> =
            self.weights.iter().zip(&self.bias).map(|(row, &b)| row.iter().zip(x).fold(b, |a, (&w, &v)| a + w * v)).collect();
        ops.mac::<T>((self.outputs() * self.inputs()) as u64);
        ops.mem((self.outputs() * (self.inputs() + 1)) as u64);
        apply_activation(&mut y, self.activation, ops);
        Ok(y)
    }
}

pub(crate) fn apply_activation<T: Real>(y: &mut [T], act: Activation, ops: &mut OpCounters) {
    match act {
        Activation::None => {}
        Activation::Relu => {
            for v in y.iter_mut() {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
            ops.branch(y.len() as u64);
        }
        Activation::Softmax => {
            let m = y.iter().copied().fold(y[0], T::max_of);
            let mut s = T::zero();
            for v in y.iter_mut() {
                *v = (*v - m).exp();
                s = s + *v;
            }
            for v in y.iter_mut() {
                *v = *v / s;
            }
            ops.mul::<T>(y.len() as u64 * (1 + T::TRANSCENDENTAL_COST));
            ops.branch(y.len() as u64);
        }
    }
}

/// Dense forward pass through `layers` in order.
pub fn mlp_forward<T: Real>(layers: &[DenseLayer<T>], x: &[T], ops: &mut OpCounters) -> Result<Vec<T>> {
    let mut h = x.to_vec();
    for l in layers {
        h = l.forward(&h, ops)?;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_passthrough() {
        let l = DenseLayer {
            weights: (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            bias: vec![0.0; 4],
            activation: Activation::None,
        };
        let x = [0.5f64, -1.0, 3.0, 2.0];
        assert_eq!(mlp_forward(&[l], &x, &mut OpCounters::new()).unwrap(), x.to_vec());
    }

    #[test]
    fn softmax_normalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let l: DenseLayer<f64> = DenseLayer::random(&mut rng, 5, 7, 3.0, Activation::Softmax);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y = l.forward(&x, &mut OpCounters::new()).unwrap();
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(y.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn shape_mismatch() {
        let l: DenseLayer<f64> = DenseLayer::random(&mut ChaCha8Rng::seed_from_u64(0), 3, 2, 1.0, Activation::Relu);
        assert!(mlp_forward(&[l.clone(), l], &[1.0, 2.0, 3.0], &mut OpCounters::new()).is_err());
    }

    #[test]
    fn two_layers_match_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mut l1: DenseLayer<f64> = DenseLayer::random(&mut rng, 6, 9, 1.0, Activation::Relu);
            l1.bias = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l2: DenseLayer<f64> = DenseLayer::random(&mut rng, 9, 3, 1.0, Activation::None);
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut h = [0.0; 9];
            for i in 0..9 {
                let mut s = l1.bias[i];
                for j in 0..6 {
                    s += l1.weights[i][j] * x[j];
                }
                h[i] = if s > 0.0 { s } else { 0.0 };
            }
            let mut want = vec![0.0; 3];
            for i in 0..3 {
                for j in 0..9 {
                    want[i] += l2.weights[i][j] * h[j];
                }
            }
            let got = mlp_forward(&[l1, l2], &x, &mut OpCounters::new()).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9);
            }
        }
    }
}
