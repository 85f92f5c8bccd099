use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BinaryDecision;
use crate::error::{domain, Error, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SvmKernel {
    Linear,
    Rbf { gamma: f64 },
}

/// Kernel SVM in dual form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct SvmModel<T> {
    pub kernel: SvmKernel,
    pub support_vectors: Vec<Vec<T>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coef: Vec<T>,
    pub bias: T,
}

impl<T: Real> SvmModel<T> {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.support_vectors.is_empty() {
            return Err(Error::Config("SVM has no support vectors".into()));
        }
        if self.dual_coef.len() != self.support_vectors.len() {
            return Err(Error::Config(format!("{} coefficients for {} support vectors", self.dual_coef.len(), self.support_vectors.len())));
        }
        let d = self.dim();
        if self.support_vectors.iter().any(|s| s.len() != d) {
            return Err(Error::Config("support vectors differ in dimension".into()));
        }
        if !self.dual_coef.iter().all(|a| a.is_finite()) || !self.bias.is_finite() {
            return Err(Error::Config("non-finite SVM coefficient".into()));
        }
        if let SvmKernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0) {
                return Err(Error::Config(format!("RBF gamma must be positive, got {gamma}")));
            }
        }
        Ok(())
    }

    /// Random model for synthetic benchmarks; coefficients in `[-1, 1]`.
    pub fn random<R: Rng>(rng: &mut R, n_sv: usize, dim: usize, kernel: SvmKernel) -> Self {
        SvmModel {
            kernel,
            support_vectors: (0..n_sv).map(|_| (0..dim).map(|_| T::from_f64(rng.random_range(-1.0..1.0))).collect()).collect(),
            dual_coef: (0..n_sv).map(|_| T::from_f64(rng.random_range(-1.0..1.0))).collect(),
            bias: T::from_f64(rng.random_range(-0.5..0.5)),
        }
    }

    pub fn cast<U: Real>(&self) -> SvmModel<U> {
        let c = |v: &T| U::from_f64(v.to_f64());
        SvmModel {
            kernel: self.kernel,
            support_vectors: self.support_vectors.iter().map(|s| s.iter().map(c).collect()).collect(),
            dual_coef: self.dual_coef.iter().map(c).collect(),
            bias: c(&self.bias),
        }
    }
}

/// `sum_i coef_i K(s_i, x) + b`; positive iff the score is above zero.
pub fn svm_predict<T: Real>(model: &SvmModel<T>, x: &[T], ops: &mut OpCounters) -> Result<BinaryDecision> {
    if x.len() != model.dim() {
        return domain(format!("feature vector has {} entries, model expects {}", x.len(), model.dim()));
    }
    let d = x.len() as u64;
    let mut score = model.bias;
    for (sv, &coef) in model.support_vectors.iter().zip(&model.dual_coef) {
        let k = match model.kernel {
            SvmKernel::Linear => sv.iter().zip(x).fold(T::zero(), |a, (&s, &v)| a + s * v),
            SvmKernel::Rbf { gamma } => {
                let d2 = sv.iter().zip(x).fold(T::zero(), |a, (&s, &v)| {
                    let e = s - v;
                    a + e * e
                });
                ops.mul::<T>(1 + T::TRANSCENDENTAL_COST);
                (-(T::from_f64(gamma) * d2)).exp()
            }
        };
        score = score + coef * k;
    }
    let n = model.support_vectors.len() as u64;
    ops.mac::<T>(n * (d + 1));
    ops.mem(n * d);
    ops.branch(1);
    let score = score.to_f64();
    Ok(BinaryDecision { score, positive: score > 0.0 })
}
