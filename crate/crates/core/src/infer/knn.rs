use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BinaryDecision;
use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Real;
use crate::scalar::Scalar;

/// Labelled 3-D feature points; `true` marks fear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct KnnTrainingSet<T> {
    pub points: Vec<[T; 3]>,
    pub labels: Vec<bool>,
}

pub const DEFAULT_TRAINING_POINTS: usize = 685;

impl<T: Real> KnnTrainingSet<T> {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(crate::Error::Config("KNN training set is empty".into()));
        }
        if self.points.len() != self.labels.len() {
            return Err(crate::Error::Config(format!("{} points but {} labels", self.points.len(), self.labels.len())));
        }
        Ok(())
    }

    /// Neighbour count `floor(sqrt(n))`.
    pub fn k(&self) -> usize {
        ((self.points.len() as f64).sqrt().floor() as usize).max(1)
    }

    /// Two labelled Gaussian clusters around `+-separation/2` on each axis.
    pub fn synthetic<R: Rng>(rng: &mut R, n: usize, separation: f64) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let fear = i % 2 == 1;
            let c = if fear { separation / 2.0 } else { -separation / 2.0 };
            let mut p = [T::zero(); 3];
            for v in &mut p {
                let z: f64 = StandardNormal.sample(rng);
                *v = T::from_f64(c + z);
            }
            points.push(p);
            labels.push(fear);
        }
        KnnTrainingSet { points, labels }
    }
}

/// The `k` smallest entries found by `k` passes of selection sort.
///
/// Entries are ordered by value and then by index, so ties resolve to the
/// lower index.
pub fn partial_select_k<S: Scalar>(d: &[S], k: usize, ops: &mut OpCounters) -> Result<(Vec<S>, Vec<usize>)> {
    if k == 0 || k > d.len() {
        return domain(format!("k = {k} outside 1..={}", d.len()));
    }
    let mut v: Vec<(S, usize)> = d.iter().copied().zip(0..).collect();
    let mut cmp = 0u64;
    for i in 0..k {
        let mut best = i;
        for j in i + 1..v.len() {
            cmp += 1;
            let (a, b) = (v[j], v[best]);
            if a.0 < b.0 || (a.0 == b.0 && a.1 < b.1) {
                best = j;
            }
        }
        v.swap(i, best);
    }
    ops.branch(cmp);
    ops.mem(cmp + 4 * k as u64);
    v.truncate(k);
    Ok(v.into_iter().unzip())
}

/// Fraction of fear labels among the `floor(sqrt(n))` nearest points.
pub fn knn_fear_predict<T: Real>(train: &KnnTrainingSet<T>, x: &[T; 3], ops: &mut OpCounters) -> Result<BinaryDecision> {
    if train.points.is_empty() {
        return domain("empty training set");
    }
    if x.iter().any(|v| !v.is_finite()) || train.points.iter().flatten().any(|v| !v.is_finite()) {
        return domain("non-finite KNN feature");
    }
    let d: Vec<T> = train.points.iter().map(|p| p.iter().zip(x).fold(T::zero(), |a, (&u, &v)| a + (u - v) * (u - v))).collect();
    ops.mac::<T>(3 * d.len() as u64);
    ops.mem(4 * d.len() as u64);
    let k = train.k();
    let (_, idx) = partial_select_k(&d, k, ops)?;
    let fear = idx.iter().filter(|&&i| train.labels[i]).count();
    let frac = fear as f64 / k as f64;
    Ok(BinaryDecision { score: frac, positive: frac > 0.5 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn select_example() {
        let (v, i) = partial_select_k(&[5.0f32, 1.0, 4.0, 2.0], 2, &mut OpCounters::new()).unwrap();
        assert_eq!(v, vec![1.0, 2.0]);
        assert_eq!(i, vec![1, 3]);
    }

    #[test]
    fn full_k_sorts_and_ties_keep_order() {
        let (v, _) = partial_select_k(&[3.0f64, -1.0, 2.0, 0.5], 4, &mut OpCounters::new()).unwrap();
        assert_eq!(v, vec![-1.0, 0.5, 2.0, 3.0]);
        let (_, i) = partial_select_k(&[7.0f64; 6], 4, &mut OpCounters::new()).unwrap();
        assert_eq!(i, vec![0, 1, 2, 3]);
        assert!(partial_select_k(&[1.0f64], 0, &mut OpCounters::new()).is_err());
        assert!(partial_select_k(&[1.0f64], 2, &mut OpCounters::new()).is_err());
    }

    #[test]
    fn default_k() {
        let t = KnnTrainingSet::<f32>::synthetic(&mut ChaCha8Rng::seed_from_u64(0), DEFAULT_TRAINING_POINTS, 2.0);
        assert_eq!(t.k(), 26);
    }

    #[test]
    fn all_fear() {
        let t =
            KnnTrainingSet { points: vec![[0.0f64, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 0.0, 1.0], [5.0, 5.0, 5.0]], labels: vec![true; 4] };
        let p = knn_fear_predict(&t, &[0.1, 0.1, 0.1], &mut OpCounters::new()).unwrap();
        assert_eq!(p, BinaryDecision { score: 1.0, positive: true });
        assert!(knn_fear_predict(&t, &[f64::NAN, 0.0, 0.0], &mut OpCounters::new()).is_err());
    }

    fn oracle(t: &KnnTrainingSet<f64>, x: &[f64; 3]) -> f64 {
        let mut d: Vec<(f64, usize)> = t.points.iter().enumerate().map(|(i, p)| ((0..3).map(|j| (p[j] - x[j]).powi(2)).sum(), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = (t.points.len() as f64).sqrt() as usize;
        d[..k].iter().filter(|(_, i)| t.labels[*i]).count() as f64 / k as f64
    }

    #[test]
    fn matches_exhaustive_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = KnnTrainingSet::<f64>::synthetic(&mut rng, 100, 1.0);
        for _ in 0..300 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let got = knn_fear_predict(&t, &x, &mut OpCounters::new()).unwrap();
            let want = oracle(&t, &x);
            assert_eq!(got.score, want);
            assert_eq!(got.positive, want > 0.5);
        }
    }

    #[test]
    fn sorting_dominates_counts() {
        let t = KnnTrainingSet::<f32>::synthetic(&mut ChaCha8Rng::seed_from_u64(1), 685, 2.0);
        let mut c = OpCounters::new();
        knn_fear_predict(&t, &[0.0, 0.0, 0.0], &mut c).unwrap();
        assert_eq!(c.dominant(), Some(crate::OpCategory::Branches));
    }

    proptest! {
        #[test]
        fn prefix_of_stable_sort(d in prop::collection::vec(-20i32..20, 1..80), kk in 0usize..80) {
            let d: Vec<f64> = d.into_iter().map(f64::from).collect();
            let k = kk % d.len() + 1;
            let (v, i) = partial_select_k(&d, k, &mut OpCounters::new()).unwrap();
            let mut s: Vec<(f64, usize)> = d.iter().copied().zip(0..).collect();
            s.sort_by(|a, b| a.0.total_cmp(&b.0));
            prop_assert_eq!(v, s[..k].iter().map(|p| p.0).collect::<Vec<_>>());
            prop_assert_eq!(i, s[..k].iter().map(|p| p.1).collect::<Vec<_>>());
        }

        #[test]
        fn class_invariant_under_scaling(seed in 0u64..1000, e in -3i32..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = KnnTrainingSet::<f64>::synthetic(&mut rng, 49, 1.0);
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let c = 2f64.powi(e);
            let ts = KnnTrainingSet { points: t.points.iter().map(|p| p.map(|v| v * c)).collect(), labels: t.labels.clone() };
            let a = knn_fear_predict(&t, &x, &mut OpCounters::new()).unwrap();
            let b = knn_fear_predict(&ts, &x.map(|v| v * c), &mut OpCounters::new()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
