use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ops::OpCounters;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphMode {
    Erode,
    Dilate,
    /// Erosion followed by dilation.
    Open,
    /// Dilation followed by erosion.
    Close,
    /// `x - (open(x) + close(x)) / 2`.
    BaselineCorrect,
}

/// Centered sliding min (`want_min`) or max over `2h + 1` samples.
///
/// Monotonic deque: every index is pushed and popped at most once, so the
/// pass is O(n) whatever the window.
fn sliding_extreme<S: Scalar>(x: &[S], h: usize, want_min: bool, ops: &mut OpCounters) -> Vec<S> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(2 * h + 2);
    let mut next = 0usize;
    let (mut cmp, mut moves) = (0u64, 0u64);
    for i in 0..n {
        let hi = (i + h).min(n - 1);
        while next <= hi {
            let v = x[next];
            while let Some(&b) = dq.back() {
                cmp += 1;
                let dominated = if want_min { x[b] >= v } else { x[b] <= v };
                if !dominated {
                    break;
                }
                dq.pop_back();
                moves += 1;
            }
            dq.push_back(next);
            moves += 1;
            next += 1;
        }
        let lo = i.saturating_sub(h);
        while let Some(&f) = dq.front() {
            cmp += 1;
            if f >= lo {
                break;
            }
            dq.pop_front();
            moves += 1;
        }
        out.push(x[dq[0]]);
    }
    ops.branch(cmp);
    ops.mem(moves);
    out
}

/// Grayscale morphology with a flat structuring element of odd length `k`.
pub fn morph_filter<S: Scalar>(x: &[S], k: usize, mode: MorphMode, ops: &mut OpCounters) -> Result<Vec<S>> {
    if k.is_multiple_of(2) {
        return domain(format!("structuring element length must be odd, got {k}"));
    }
    if k > x.len() {
        return domain(format!("structuring element {k} longer than signal {}", x.len()));
    }
    let h = k / 2;
    Ok(match mode {
        MorphMode::Erode => sliding_extreme(x, h, true, ops),
        MorphMode::Dilate => sliding_extreme(x, h, false, ops),
        MorphMode::Open => {
            let e = sliding_extreme(x, h, true, ops);
            sliding_extreme(&e, h, false, ops)
        }
        MorphMode::Close => {
            let d = sliding_extreme(x, h, false, ops);
            sliding_extreme(&d, h, true, ops)
        }
        MorphMode::BaselineCorrect => {
            let open = morph_filter(x, k, MorphMode::Open, ops)?;
            let close = morph_filter(x, k, MorphMode::Close, ops)?;
            ops.mul::<S>(2 * x.len() as u64);
            let half = S::from_f64(0.5);
            x.iter().zip(open.iter().zip(&close)).map(|(&v, (&o, &c))| v - (o * half + c * half)).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(x: &[f64], k: usize, want_min: bool) -> Vec<f64> {
        let h = k / 2;
        (0..x.len())
            .map(|i| {
                let w = (i as isize - h as isize..=(i + h) as isize).map(|j| x[j.clamp(0, x.len() as isize - 1) as usize]);
                if want_min {
                    w.fold(f64::INFINITY, f64::min)
                } else {
                    w.fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect()
    }

    fn run(x: &[f64], k: usize, m: MorphMode) -> Vec<f64> {
        morph_filter(x, k, m, &mut OpCounters::new()).unwrap()
    }

    #[test]
    fn erode_example() {
        assert_eq!(run(&[5.0, 2.0, 7.0, 3.0, 8.0], 3, MorphMode::Erode), vec![2.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn dilate_constant() {
        assert_eq!(run(&[4.0; 9], 5, MorphMode::Dilate), vec![4.0; 9]);
    }

    #[test]
    fn rejects_bad_lengths() {
        let mut c = OpCounters::new();
        assert!(morph_filter(&[1.0f64, 2.0, 3.0], 2, MorphMode::Erode, &mut c).is_err());
        assert!(morph_filter(&[1.0f64, 2.0, 3.0], 5, MorphMode::Erode, &mut c).is_err());
    }

    #[test]
    fn counts_compares_and_moves() {
        let mut c = OpCounters::new();
        morph_filter(&[1.0f64, 3.0, 2.0, 5.0, 4.0], 3, MorphMode::Erode, &mut c).unwrap();
        assert!(c.branches > 0 && c.loads_stores > 0);
        assert!(c.branches >= c.loads_stores / 2);
    }

    #[test]
    fn fixed_point_baseline_correct_removes_offset() {
        use crate::Q15;
        let x: Vec<Q15> = (0..200).map(|i| Q15::from_f64(0.25 + if i % 50 == 0 { 0.5 } else { 0.0 })).collect();
        let y = morph_filter(&x, 11, MorphMode::BaselineCorrect, &mut OpCounters::new()).unwrap();
        assert!(y.iter().enumerate().all(|(i, v)| if i % 50 == 0 { v.to_f64() > 0.2 } else { v.to_f64().abs() < 1e-3 }));
    }

    proptest! {
        #[test]
        fn deque_matches_brute_force(x in prop::collection::vec(-50i32..50, 1..120), hk in 0usize..10) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let k = (2 * hk + 1).min(if x.len() % 2 == 1 { x.len() } else { x.len() - 1 }.max(1));
            prop_assert_eq!(run(&x, k, MorphMode::Erode), brute(&x, k, true));
            prop_assert_eq!(run(&x, k, MorphMode::Dilate), brute(&x, k, false));
            prop_assert_eq!(run(&x, k, MorphMode::Open), brute(&brute(&x, k, true), k, false));
            prop_assert_eq!(run(&x, k, MorphMode::Close), brute(&brute(&x, k, false), k, true));
        }

        #[test]
        fn dilation_is_dual_of_erosion(x in prop::collection::vec(-1e3f64..1e3, 5..80), hk in 0usize..2) {
            let k = 2 * hk + 1;
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let e: Vec<f64> = run(&neg, k, MorphMode::Erode).into_iter().map(|v| -v).collect();
            prop_assert_eq!(run(&x, k, MorphMode::Dilate), e);
        }

        #[test]
        fn opening_and_closing_idempotent(x in prop::collection::vec(-100i32..100, 9..100), hk in 0usize..4) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let k = 2 * hk + 1;
            let o = run(&x, k, MorphMode::Open);
            prop_assert_eq!(run(&o, k, MorphMode::Open), o);
            let c = run(&x, k, MorphMode::Close);
            prop_assert_eq!(run(&c, k, MorphMode::Close), c);
        }
    }
}
