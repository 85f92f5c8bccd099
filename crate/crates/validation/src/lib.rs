//! Independent reference implementations used by the acceptance suite.
//!
//! Each oracle is written from the textbook definition in plain `f64`
//! loops, sharing no code with the kernels it checks.

use biobench_core::dsp::{hz_to_mel, mel_to_hz, MorphMode};
use biobench_core::infer::{Activation, ConvBlock, DecisionTree, DenseLayer, Tensor2, TreeNode};
use num_complex::Complex;

/// Naive O(n^2) DFT without normalization.
pub fn dft(x: &[f64]) -> Vec<Complex<f64>> {
    let n = x.len();
    let tw: Vec<Complex<f64>> = (0..n).map(|j| Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * j as f64 / n as f64)).collect();
    (0..n).map(|k| x.iter().enumerate().map(|(j, &v)| tw[(j * k) % n] * v).sum()).collect()
}

fn brute_extreme(x: &[f64], h: usize, min: bool) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let w = &x[i.saturating_sub(h)..=(i + h).min(x.len() - 1)];
            w.iter().copied().fold(if min { f64::INFINITY } else { f64::NEG_INFINITY }, if min { f64::min } else { f64::max })
        })
        .collect()
}

/// Erosion and dilation by direct window scans, composed per mode.
pub fn brute_morph(x: &[f64], k: usize, mode: MorphMode) -> Vec<f64> {
    let h = k / 2;
    match mode {
        MorphMode::Erode => brute_extreme(x, h, true),
        MorphMode::Dilate => brute_extreme(x, h, false),
        MorphMode::Open => brute_extreme(&brute_extreme(x, h, true), h, false),
        MorphMode::Close => brute_extreme(&brute_extreme(x, h, false), h, true),
        MorphMode::BaselineCorrect => {
            let o = brute_morph(x, k, MorphMode::Open);
            let c = brute_morph(x, k, MorphMode::Close);
            x.iter().zip(o.iter().zip(&c)).map(|(&v, (&o, &c))| v - (o * 0.5 + c * 0.5)).collect()
        }
    }
}

/// Least-squares sinusoid fit: explained power over twice the variance.
pub fn lomb_oracle(t: &[f64], x: &[f64], f: f64) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let y: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var = y.iter().map(|v| v * v).sum::<f64>() / (n - 1.0);
    let w = 2.0 * std::f64::consts::PI * f;
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
    let a = (ss * yc - cs * ys) / det;
    let b = (cc * ys - cs * yc) / det;
    (a * yc + b * ys) / (2.0 * var)
}

/// MFCC computed directly from the definitions with a naive DFT.
pub fn mfcc_oracle(audio: &[f64], fs: f64, frame: usize, hop: usize, n_mels: usize, n_coeffs: usize) -> Vec<Vec<f64>> {
    let pi = std::f64::consts::PI;
    let bins = frame / 2 + 1;
    let (m_lo, m_hi) = (hz_to_mel(0.0), hz_to_mel(fs / 2.0));
    let edge = |i: usize| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_mels + 1) as f64);
    let weight = |m: usize, f: f64| {
        let (lo, mid, hi) = (edge(m), edge(m + 1), edge(m + 2));
        if f > lo && f <= mid {
            (f - lo) / (mid - lo)
        } else if f > mid && f < hi {
            (hi - f) / (hi - mid)
        } else {
            0.0
        }
    };
    let frames = 1 + (audio.len() - frame) / hop;
    (0..frames)
        .map(|fi| {
            let seg: Vec<f64> =
                (0..frame).map(|i| audio[fi * hop + i] * (0.5 - 0.5 * (2.0 * pi * i as f64 / frame as f64).cos())).collect();
            let spec = dft(&seg);
            let logmel: Vec<f64> = (0..n_mels)
                .map(|m| {
                    let e: f64 = (0..bins).map(|k| weight(m, k as f64 * fs / frame as f64) * spec[k].norm_sqr()).sum();
                    e.max(1e-10).ln()
                })
                .collect();
            (0..n_coeffs)
                .map(|k| logmel.iter().enumerate().map(|(m, v)| v * (pi * k as f64 * (m as f64 + 0.5) / n_mels as f64).cos()).sum())
                .collect()
        })
        .collect()
}

/// Positive-class probability of one tree, walked recursively from `node`.
pub fn tree_oracle(t: &DecisionTree, x: &[f64], node: usize) -> f64 {
    match &t.nodes[node] {
        TreeNode::Leaf { distribution } => distribution[1],
        TreeNode::Split { feature, threshold, left, right } => tree_oracle(t, x, if x[*feature] <= *threshold { *left } else { *right }),
    }
}

pub fn dense_oracle(layers: &[DenseLayer<f64>], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for l in layers {
        let mut y = vec![0.0; l.bias.len()];
        for o in 0..y.len() {
            y[o] = l.bias[o];
            for i in 0..h.len() {
                y[o] += l.weights[o][i] * h[i];
            }
        }
        match l.activation {
            Activation::Relu => y.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Softmax => {
                let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = y.iter().map(|v| (v - m).exp()).sum();
                y.iter_mut().for_each(|v| *v = (*v - m).exp() / s);
            }
            Activation::None => {}
        }
        h = y;
    }
    h
}

/// Convolution, batch norm, max-pool and ReLU, flattened channel-major.
pub fn conv_oracle(b: &ConvBlock<f64>, x: &Tensor2<f64>) -> Vec<f64> {
    let cl = x.len - b.kernel + 1;
    let pl = cl / b.pool;
    let mut out = Vec::new();
    for o in 0..b.out_channels {
        let mut pre = vec![0.0; cl];
        for t in 0..cl {
            let mut acc = 0.0;
            for i in 0..b.in_channels {
                for j in 0..b.kernel {
                    acc += b.weights[(o * b.in_channels + i) * b.kernel + j] * x.data[i * x.len + t + j];
                }
            }
            pre[t] = (acc - b.bn.mean[o]) * b.bn.gamma[o] / (b.bn.var[o] + b.bn.eps).sqrt() + b.bn.beta[o];
        }
        for p in 0..pl {
            out.push(pre[p * b.pool..(p + 1) * b.pool].iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0));
        }
    }
    out
}
