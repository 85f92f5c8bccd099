use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, DenseLayer};
use crate::error::{domain, Error, Result};
use crate::fxp::{q_mac, MacAcc, QFormat, QValue};
use crate::ops::OpCounters;
use crate::scalar::{Real, Scalar};
use crate::Q15;

/// Channel-major 2-D array: `data[c * len + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct Tensor2<T> {
    pub channels: usize,
    pub len: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor2<T> {
    pub fn new(channels: usize, len: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * len {
            return domain(format!("{} values for a {channels}x{len} tensor", data.len()));
        }
        Ok(Tensor2 { channels, len, data })
    }

    pub fn zeros(channels: usize, len: usize) -> Self {
        Tensor2 { channels, len, data: vec![T::zero(); channels * len] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return domain("ragged rows");
        }
        Ok(Tensor2 { channels: rows.len(), len, data: rows.concat() })
    }

    #[inline]
    pub fn row(&self, c: usize) -> &[T] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn cast<U: Scalar>(&self) -> Tensor2<U> {
        Tensor2 { channels: self.channels, len: self.len, data: crate::scalar::cast_slice(&self.data) }
    }
}

/// Inference-form batch normalization per output channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub eps: f64,
}

impl<T: Real> BatchNorm<T> {
    pub fn identity(channels: usize) -> Self {
        BatchNorm {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
            eps: 0.0,
        }
    }

    /// `gamma / sqrt(var + eps)` for channel `c`.
    pub fn scale(&self, c: usize) -> T {
        self.gamma[c] / (self.var[c] + T::from_f64(self.eps)).sqrt()
    }

    pub fn inv_std(&self, c: usize) -> T {
        T::one() / (self.var[c] + T::from_f64(self.eps)).sqrt()
    }
}

/// Valid 1-D convolution, batch norm, ReLU and max-pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct ConvBlock<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// `weights[(o * in_channels + i) * kernel + j]`.
    pub weights: Vec<T>,
    pub bn: BatchNorm<T>,
    pub pool: usize,
}

/// Intermediate values of one block kept for gradient computation.
#[derive(Debug, Clone)]
pub struct BlockCache<T> {
    pub input: Tensor2<T>,
    /// After batch norm, before ReLU.
    pub pre_activation: Tensor2<T>,
    /// Convolution output before batch norm.
    pub conv: Tensor2<T>,
    /// For each pooled output, the winning position in `pre_activation`
    /// (first on ties).
    pub argmax: Vec<usize>,
    pub output: Tensor2<T>,
}

impl<T: Real> ConvBlock<T> {
    #[inline]
    pub fn w(&self, o: usize, i: usize, j: usize) -> T {
        self.weights[(o * self.in_channels + i) * self.kernel + j]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.kernel == 0 || self.pool == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return bad("conv block has a zero dimension".into());
        }
        if self.weights.len() != self.out_channels * self.in_channels * self.kernel {
            return bad(format!(
                "conv block has {} weights, expected {}",
                self.weights.len(),
                self.out_channels * self.in_channels * self.kernel
            ));
        }
        let bn = &self.bn;
        if [bn.gamma.len(), bn.beta.len(), bn.mean.len(), bn.var.len()].iter().any(|&l| l != self.out_channels) {
            return bad("batch-norm vectors do not match the output channels".into());
        }
        if bn.var.iter().any(|v| *v <= T::zero()) {
            return bad("batch-norm variance must be positive".into());
        }
        Ok(())
    }

    pub fn conv_len(&self, len: usize) -> Result<usize> {
        if len < self.kernel {
            return domain(format!("kernel {} longer than input {len}", self.kernel));
        }
        let c = len - self.kernel + 1;
        if c < self.pool {
            return domain(format!("pool width {} exceeds convolution output {c}", self.pool));
        }
        Ok(c)
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        Ok(self.conv_len(len)? / self.pool)
    }

    pub fn forward_cached(&self, x: &Tensor2<T>, ops: &mut OpCounters) -> Result<BlockCache<T>> {
        if x.channels != self.in_channels {
            return domain(format!("block expects {} channels, got {}", self.in_channels, x.channels));
        }
        let cl = self.conv_len(x.len)?;
        let k = self.kernel;
        let mut conv: Tensor2<T> = Tensor2::zeros(self.out_channels, cl);
        for o in 0..self.out_channels {
            let out = &mut conv.data[o * cl..(o + 1) * cl];
            for i in 0..self.in_channels {
                let row = x.row(i);
                let w = &self.weights[(o * self.in_channels + i) * k..(o * self.in_channels + i + 1) * k];
                for (t, y) in out.iter_mut().enumerate() {
                    let mut acc = *y;
                    for j in 0..k {
                        acc = acc + w[j] * row[t + j];
                    }
                    *y = acc;
                }
            }
        }
        ops.mac::<T>((self.out_channels * self.in_channels * k * cl) as u64);
        ops.mem((self.out_channels * self.in_channels * k * cl) as u64);

        let mut pre = conv.clone();
        for o in 0..self.out_channels {
            let (mu, s, b) = (self.bn.mean[o], self.bn.scale(o), self.bn.beta[o]);
            for v in &mut pre.data[o * cl..(o + 1) * cl] {
                *v = (*v - mu) * s + b;
            }
        }
        ops.mul::<T>((self.out_channels * cl) as u64);

        let pl = cl / self.pool;
        let mut output = Tensor2::zeros(self.out_channels, pl);
        let mut argmax = Vec::with_capacity(self.out_channels * pl);
        for o in 0..self.out_channels {
            let row = pre.row(o);
            for p in 0..pl {
                let mut best = p * self.pool;
                for q in best + 1..(p + 1) * self.pool {
                    if row[q] > row[best] {
                        best = q;
                    }
                }
                argmax.push(best);
                output.data[o * pl + p] = row[best].max_of(T::zero());
            }
        }
        ops.branch((self.out_channels * (cl + pl)) as u64);
        Ok(BlockCache { input: x.clone(), pre_activation: pre, conv, argmax, output })
    }
}

/// One convolutional block; pooling drops any incomplete trailing window.
pub fn conv1d_block<T: Real>(x: &Tensor2<T>, block: &ConvBlock<T>, ops: &mut OpCounters) -> Result<Tensor2<T>> {
    Ok(block.forward_cached(x, ops)?.output)
}

/// Layer sizes of a 1-D CNN with three conv blocks and two dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnShape {
    pub input_channels: usize,
    pub input_len: usize,
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub pools: Vec<usize>,
    pub hidden: usize,
    pub classes: usize,
}

impl Default for CnnShape {
    fn default() -> Self {
        CnnShape {
            input_channels: 23,
            input_len: 1024,
            channels: vec![16, 16, 16],
            kernel: 5,
            pools: vec![4, 4, 4],
            hidden: 128,
            classes: 2,
        }
    }
}

impl CnnShape {
    /// Flattened length after the conv blocks.
    pub fn flat_len(&self) -> Result<usize> {
        let mut len = self.input_len;
        for &p in &self.pools {
            if len < self.kernel || (len - self.kernel + 1) < p || p == 0 {
                return domain(format!("shape chain breaks at length {len}"));
            }
            len = (len - self.kernel + 1) / p;
        }
        Ok(len * self.channels.last().copied().unwrap_or(self.input_channels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct Cnn1dModel<T> {
    pub input_channels: usize,
    pub input_len: usize,
    pub blocks: Vec<ConvBlock<T>>,
    pub dense: Vec<DenseLayer<T>>,
}

impl<T: Real> Cnn1dModel<T> {
    /// Random weights uniform in `[-s, s]` with `s = weight_scale` or
    /// `sqrt(3 / fan_in)`; batch norm starts as identity, biases at zero.
    pub fn random<R: Rng>(rng: &mut R, shape: &CnnShape, weight_scale: Option<f64>) -> Result<Self> {
        if shape.channels.len() != shape.pools.len() {
            return domain("one pool width per conv block is required");
        }
        let flat = shape.flat_len()?;
        let mut blocks = Vec::new();
        let mut cin = shape.input_channels;
        for (&cout, &pool) in shape.channels.iter().zip(&shape.pools) {
            let s = weight_scale.unwrap_or((3.0 / (cin * shape.kernel) as f64).sqrt());
            blocks.push(ConvBlock {
                in_channels: cin,
                out_channels: cout,
                kernel: shape.kernel,
                weights: (0..cout * cin * shape.kernel).map(|_| T::from_f64(rng.random_range(-s..=s))).collect(),
                bn: BatchNorm::identity(cout),
                pool,
            });
            cin = cout;
        }
        let s1 = weight_scale.unwrap_or((3.0 / flat as f64).sqrt());
        let s2 = weight_scale.unwrap_or((3.0 / shape.hidden as f64).sqrt());
        let dense = vec![
            DenseLayer::random(rng, flat, shape.hidden, s1, Activation::Relu),
            DenseLayer::random(rng, shape.hidden, shape.classes, s2, Activation::None),
        ];
        let m = Cnn1dModel { input_channels: shape.input_channels, input_len: shape.input_len, blocks, dense };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ch = self.input_channels;
        let mut len = self.input_len;
        for (i, b) in self.blocks.iter().enumerate() {
            b.validate()?;
            if b.in_channels != ch {
                return Err(Error::Config(format!("block {i} expects {} channels, previous layer gives {ch}", b.in_channels)));
            }
            len = b.output_len(len).map_err(|e| Error::Config(e.to_string()))?;
            ch = b.out_channels;
        }
        let mut n = ch * len;
        for (i, d) in self.dense.iter().enumerate() {
            d.validate()?;
            if d.inputs() != n {
                return Err(Error::Config(format!("dense layer {i} expects {} inputs, previous layer gives {n}", d.inputs())));
            }
            n = d.outputs();
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.blocks.iter().map(|b| b.weights.len() + 4 * b.out_channels).sum::<usize>()
            + self.dense.iter().map(DenseLayer::param_count).sum::<usize>()
    }

    pub fn cast<U: Real>(&self) -> Cnn1dModel<U> {
        let c = |v: &[T]| crate::scalar::cast_slice::<T, U>(v);
        Cnn1dModel {
            input_channels: self.input_channels,
            input_len: self.input_len,
            blocks: self
                .blocks
                .iter()
                .map(|b| ConvBlock {
                    in_channels: b.in_channels,
                    out_channels: b.out_channels,
                    kernel: b.kernel,
                    weights: c(&b.weights),
                    bn: BatchNorm { gamma: c(&b.bn.gamma), beta: c(&b.bn.beta), mean: c(&b.bn.mean), var: c(&b.bn.var), eps: b.bn.eps },
                    pool: b.pool,
                })
                .collect(),
            dense: self
                .dense
                .iter()
                .map(|d| DenseLayer { weights: d.weights.iter().map(|r| c(r)).collect(), bias: c(&d.bias), activation: d.activation })
                .collect(),
        }
    }

    /// Output of the conv stack, flattened channel-major.
    pub fn features(&self, x: &Tensor2<T>, ops: &mut OpCounters) -> Result<Vec<T>> {
        let mut h = x.clone();
        for b in &self.blocks {
            h = conv1d_block(&h, b, ops)?;
        }
        Ok(h.data)
    }
}

/// Class scores of the float model.
pub fn cnn_forward<T: Real>(model: &Cnn1dModel<T>, x: &Tensor2<T>, ops: &mut OpCounters) -> Result<Vec<T>> {
    if x.channels != model.input_channels || x.len != model.input_len {
        return domain(format!("input is {}x{}, model expects {}x{}", x.channels, x.len, model.input_channels, model.input_len));
    }
    let f = model.features(x, ops)?;
    super::mlp::mlp_forward(&model.dense, &f, ops)
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax_first<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// A quantized layer: 16-bit weights, 32-bit bias at accumulator scale and
/// the formats of its input and output activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLayer {
    pub weights: Vec<i16>,
    pub bias: Vec<i32>,
    pub weight_format: QFormat,
    pub input_format: QFormat,
    pub output_format: QFormat,
}

impl QLayer {
    /// Right shift applied to the accumulator.
    pub fn shift(&self) -> i32 {
        self.weight_format.frac_bits as i32 + self.input_format.frac_bits as i32 - self.output_format.frac_bits as i32
    }

    #[inline]
    fn dot(&self, o: usize, w: &[i16], x: impl Iterator<Item = i16>) -> Result<i16> {
        let mut acc = MacAcc::new(QFormat::Q15);
        for (&wi, xi) in w.iter().zip(x) {
            acc = q_mac(acc, QValue { raw: xi as i32, format: QFormat::Q15 }, QValue { raw: wi as i32, format: QFormat::Q15 })?;
        }
        acc.add_raw(self.bias[o] as i64);
        Ok(acc.finalize_shifted(15 - self.shift()).0.raw as i16)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QConvBlock {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub pool: usize,
    /// Batch norm folded into weights and bias.
    pub layer: QLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDense {
    pub inputs: usize,
    pub outputs: usize,
    pub relu: bool,
    /// Row-major `[out][in]`.
    pub layer: QLayer,
}

/// Post-training-quantized CNN over Q15 inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QCnnModel {
    pub input_channels: usize,
    pub input_len: usize,
    pub blocks: Vec<QConvBlock>,
    pub dense: Vec<QDense>,
}

fn frac_for(max_abs: f64, headroom_bits: u32) -> u8 {
    let mut f = 15u8;
    while f > 0 && max_abs * (f as f64 + headroom_bits as f64).exp2() > 32767.0 {
        f -= 1;
    }
    f
}

fn fmt(frac: u8) -> QFormat {
    QFormat { total_bits: 16, frac_bits: frac }
}

fn quantize_layer(w: &[f64], b: &[f64], in_frac: u8, out_max: f64) -> QLayer {
    let out_frac = frac_for(out_max, 1);
    let w_max = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // keep |y| * 2^(wf + in_frac) inside the 32-bit accumulator
    let cap = (15 + out_frac as i32 - in_frac as i32).clamp(0, 15) as u8;
    let wf = frac_for(w_max, 0).min(cap);
    let acc_scale = (wf as f64 + in_frac as f64).exp2();
    QLayer {
        weights: w.iter().map(|v| (v * (wf as f64).exp2()).round().clamp(-32768.0, 32767.0) as i16).collect(),
        bias: b.iter().map(|v| (v * acc_scale).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32).collect(),
        weight_format: fmt(wf),
        input_format: fmt(in_frac),
        output_format: fmt(out_frac),
    }
}

impl QCnnModel {
    /// Folds batch norm into the convolutions and picks per-layer formats
    /// from the activation ranges seen on `calibration` (inputs in `[-1, 1)`).
    pub fn quantize<T: Real>(model: &Cnn1dModel<T>, calibration: &[Tensor2<T>]) -> Result<Self> {
        model.validate()?;
        if calibration.is_empty() {
            return domain("quantization needs at least one calibration input");
        }
        let m = model.cast::<f64>();
        let mut block_max = vec![0.0f64; m.blocks.len()];
        let mut dense_max = vec![0.0f64; m.dense.len()];
        let mut ops = OpCounters::new();
        for x in calibration {
            let mut h = x.cast::<f64>();
            for (bi, b) in m.blocks.iter().enumerate() {
                let c = b.forward_cached(&h, &mut ops)?;
                block_max[bi] = c.pre_activation.data.iter().fold(block_max[bi], |a, v| a.max(v.abs()));
                h = c.output;
            }
            let mut f = h.data;
            for (di, d) in m.dense.iter().enumerate() {
                let lin = DenseLayer { activation: Activation::None, ..d.clone() }.forward(&f, &mut ops)?;
                dense_max[di] = lin.iter().fold(dense_max[di], |a, v| a.max(v.abs()));
                f = d.forward(&f, &mut ops)?;
            }
        }
        let mut in_frac = 15u8;
        let mut blocks = Vec::new();
        for (bi, b) in m.blocks.iter().enumerate() {
            let mut w = Vec::with_capacity(b.weights.len());
            let mut bias = Vec::with_capacity(b.out_channels);
            for o in 0..b.out_channels {
                let s = b.bn.scale(o);
                w.extend(b.weights[o * b.in_channels * b.kernel..(o + 1) * b.in_channels * b.kernel].iter().map(|v| v * s));
                bias.push(b.bn.beta[o] - b.bn.mean[o] * s);
            }
            let layer = quantize_layer(&w, &bias, in_frac, block_max[bi]);
            in_frac = layer.output_format.frac_bits;
            blocks.push(QConvBlock { in_channels: b.in_channels, out_channels: b.out_channels, kernel: b.kernel, pool: b.pool, layer });
        }
        let mut dense = Vec::new();
        for (di, d) in m.dense.iter().enumerate() {
            if d.activation == Activation::Softmax {
                return domain("softmax layers cannot be quantized");
            }
            let w: Vec<f64> = d.weights.concat();
            let layer = quantize_layer(&w, &d.bias, in_frac, dense_max[di]);
            in_frac = layer.output_format.frac_bits;
            dense.push(QDense { inputs: d.inputs(), outputs: d.outputs(), relu: d.activation == Activation::Relu, layer });
        }
        Ok(QCnnModel { input_channels: m.input_channels, input_len: m.input_len, blocks, dense })
    }

    pub fn param_bytes(&self) -> usize {
        let l = |q: &QLayer| 2 * q.weights.len() + 4 * q.bias.len();
        self.blocks.iter().map(|b| l(&b.layer)).sum::<usize>() + self.dense.iter().map(|d| l(&d.layer)).sum::<usize>()
    }

    pub fn output_format(&self) -> QFormat {
        self.dense.last().map(|d| d.layer.output_format).or(self.blocks.last().map(|b| b.layer.output_format)).unwrap_or(QFormat::Q15)
    }
}

fn q_block(b: &QConvBlock, x: &[i16], len: usize, ops: &mut OpCounters) -> Result<(Vec<i16>, usize)> {
    if len < b.kernel || len - b.kernel + 1 < b.pool {
        return domain(format!("input length {len} too short for kernel {} and pool {}", b.kernel, b.pool));
    }
    let cl = len - b.kernel + 1;
    let pl = cl / b.pool;
    let k = b.kernel;
    let mut out = vec![0i16; b.out_channels * pl];
    let mut conv = vec![0i16; cl];
    for o in 0..b.out_channels {
        let w = &b.layer.weights[o * b.in_channels * k..(o + 1) * b.in_channels * k];
        for (t, y) in conv.iter_mut().enumerate() {
            let taps = (0..b.in_channels).flat_map(|i| x[i * len + t..i * len + t + k].iter().copied());
            *y = b.layer.dot(o, w, taps)?;
        }
        for p in 0..pl {
            let m = conv[p * b.pool..(p + 1) * b.pool].iter().copied().max().unwrap_or(0);
            out[o * pl + p] = m.max(0);
        }
    }
    ops.mac::<Q15>((b.out_channels * b.in_channels * k * cl) as u64);
    ops.mem((b.out_channels * b.in_channels * k * cl) as u64);
    ops.branch((b.out_channels * (cl + pl)) as u64);
    Ok((out, pl))
}

/// Class scores of the quantized model, dequantized to reals.
pub fn qcnn_forward(model: &QCnnModel, x: &Tensor2<Q15>, ops: &mut OpCounters) -> Result<Vec<f64>> {
    if x.channels != model.input_channels || x.len != model.input_len {
        return domain(format!("input is {}x{}, model expects {}x{}", x.channels, x.len, model.input_channels, model.input_len));
    }
    let mut h: Vec<i16> = x.data.iter().map(|v| v.raw()).collect();
    let mut len = x.len;
    for b in &model.blocks {
        let (o, l) = q_block(b, &h, len, ops)?;
        h = o;
        len = l;
    }
    for d in &model.dense {
        if h.len() != d.inputs {
            return domain(format!("dense layer expects {} inputs, got {}", d.inputs, h.len()));
        }
        let mut y = Vec::with_capacity(d.outputs);
        for o in 0..d.outputs {
            let v = d.layer.dot(o, &d.layer.weights[o * d.inputs..(o + 1) * d.inputs], h.iter().copied())?;
            y.push(if d.relu { v.max(0) } else { v });
        }
        ops.mac::<Q15>((d.inputs * d.outputs) as u64);
        ops.mem((d.inputs * d.outputs) as u64);
        h = y;
    }
    let res = model.output_format().resolution();
    Ok(h.iter().map(|&v| v as f64 * res).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_tensor<R: Rng>(rng: &mut R, c: usize, l: usize, amp: f64) -> Tensor2<f64> {
        Tensor2::new(c, l, (0..c * l).map(|_| rng.random_range(-amp..amp)).collect()).unwrap()
    }

    #[test]
    fn identity_block_is_relu() {
        let b = ConvBlock { in_channels: 1, out_channels: 1, kernel: 1, weights: vec![1.0f64], bn: BatchNorm::identity(1), pool: 1 };
        let x = Tensor2::new(1, 5, vec![-1.0, 2.0, -0.5, 0.0, 3.0]).unwrap();
        let y = conv1d_block(&x, &b, &mut OpCounters::new()).unwrap();
        assert_eq!(y.data, vec![0.0, 2.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn negative_constant_is_zeroed() {
        let b = ConvBlock { in_channels: 2, out_channels: 3, kernel: 3, weights: vec![0.5f64; 18], bn: BatchNorm::identity(3), pool: 2 };
        let x = Tensor2::new(2, 10, vec![-1.0; 20]).unwrap();
        let y = conv1d_block(&x, &b, &mut OpCounters::new()).unwrap();
        assert_eq!((y.channels, y.len), (3, 4));
        assert!(y.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let b = ConvBlock { in_channels: 1, out_channels: 1, kernel: 4, weights: vec![1.0f64; 4], bn: BatchNorm::identity(1), pool: 2 };
        let mut o = OpCounters::new();
        assert!(conv1d_block(&Tensor2::new(1, 3, vec![0.0; 3]).unwrap(), &b, &mut o).is_err());
        assert!(conv1d_block(&Tensor2::new(1, 4, vec![0.0; 4]).unwrap(), &b, &mut o).is_err());
        assert!(conv1d_block(&Tensor2::new(2, 8, vec![0.0; 16]).unwrap(), &b, &mut o).is_err());
    }

    #[test]
    fn block_matches_nested_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (ci, co, k, pool, len) = (3, 4, 3, 2, 21);
            let mut b = ConvBlock {
                in_channels: ci,
                out_channels: co,
                kernel: k,
                weights: (0..ci * co * k).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
                bn: BatchNorm::identity(co),
                pool,
            };
            b.bn.gamma = (0..co).map(|_| rng.random_range(0.5f32..1.5)).collect();
            b.bn.beta = (0..co).map(|_| rng.random_range(-0.3f32..0.3)).collect();
            b.bn.mean = (0..co).map(|_| rng.random_range(-0.3f32..0.3)).collect();
            b.bn.var = (0..co).map(|_| rng.random_range(0.5f32..2.0)).collect();
            b.bn.eps = 1e-5;
            let x = random_tensor(&mut rng, ci, len, 1.0).cast::<f32>();
            let got = conv1d_block(&x, &b, &mut OpCounters::new()).unwrap();
            let cl = len - k + 1;
            for o in 0..co {
                let mut z = vec![0.0f64; cl];
                for t in 0..cl {
                    let mut s = 0.0;
                    for i in 0..ci {
                        for j in 0..k {
                            s += b.weights[(o * ci + i) * k + j] as f64 * x.data[i * len + t + j] as f64;
                        }
                    }
                    z[t] = (s - b.bn.mean[o] as f64) / (b.bn.var[o] as f64 + 1e-5).sqrt() * b.bn.gamma[o] as f64 + b.bn.beta[o] as f64;
                }
                for p in 0..cl / pool {
                    let want = z[p * pool..(p + 1) * pool].iter().fold(f64::MIN, |a, v| a.max(*v)).max(0.0);
                    assert!((got.data[o * (cl / pool) + p] as f64 - want).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn default_shape_chain() {
        let s = CnnShape::default();
        assert_eq!(s.flat_len().unwrap(), 16 * 14);
        let m: Cnn1dModel<f32> = Cnn1dModel::random(&mut ChaCha8Rng::seed_from_u64(0), &s, None).unwrap();
        assert_eq!(m.dense[0].inputs(), 224);
        assert_eq!(m.dense[1].outputs(), 2);
    }

    #[test]
    fn zero_input_zero_scores() {
        let s =
            CnnShape { input_channels: 4, input_len: 64, channels: vec![3, 3, 3], kernel: 3, pools: vec![2, 2, 2], hidden: 8, classes: 2 };
        let m: Cnn1dModel<f32> = Cnn1dModel::random(&mut ChaCha8Rng::seed_from_u64(1), &s, None).unwrap();
        let y = cnn_forward(&m, &Tensor2::zeros(4, 64), &mut OpCounters::new()).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        assert_eq!(argmax_first(&y), 0);
        assert!(cnn_forward(&m, &Tensor2::zeros(4, 63), &mut OpCounters::new()).is_err());
    }

    #[test]
    fn validate_rejects_broken_chain() {
        let s =
            CnnShape { input_channels: 2, input_len: 40, channels: vec![3, 3, 3], kernel: 3, pools: vec![2, 2, 2], hidden: 4, classes: 2 };
        let mut m: Cnn1dModel<f64> = Cnn1dModel::random(&mut ChaCha8Rng::seed_from_u64(1), &s, None).unwrap();
        m.blocks[1].bn.var[0] = 0.0;
        assert!(m.validate().is_err());
        let mut m2: Cnn1dModel<f64> = Cnn1dModel::random(&mut ChaCha8Rng::seed_from_u64(1), &s, None).unwrap();
        m2.dense[0].weights.pop();
        m2.dense[0].bias.pop();
        assert!(m2.validate().is_err());
    }

    #[test]
    fn fp32_is_bit_reproducible() {
        let s = CnnShape { input_channels: 5, input_len: 256, ..CnnShape::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m: Cnn1dModel<f32> = Cnn1dModel::random(&mut rng, &s, None).unwrap();
        let x = random_tensor(&mut rng, 5, 256, 1.0).cast::<f32>();
        let a = cnn_forward(&m, &x, &mut OpCounters::new()).unwrap();
        let b = cnn_forward(&m, &x, &mut OpCounters::new()).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn q15_agrees_with_fp32() {
        let s = CnnShape { input_channels: 6, input_len: 256, ..CnnShape::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m: Cnn1dModel<f32> = Cnn1dModel::random(&mut rng, &s, Some(0.5)).unwrap();
        let calib: Vec<Tensor2<f32>> = (0..8).map(|_| random_tensor(&mut rng, 6, 256, 0.9).cast()).collect();
        let q = QCnnModel::quantize(&m, &calib).unwrap();
        let mut agree = 0;
        let mut ops = OpCounters::new();
        for _ in 0..100 {
            let x = random_tensor(&mut rng, 6, 256, 0.9);
            let f = cnn_forward(&m, &x.cast::<f32>(), &mut OpCounters::new()).unwrap();
            let g = qcnn_forward(&q, &x.cast::<Q15>(), &mut ops).unwrap();
            agree += (argmax_first(&f) == argmax_first(&g)) as usize;
        }
        assert!(agree >= 95, "agreement {agree}/100");
        assert_eq!(ops.dominant(), Some(crate::OpCategory::FxpMac));
    }
}
