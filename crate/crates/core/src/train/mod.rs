//! Backpropagation-free per-layer fine-tuning of the 1-D CNN.
//!
//! Each conv block is trained on its own contrastive loss over the
//! flattened block outputs of a small labelled batch. Upstream blocks are
//! frozen and batch norm stays in inference form.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::infer::{BlockCache, Cnn1dModel, ConvBlock, Tensor2};
use crate::ops::OpCounters;
use crate::scalar::Real;

pub const DEFAULT_MARGIN: f64 = 1.0;
pub const DEFAULT_BATCH: usize = 4;
/// Step-size halvings tried when a step does not decrease the loss.
pub const MAX_HALVINGS: u32 = 12;

/// Labelled inputs for one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct SampleBatch<T> {
    pub inputs: Vec<Tensor2<T>>,
    pub labels: Vec<bool>,
}

impl<T: Real> SampleBatch<T> {
    /// At least one same-class and one cross-class pair, equal shapes.
    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.labels.len() {
            return domain(format!("{} inputs but {} labels", self.inputs.len(), self.labels.len()));
        }
        if self.inputs.len() < 2 {
            return domain("a batch needs at least two samples");
        }
        let shape = (self.inputs[0].channels, self.inputs[0].len);
        if self.inputs.iter().any(|x| (x.channels, x.len) != shape) {
            return domain("batch inputs differ in shape");
        }
        let pos = self.labels.iter().filter(|&&l| l).count();
        let neg = self.labels.len() - pos;
        if pos == 0 || neg == 0 {
            return domain("a batch needs samples of both classes");
        }
        if pos < 2 && neg < 2 {
            return domain("a batch needs at least one same-class pair");
        }
        Ok(())
    }
}

fn check_outputs<T: Real>(outputs: &[Vec<T>], labels: &[bool]) -> Result<()> {
    if outputs.len() < 2 || outputs.len() != labels.len() {
        return domain(format!("need >= 2 labelled outputs, got {} outputs / {} labels", outputs.len(), labels.len()));
    }
    if outputs.iter().any(|o| o.len() != outputs[0].len()) {
        return domain("outputs differ in length");
    }
    Ok(())
}

type Pairs = Vec<(usize, usize)>;

/// Index pairs with equal and with different labels.
fn pairs(labels: &[bool]) -> (Pairs, Pairs) {
    let mut same = Vec::new();
    let mut diff = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] == labels[j] {
                same.push((i, j));
            } else {
                diff.push((i, j));
            }
        }
    }
    (same, diff)
}

fn dist<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.to_f64() - y.to_f64()).powi(2)).sum::<f64>().sqrt()
}

/// Mean squared same-class distance plus mean squared hinge
/// `max(0, margin - d)` over cross-class pairs. A group with no pairs
/// contributes 0.
pub fn bpfree_layer_loss<T: Real>(outputs: &[Vec<T>], labels: &[bool], margin: f64) -> Result<f64> {
    check_outputs(outputs, labels)?;
    if !(margin > 0.0) {
        return domain("margin must be positive");
    }
    let (same, diff) = pairs(labels);
    let intra = if same.is_empty() {
        0.0
    } else {
        same.iter().map(|&(i, j)| dist(&outputs[i], &outputs[j]).powi(2)).sum::<f64>() / same.len() as f64
    };
    let inter = if diff.is_empty() {
        0.0
    } else {
        diff.iter().map(|&(i, j)| (margin - dist(&outputs[i], &outputs[j])).max(0.0).powi(2)).sum::<f64>() / diff.len() as f64
    };
    Ok(intra + inter)
}

/// Gradient of [`bpfree_layer_loss`] with respect to each flattened output.
pub fn loss_output_grad<T: Real>(outputs: &[Vec<T>], labels: &[bool], margin: f64, ops: &mut OpCounters) -> Result<Vec<Vec<f64>>> {
    check_outputs(outputs, labels)?;
    let (same, diff) = pairs(labels);
    let n = outputs[0].len();
    let mut g = vec![vec![0.0f64; n]; outputs.len()];
    let mut add = |i: usize, j: usize, c: f64| {
        for k in 0..n {
            let d = c * (outputs[i][k].to_f64() - outputs[j][k].to_f64());
            g[i][k] += d;
            g[j][k] -= d;
        }
    };
    for &(i, j) in &same {
        add(i, j, 2.0 / same.len() as f64);
    }
    for &(i, j) in &diff {
        let d = dist(&outputs[i], &outputs[j]);
        let h = margin - d;
        if h > 0.0 && d > 0.0 {
            add(i, j, -2.0 * h / d / diff.len() as f64);
        }
    }
    ops.mac::<T>(((same.len() + 2 * diff.len()) * n) as u64);
    Ok(g)
}

/// Trainable tensors of one conv block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LayerGrad {
    pub fn scale(&mut self, c: f64) {
        for v in self.weights.iter_mut().chain(&mut self.gamma).chain(&mut self.beta) {
            *v *= c;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().chain(&self.gamma).chain(&self.beta).all(|v| *v == 0.0)
    }
}

/// Training state of the block at `layer`.
#[derive(Debug, Clone)]
pub struct LayerTrainState<T> {
    pub layer: usize,
    pub margin: f64,
    pub learning_rate: f64,
    /// Multiplier on this layer's loss.
    pub loss_weight: f64,
    cache: Option<Vec<BlockCache<T>>>,
}

impl<T: Real> LayerTrainState<T> {
    pub fn new(layer: usize, margin: f64, learning_rate: f64) -> Self {
        LayerTrainState { layer, margin, learning_rate, loss_weight: 1.0, cache: None }
    }

    /// Runs the frozen upstream blocks and the current block on every
    /// sample, caching what the gradient needs.
    pub fn forward(&mut self, model: &Cnn1dModel<T>, batch: &SampleBatch<T>, ops: &mut OpCounters) -> Result<()> {
        if self.layer >= model.blocks.len() {
            return domain(format!("layer {} out of {} blocks", self.layer, model.blocks.len()));
        }
        let mut caches = Vec::with_capacity(batch.inputs.len());
        for x in &batch.inputs {
            let mut h = x.clone();
            for b in &model.blocks[..self.layer] {
                h = b.forward_cached(&h, ops)?.output;
            }
            caches.push(model.blocks[self.layer].forward_cached(&h, ops)?);
        }
        self.cache = Some(caches);
        Ok(())
    }

    pub fn outputs(&self) -> Result<Vec<Vec<T>>> {
        let c = self.cache.as_ref().ok_or_else(|| Error::State("forward pass not cached".into()))?;
        Ok(c.iter().map(|b| b.output.data.clone()).collect())
    }

    pub fn loss(&self, labels: &[bool]) -> Result<f64> {
        Ok(self.loss_weight * bpfree_layer_loss(&self.outputs()?, labels, self.margin)?)
    }
}

/// Analytic gradient of the layer loss with respect to the current block's
/// conv weights and batch-norm scale/shift.
///
/// Pooling routes the gradient to the cached argmax, ReLU passes it where
/// the pre-activation is positive and batch norm uses its frozen statistics.
pub fn bpfree_layer_grad<T: Real>(
    model: &Cnn1dModel<T>,
    state: &LayerTrainState<T>,
    labels: &[bool],
    ops: &mut OpCounters,
) -> Result<LayerGrad> {
    let caches = state.cache.as_ref().ok_or_else(|| Error::State("forward pass not cached".into()))?;
    let block = model.blocks.get(state.layer).ok_or_else(|| Error::State(format!("no block {}", state.layer)))?;
    let outputs: Vec<Vec<T>> = caches.iter().map(|c| c.output.data.clone()).collect();
    let mut gout = loss_output_grad(&outputs, labels, state.margin, ops)?;
    if state.loss_weight != 1.0 {
        gout.iter_mut().flatten().for_each(|v| *v *= state.loss_weight);
    }
    let (co, ci, k) = (block.out_channels, block.in_channels, block.kernel);
    let mut grad = LayerGrad { weights: vec![0.0; co * ci * k], gamma: vec![0.0; co], beta: vec![0.0; co] };
    for (cache, g) in caches.iter().zip(&gout) {
        let cl = cache.pre_activation.len;
        let pl = cache.output.len;
        let mut gpre = vec![0.0f64; co * cl];
        for o in 0..co {
            for p in 0..pl {
                let a = cache.argmax[o * pl + p];
                if cache.pre_activation.data[o * cl + a] > T::zero() {
                    gpre[o * cl + a] += g[o * pl + p];
                }
            }
        }
        ops.branch((co * pl) as u64);
        for o in 0..co {
            let inv = block.bn.inv_std(o).to_f64();
            let gam = block.bn.gamma[o].to_f64();
            let mu = block.bn.mean[o].to_f64();
            for t in 0..cl {
                let gp = gpre[o * cl + t];
                if gp == 0.0 {
                    continue;
                }
                grad.beta[o] += gp;
                grad.gamma[o] += gp * (cache.conv.data[o * cl + t].to_f64() - mu) * inv;
                let gc = gp * gam * inv;
                for i in 0..ci {
                    let row = cache.input.row(i);
                    let w = &mut grad.weights[(o * ci + i) * k..(o * ci + i + 1) * k];
                    for (j, wj) in w.iter_mut().enumerate() {
                        *wj += gc * row[t + j].to_f64();
                    }
                }
            }
        }
        ops.mac::<T>((co * ci * k * cl + 2 * co * cl) as u64);
        ops.mem((co * ci * k * cl) as u64);
    }
    Ok(grad)
}

fn apply_step<T: Real>(block: &mut ConvBlock<T>, grad: &LayerGrad, lr: f64) {
    let upd = |p: &mut T, g: f64| *p = T::from_f64(p.to_f64() - lr * g);
    block.weights.iter_mut().zip(&grad.weights).for_each(|(p, &g)| upd(p, g));
    block.bn.gamma.iter_mut().zip(&grad.gamma).for_each(|(p, &g)| upd(p, g));
    block.bn.beta.iter_mut().zip(&grad.beta).for_each(|(p, &g)| upd(p, g));
}

/// Hash over the bit patterns of a block's parameters.
pub fn block_param_hash<T: Real>(block: &ConvBlock<T>) -> u64 {
    let mut h = DefaultHasher::new();
    for v in block.weights.iter().chain(&block.bn.gamma).chain(&block.bn.beta).chain(&block.bn.mean).chain(&block.bn.var) {
        v.to_f64().to_bits().hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerTraceEntry {
    pub layer: usize,
    pub loss_before: f64,
    pub loss_after: f64,
    pub learning_rate: f64,
    pub halvings: u32,
}

/// Writes the trace as CSV with a header row.
pub fn write_trace_csv<W: Write>(trace: &[LayerTraceEntry], mut w: W) -> Result<()> {
    writeln!(w, "layer,loss_before,loss_after,learning_rate,halvings")?;
    for e in trace {
        writeln!(w, "{},{},{},{},{}", e.layer, e.loss_before, e.loss_after, e.learning_rate, e.halvings)?;
    }
    Ok(())
}

/// One epoch: each layer in `order` takes one gradient step.
///
/// When a step raises the layer loss the step size is halved, up to
/// [`MAX_HALVINGS`] times, and the final step size is recorded.
pub fn bpfree_train_epoch<T: Real>(
    model: &Cnn1dModel<T>,
    batch: &SampleBatch<T>,
    learning_rate: f64,
    order: &[usize],
    margin: f64,
    ops: &mut OpCounters,
) -> Result<(Cnn1dModel<T>, Vec<LayerTraceEntry>)> {
    batch.validate()?;
    if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
        return domain(format!("learning rate must be non-negative, got {learning_rate}"));
    }
    let mut model = model.clone();
    let mut trace = Vec::with_capacity(order.len());
    for &layer in order {
        let mut state = LayerTrainState::new(layer, margin, learning_rate);
        state.forward(&model, batch, ops)?;
        let before = state.loss(&batch.labels)?;
        if !before.is_finite() {
            return Err(Error::Numeric(format!("layer {layer} loss is not finite")));
        }
        let grad = bpfree_layer_grad(&model, &state, &batch.labels, ops)?;
        let original = model.blocks[layer].clone();
        let mut lr = learning_rate;
        let mut halvings = 0;
        let after = loop {
            apply_step(&mut model.blocks[layer], &grad, lr);
            state.forward(&model, batch, ops)?;
            let after = state.loss(&batch.labels)?;
            if !after.is_finite() {
                return Err(Error::Numeric(format!("layer {layer} loss became non-finite")));
            }
            if after <= before || lr == 0.0 || halvings >= MAX_HALVINGS {
                break after;
            }
            model.blocks[layer] = original.clone();
            lr *= 0.5;
            halvings += 1;
        };
        trace.push(LayerTraceEntry { layer, loss_before: before, loss_after: after, learning_rate: lr, halvings });
    }
    Ok((model, trace))
}

/// Layer order `0..n`, input to output.
pub fn default_order<T>(model: &Cnn1dModel<T>) -> Vec<usize> {
    (0..model.blocks.len()).collect()
}
