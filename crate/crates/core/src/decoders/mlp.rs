//! One-hidden-layer feed-forward network: relu hidden layer, sigmoid
//! outputs, trained with mini-batch SGD on mean per-bit binary cross-entropy.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::noise::stream_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub seed: u64,
    /// `hidden_dim × in_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `out_dim × hidden_dim`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradient of the loss with respect to every parameter, same layout as [`MlpModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros(m: &MlpModel) -> Self {
        Gradients {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: vec![0.0; m.b2.len()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub instances: usize,
    pub seed: u64,
    pub hidden_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 10_000,
            epochs: 1000,
            learning_rate: 0.01,
            instances: 5,
            seed: 0,
            hidden_dim: 128,
        }
    }
}

/// Hidden width used when none is configured: 128, 256, 512 for d = 3, 5, 7.
pub fn default_hidden_dim(d: usize) -> usize {
    match d {
        0..=3 => 128,
        4..=5 => 256,
        _ => 512,
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// One distinct input row with the number of times it occurs in the batch
/// and the per-bit sum of its targets. Identical inputs share a forward
/// pass; the summed gradient is the same as processing them one by one.
#[derive(Clone, Debug)]
pub struct Group {
    pub x: Vec<f64>,
    pub count: f64,
    pub target_sum: Vec<f64>,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(in_dim: usize, hidden_dim: usize, out_dim: usize, seed: u64) -> Result<Self> {
        if in_dim == 0 || hidden_dim == 0 || out_dim == 0 {
            return Err(Error::Invalid("network dimensions must be at least 1".into()));
        }
        let mut rng = stream_rng(seed, 0);
        let mut uniform = |fan_in: usize, fan_out: usize, n: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.gen_range(-a..a)).collect::<Vec<f64>>()
        };
        let w1 = uniform(in_dim, hidden_dim, hidden_dim * in_dim);
        let w2 = uniform(hidden_dim, out_dim, out_dim * hidden_dim);
        Ok(MlpModel {
            in_dim,
            hidden_dim,
            out_dim,
            seed,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; out_dim],
        })
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.w1.len() == self.hidden_dim * self.in_dim
            && self.b1.len() == self.hidden_dim
            && self.w2.len() == self.out_dim * self.hidden_dim
            && self.b2.len() == self.out_dim;
        if !ok {
            return Err(Error::Invalid("network weight arrays do not match dims".into()));
        }
        if !self.is_finite() {
            return Err(Error::Invalid("network has non-finite weights".into()));
        }
        Ok(())
    }

    fn hidden(&self, x: &[f64], h: &mut [f64]) {
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * self.in_dim..(j + 1) * self.in_dim];
            let z: f64 = self.b1[j] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            *hj = z.max(0.0);
        }
    }

    fn logits(&self, h: &[f64], out: &mut [f64]) {
        for (k, ok) in out.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
            *ok = self.b2[k] + row.iter().zip(h).map(|(w, hj)| w * hj).sum::<f64>();
        }
    }

    /// Per-output probabilities in (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::LengthMismatch {
                expected: self.in_dim,
                found: x.len(),
            });
        }
        let mut h = vec![0.0; self.hidden_dim];
        let mut z = vec![0.0; self.out_dim];
        self.hidden(x, &mut h);
        self.logits(&h, &mut z);
        Ok(z.into_iter().map(sigmoid).collect())
    }

    /// Thresholds the outputs at 0.5.
    pub fn predict_bits(&self, s: &BitVec) -> Result<BitVec> {
        let p = self.forward(&s.to_f64s())?;
        Ok(threshold(&p))
    }

    /// Mean per-bit cross-entropy over `norm` samples and its gradient.
    pub fn loss_and_grad(&self, groups: &[Group], norm: f64) -> (f64, Gradients) {
        let mut g = Gradients::zeros(self);
        let mut h = vec![0.0; self.hidden_dim];
        let mut z = vec![0.0; self.out_dim];
        let mut dz = vec![0.0; self.out_dim];
        let mut dh = vec![0.0; self.hidden_dim];
        let scale = 1.0 / (norm * self.out_dim as f64);
        let mut loss = 0.0;
        for grp in groups {
            self.hidden(&grp.x, &mut h);
            self.logits(&h, &mut z);
            for k in 0..self.out_dim {
                let (c, t) = (grp.count, grp.target_sum[k]);
                // −[t·ln σ(z) + (c−t)·ln(1−σ(z))]
                loss += t * softplus(-z[k]) + (c - t) * softplus(z[k]);
                dz[k] = (c * sigmoid(z[k]) - t) * scale;
            }
            dh.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..self.out_dim {
                let row = k * self.hidden_dim;
                g.b2[k] += dz[k];
                for j in 0..self.hidden_dim {
                    g.w2[row + j] += dz[k] * h[j];
                    dh[j] += dz[k] * self.w2[row + j];
                }
            }
            for j in 0..self.hidden_dim {
                if h[j] <= 0.0 {
                    continue;
                }
                let row = j * self.in_dim;
                g.b1[j] += dh[j];
                for (i, xi) in grp.x.iter().enumerate() {
                    g.w1[row + i] += dh[j] * xi;
                }
            }
        }
        (loss * scale, g)
    }

    fn apply(&mut self, g: &Gradients, lr: f64) {
        for (w, d) in self.w1.iter_mut().zip(&g.w1) {
            *w -= lr * d;
        }
        for (w, d) in self.b1.iter_mut().zip(&g.b1) {
            *w -= lr * d;
        }
        for (w, d) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * d;
        }
        for (w, d) in self.b2.iter_mut().zip(&g.b2) {
            *w -= lr * d;
        }
    }
}

pub fn threshold(p: &[f64]) -> BitVec {
    BitVec::from_bools(&p.iter().map(|&x| x > 0.5).collect::<Vec<_>>())
}

/// Collapses identical inputs, keeping first-appearance order so the
/// floating-point summation order is fixed.
pub fn group_batch(inputs: &[&BitVec], labels: &[&BitVec]) -> Vec<Group> {
    let mut index: HashMap<&BitVec, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for (x, y) in inputs.iter().zip(labels) {
        let gi = *index.entry(x).or_insert_with(|| {
            groups.push(Group {
                x: x.to_f64s(),
                count: 0.0,
                target_sum: vec![0.0; y.len()],
            });
            groups.len() - 1
        });
        let g = &mut groups[gi];
        g.count += 1.0;
        for k in y.iter_ones() {
            g.target_sum[k] += 1.0;
        }
    }
    groups
}

/// Mini-batch SGD. Returns the mean training loss of every epoch.
pub fn train(
    model: &mut MlpModel,
    inputs: &[BitVec],
    labels: &[BitVec],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "training set needs matching nonempty inputs and labels (got {} and {})",
            inputs.len(),
            labels.len()
        )));
    }
    if cfg.batch_size == 0 || cfg.batch_size > inputs.len() {
        return Err(Error::Invalid(format!(
            "batch size {} must be between 1 and the dataset size {}",
            cfg.batch_size,
            inputs.len()
        )));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate >= 0.0) {
        return Err(Error::Invalid("learning rate must be a finite nonnegative number".into()));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != model.in_dim) {
        return Err(Error::LengthMismatch {
            expected: model.in_dim,
            found: x.len(),
        });
    }
    if let Some(y) = labels.iter().find(|y| y.len() != model.out_dim) {
        return Err(Error::LengthMismatch {
            expected: model.out_dim,
            found: y.len(),
        });
    }

    let mut rng = stream_rng(cfg.seed, 1);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&BitVec> = chunk.iter().map(|&i| &inputs[i]).collect();
            let ys: Vec<&BitVec> = chunk.iter().map(|&i| &labels[i]).collect();
            let groups = group_batch(&xs, &ys);
            let (loss, grad) = model.loss_and_grad(&groups, chunk.len() as f64);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "loss became {loss} in epoch {epoch}; try a smaller learning rate"
                )));
            }
            epoch_loss += loss * chunk.len() as f64;
            model.apply(&grad, cfg.learning_rate);
        }
        trace.push(epoch_loss / inputs.len() as f64);
    }
    Ok(trace)
}
