//! Stacking meta-learner: base-model probability vectors are concatenated
//! into meta-features and fused by multinomial logistic regression.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Meta-feature width for C labels: three probability blocks plus three
/// top-1 confidences.
pub fn meta_width(n_labels: usize) -> usize {
    3 * n_labels + 3
}

/// Concatenates [lda | siamese | indexembed | 3 confidences] in fixed order.
/// Every block must be a probability vector over the identical ordered label
/// space.
pub fn build_meta_features(
    label_space: &[String],
    lda: &[(String, f64)],
    siamese: &[(String, f64)],
    indexembed: &[(String, f64)],
) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(meta_width(label_space.len()));
    let mut confidences = Vec::with_capacity(3);
    for (name, block) in [("lda", lda), ("siamese", siamese), ("indexembed", indexembed)] {
        if block.len() != label_space.len()
            || block.iter().zip(label_space).any(|((l, _), e)| l != e)
        {
            return Err(Error::LabelAlignment(format!(
                "{name} block does not match the shared label space"
            )));
        }
        let sum: f64 = block.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::LabelAlignment(format!(
                "{name} block sums to {sum}, not 1"
            )));
        }
        row.extend(block.iter().map(|(_, p)| *p));
        confidences.push(block.iter().map(|(_, p)| *p).fold(0.0, f64::max));
    }
    row.extend(confidences);
    Ok(row)
}

/// Uniform probability block for a config-disabled base model.
pub fn uniform_block(label_space: &[String]) -> Vec<(String, f64)> {
    let p = 1.0 / label_space.len() as f64;
    label_space.iter().map(|l| (l.clone(), p)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1e-3,
            lr: 0.1,
            epochs: 300,
            batch: 32,
            seed: 0,
        }
    }
}

/// Multinomial logistic-regression meta-learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// C x F
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
}

impl LogRegModel {
    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy + (l2/2)|W|^2 over a sample set, with parameter
/// gradients. Also the oracle surface for finite-difference checks.
pub fn logreg_loss_grads(
    weights: &[Vec<f64>],
    bias: &[f64],
    l2: f64,
    x: &[Vec<f64>],
    y: &[usize],
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let c = weights.len();
    let f = weights[0].len();
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![vec![0.0; f]; c];
    let mut gb = vec![0.0; c];
    for (xi, &yi) in x.iter().zip(y) {
        let logits: Vec<f64> = weights
            .iter()
            .zip(bias)
            .map(|(row, b)| row.iter().zip(xi).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        let probs = softmax(&logits);
        loss -= probs[yi].max(1e-300).ln();
        for cls in 0..c {
            let delta = probs[cls] - if cls == yi { 1.0 } else { 0.0 };
            for (g, &v) in gw[cls].iter_mut().zip(xi) {
                *g += delta * v;
            }
            gb[cls] += delta;
        }
    }
    loss /= n;
    for row in &mut gw {
        for g in row.iter_mut() {
            *g /= n;
        }
    }
    for g in &mut gb {
        *g /= n;
    }
    for (grow, wrow) in gw.iter_mut().zip(weights) {
        for (g, &w) in grow.iter_mut().zip(wrow) {
            *g += l2 * w;
        }
    }
    loss += 0.5 * l2 * weights.iter().flatten().map(|w| w * w).sum::<f64>();
    (loss, gw, gb)
}

/// Seeded mini-batch gradient descent on softmax cross-entropy with L2.
pub fn logreg_fit(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    config: &LogRegConfig,
) -> Result<LogRegModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::EmptyInput);
    }
    let distinct: std::collections::BTreeSet<usize> = y.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::SingleLabel(distinct.len()));
    }
    let f = x[0].len();
    let mut weights = vec![vec![0.0; f]; n_classes];
    let mut bias = vec![0.0; n_classes];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch.max(1)) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (_, gw, gb) = logreg_loss_grads(&weights, &bias, config.l2, &bx, &by);
            for (wrow, grow) in weights.iter_mut().zip(&gw) {
                for (w, g) in wrow.iter_mut().zip(grow) {
                    *w -= config.lr * g;
                }
            }
            for (b, g) in bias.iter_mut().zip(&gb) {
                *b -= config.lr * g;
            }
        }
        let (loss, _, _) = logreg_loss_grads(&weights, &bias, config.l2, x, y);
        loss_trace.push(loss);
    }
    let final_loss = loss_trace.last().copied().unwrap_or(f64::NAN);
    Ok(LogRegModel {
        weights,
        bias,
        l2: config.l2,
        lr: config.lr,
        epochs: config.epochs,
        seed: config.seed,
        final_loss,
        loss_trace,
    })
}

/// softmax(Wx + b) over the label space.
pub fn ensemble_predict(model: &LogRegModel, meta: &[f64]) -> Result<Vec<f64>> {
    if meta.len() != model.n_features() {
        return Err(Error::Shape {
            expected: model.n_features(),
            got: meta.len(),
        });
    }
    let logits: Vec<f64> = model
        .weights
        .iter()
        .zip(&model.bias)
        .map(|(row, b)| row.iter().zip(meta).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect();
    Ok(softmax(&logits))
}
