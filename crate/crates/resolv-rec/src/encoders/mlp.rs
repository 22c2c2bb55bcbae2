//! Minimal dense-network substrate: 6 affine layers, ReLU hidden
//! activations, L2-normalized 32-dimensional output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OUTPUT_DIM: usize = 32;
const HIDDEN_WIDTHS: [usize; 5] = [128, 96, 64, 48, 40];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// out_dim x in_dim
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub frozen: bool,
}

impl Layer {
    fn out_dim(&self) -> usize {
        self.weights.len()
    }

    fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

/// Six-layer perceptron ending in an L2-normalized 32-wide embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl Mlp {
    /// Standard geometry: input -> 128 -> 96 -> 64 -> 48 -> 40 -> 32, seeded
    /// uniform(+-1/sqrt(fan_in)) init.
    pub fn new(input_dim: usize, seed: u64) -> Self {
        let mut widths = vec![input_dim];
        widths.extend_from_slice(&HIDDEN_WIDTHS);
        widths.push(OUTPUT_DIM);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..widths.len() - 1)
            .map(|l| {
                let (fan_in, fan_out) = (widths[l], widths[l + 1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                Layer {
                    weights: (0..fan_out)
                        .map(|_| (0..fan_in).map(|_| rng.random_range(-bound..bound)).collect())
                        .collect(),
                    bias: vec![0.0; fan_out],
                    activation: if l == widths.len() - 2 {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                    frozen: false,
                }
            })
            .collect();
        Mlp {
            layers,
            input_dim,
            output_dim: OUTPUT_DIM,
        }
    }

    /// Arbitrary-geometry constructor for tests and small oracles.
    pub fn from_layers(layers: Vec<Layer>) -> Self {
        let input_dim = layers.first().map_or(0, Layer::in_dim);
        let output_dim = layers.last().map_or(0, Layer::out_dim);
        Mlp {
            layers,
            input_dim,
            output_dim,
        }
    }

    /// Marks the lowest `n` layers frozen: they receive zero updates.
    pub fn freeze_lower(&mut self, n: usize) {
        for layer in self.layers.iter_mut().take(n) {
            layer.frozen = true;
        }
    }

    /// Forward pass to the L2-normalized embedding. A zero pre-normalization
    /// output maps to the zero vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cache(x)?.output)
    }

    pub fn forward_cache(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_dim {
            return Err(Error::Shape {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        post.push(x.to_vec());
        for layer in &self.layers {
            let input = post.last().unwrap();
            let z: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, b)| row.iter().zip(input).map(|(w, xi)| w * xi).sum::<f64>() + b)
                .collect();
            let a: Vec<f64> = match layer.activation {
                Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
                Activation::Identity => z.clone(),
            };
            pre.push(z);
            post.push(a);
        }
        let raw = post.last().unwrap().clone();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let output = if norm > 0.0 {
            raw.iter().map(|v| v / norm).collect()
        } else {
            vec![0.0; raw.len()]
        };
        Ok(ForwardCache {
            pre,
            post,
            norm,
            output,
        })
    }

    /// Backpropagates a gradient w.r.t. the normalized output into per-layer
    /// parameter gradients.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64]) -> Gradients {
        // through the normalization: d(x/|x|) = (I - y y^T)/|x| with y = x/|x|
        let mut delta: Vec<f64> = if cache.norm > 0.0 {
            let dot: f64 = grad_output
                .iter()
                .zip(&cache.output)
                .map(|(g, y)| g * y)
                .sum();
            grad_output
                .iter()
                .zip(&cache.output)
                .map(|(g, y)| (g - dot * y) / cache.norm)
                .collect()
        } else {
            vec![0.0; grad_output.len()]
        };
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                for (d, z) in delta.iter_mut().zip(&cache.pre[l]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &cache.post[l];
            let weight_grads: Vec<Vec<f64>> = delta
                .iter()
                .map(|&d| input.iter().map(|&xi| d * xi).collect())
                .collect();
            let bias_grads = delta.clone();
            let next_delta: Vec<f64> = (0..layer.in_dim())
                .map(|j| {
                    delta
                        .iter()
                        .zip(&layer.weights)
                        .map(|(&d, row)| d * row[j])
                        .sum()
                })
                .collect();
            layer_grads.push(LayerGrad {
                weights: weight_grads,
                bias: bias_grads,
            });
            delta = next_delta;
        }
        layer_grads.reverse();
        Gradients { layers: layer_grads }
    }

    /// One SGD step; frozen layers are skipped.
    pub fn apply(&mut self, grads: &Gradients, lr: f64) {
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            if layer.frozen {
                continue;
            }
            for (row, grow) in layer.weights.iter_mut().zip(&grad.weights) {
                for (w, g) in row.iter_mut().zip(grow) {
                    *w -= lr * g;
                }
            }
            for (b, g) in layer.bias.iter_mut().zip(&grad.bias) {
                *b -= lr * g;
            }
        }
    }
}

pub struct ForwardCache {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    pub norm: f64,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (ra, rb) in a.weights.iter_mut().zip(&b.weights) {
                for (wa, wb) in ra.iter_mut().zip(rb) {
                    *wa += wb;
                }
            }
            for (ba, bb) in a.bias.iter_mut().zip(&b.bias) {
                *ba += bb;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_mlp(weights: &[f64]) -> Mlp {
        // 6 width-1 layers, ReLU except the last
        Mlp::from_layers(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Layer {
                    weights: vec![vec![w]],
                    bias: vec![0.0],
                    activation: if i == 5 {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                    frozen: false,
                })
                .collect(),
        )
    }

    #[test]
    fn hand_computed_chain() {
        // 1 * 0.5 * 2 * 1 * 3 * 1 * 0.2 = 0.6, normalized in 1-D -> 1.0
        let mlp = chain_mlp(&[0.5, 2.0, 1.0, 3.0, 1.0, 0.2]);
        let out = mlp.forward(&[1.0]).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12);
        let cache = mlp.forward_cache(&[1.0]).unwrap();
        assert!((cache.norm - 0.6).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_give_zero_vector() {
        let mlp = chain_mlp(&[0.0; 6]);
        assert_eq!(mlp.forward(&[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn output_is_unit_or_zero() {
        let mlp = Mlp::new(10, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let out = mlp.forward(&x).unwrap();
            let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < 1e-9 || (norm - 1.0).abs() < 1e-9, "norm = {norm}");
        }
    }

    #[test]
    fn shape_mismatch_errors() {
        let mlp = Mlp::new(10, 0);
        assert!(matches!(
            mlp.forward(&[0.0; 4]),
            Err(Error::Shape {
                expected: 10,
                got: 4
            })
        ));
    }

    #[test]
    fn backward_matches_finite_differences() {
        // small geometry: 6 layers over tiny widths, loss = sum of embedding
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let widths = [4, 5, 4, 3, 3, 3, 2];
        let layers: Vec<Layer> = (0..6)
            .map(|l| Layer {
                weights: (0..widths[l + 1])
                    .map(|_| (0..widths[l]).map(|_| rng.random_range(-0.8..0.8)).collect())
                    .collect(),
                bias: (0..widths[l + 1]).map(|_| rng.random_range(-0.1..0.1)).collect(),
                activation: if l == 5 {
                    Activation::Identity
                } else {
                    Activation::Relu
                },
                frozen: false,
            })
            .collect();
        let mlp = Mlp::from_layers(layers);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |m: &Mlp| -> f64 { m.forward(&x).unwrap().iter().sum() };

        let cache = mlp.forward_cache(&x).unwrap();
        let grads = mlp.backward(&cache, &vec![1.0; 2]);

        let h = 1e-6;
        for l in 0..6 {
            for i in 0..mlp.layers[l].weights.len() {
                for j in 0..mlp.layers[l].weights[i].len() {
                    let mut plus = mlp.clone();
                    plus.layers[l].weights[i][j] += h;
                    let mut minus = mlp.clone();
                    minus.layers[l].weights[i][j] -= h;
                    let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                    let analytic = grads.layers[l].weights[i][j];
                    let scale = fd.abs().max(analytic.abs()).max(1e-4);
                    assert!(
                        (fd - analytic).abs() / scale < 1e-4,
                        "layer {l} w[{i}][{j}]: fd={fd} analytic={analytic}"
                    );
                }
            }
        }
    }

    #[test]
    fn frozen_layers_do_not_move() {
        let mut mlp = Mlp::new(6, 7);
        mlp.freeze_lower(3);
        let before: Vec<Vec<Vec<f64>>> = mlp.layers[..3]
            .iter()
            .map(|l| l.weights.clone())
            .collect();
        let x = vec![0.3; 6];
        for _ in 0..5 {
            let cache = mlp.forward_cache(&x).unwrap();
            let grads = mlp.backward(&cache, &vec![1.0; 32]);
            mlp.apply(&grads, 0.05);
        }
        for (layer, saved) in mlp.layers[..3].iter().zip(&before) {
            assert_eq!(&layer.weights, saved);
        }
    }
}
