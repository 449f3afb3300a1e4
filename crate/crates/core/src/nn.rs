//! A small fully-connected network: rectified-linear hidden layers, linear
//! output, mean-squared-error loss over one selected output per sample, and
//! RMSprop updates. Everything is 64-bit and deterministic under the
//! initialisation RNG; there is no hidden state, so read-only forward passes
//! can run concurrently against a snapshot of the parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: expected input of length {expected}, got {got}")]
    InputShape { expected: usize, got: usize },
    #[error("shape mismatch between parameter sets")]
    ParameterShape,
    #[error("batch must be non-empty")]
    EmptyBatch,
    #[error("sample selects action {action} but the network has {actions} outputs")]
    BadAction { action: usize, actions: usize },
    #[error("non-finite gradient encountered")]
    NonFiniteGradient,
}

/// Layer widths from input to output, e.g. `[27, 128, 64, 5]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Self {
        assert!(layer_sizes.len() >= 2, "a network needs input and output");
        assert!(layer_sizes.iter().all(|&n| n > 0), "zero-width layer");
        Self { layer_sizes }
    }

    /// The Q-network used by the agents: two hidden layers of 128 and 64
    /// units between the observation and the five action values.
    pub fn q_network(observation_len: usize, n_actions: usize) -> Self {
        Self::new(vec![observation_len, 128, 64, n_actions])
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

/// One dense layer, weights stored row-major as `[out][in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// All weights and biases of a network. `clone()` yields a deep,
/// independent copy (the target-network snapshot).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub layers: Vec<DenseLayer>,
}

impl ParameterSet {
    /// Glorot-uniform weights (±√(6/(fan_in+fan_out))), zero biases.
    pub fn init(spec: &MlpSpec, rng: &mut impl Rng) -> Self {
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                DenseLayer {
                    in_dim: fan_in,
                    out_dim: fan_out,
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.gen_range(-limit..limit))
                        .collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| DenseLayer {
                in_dim: w[0],
                out_dim: w[1],
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn spec(&self) -> MlpSpec {
        let mut sizes = vec![self.layers[0].in_dim];
        sizes.extend(self.layers.iter().map(|l| l.out_dim));
        MlpSpec { layer_sizes: sizes }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.in_dim == b.in_dim && a.out_dim == b.out_dim)
    }
}

fn affine(layer: &DenseLayer, input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for o in 0..layer.out_dim {
        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        let mut acc = layer.biases[o];
        for (w, x) in row.iter().zip(input) {
            acc += w * x;
        }
        out.push(acc);
    }
}

/// Evaluate the network on one input.
pub fn forward(params: &ParameterSet, input: &[f64]) -> Result<Vec<f64>, NnError> {
    let expected = params.layers[0].in_dim;
    if input.len() != expected {
        return Err(NnError::InputShape {
            expected,
            got: input.len(),
        });
    }
    let last = params.layers.len() - 1;
    let mut current = input.to_vec();
    let mut next = Vec::new();
    for (li, layer) in params.layers.iter().enumerate() {
        affine(layer, &current, &mut next);
        if li != last {
            for v in next.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

/// One training sample: the Q-value of `action` is regressed onto `target`;
/// the remaining outputs do not contribute to the loss.
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub input: Vec<f64>,
    pub action: usize,
    pub target: f64,
}

/// Reverse-mode gradients of the mean squared error over the selected
/// outputs. Returns the gradient set (same shape as the parameters) and the
/// scalar loss.
pub fn backward(
    params: &ParameterSet,
    batch: &[TrainSample],
) -> Result<(ParameterSet, f64), NnError> {
    if batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let n_layers = params.layers.len();
    let n_actions = params.layers[n_layers - 1].out_dim;
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;

    // Per-sample activations: activations[0] is the input, activations[l]
    // the post-ReLU output of layer l-1 (post-identity for the last layer).
    let mut activations: Vec<Vec<f64>> = vec![Vec::new(); n_layers + 1];
    let mut delta = Vec::new();
    let mut delta_prev = Vec::new();

    for sample in batch {
        if sample.input.len() != params.layers[0].in_dim {
            return Err(NnError::InputShape {
                expected: params.layers[0].in_dim,
                got: sample.input.len(),
            });
        }
        if sample.action >= n_actions {
            return Err(NnError::BadAction {
                action: sample.action,
                actions: n_actions,
            });
        }

        activations[0].clear();
        activations[0].extend_from_slice(&sample.input);
        for (li, layer) in params.layers.iter().enumerate() {
            let (before, after) = activations.split_at_mut(li + 1);
            affine(layer, &before[li], &mut after[0]);
            if li != n_layers - 1 {
                for v in after[0].iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }

        let q = activations[n_layers][sample.action];
        let err = q - sample.target;
        loss += err * err * scale;

        // Output delta: d(loss)/d(output). Only the selected action carries
        // gradient under the masked MSE.
        delta.clear();
        delta.resize(n_actions, 0.0);
        delta[sample.action] = 2.0 * err * scale;

        for li in (0..n_layers).rev() {
            let layer = &params.layers[li];
            let glayer = &mut grads.layers[li];
            let input = &activations[li];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                glayer.biases[o] += d;
                let grow = &mut glayer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, x) in grow.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if li > 0 {
                delta_prev.clear();
                delta_prev.resize(layer.in_dim, 0.0);
                for o in 0..layer.out_dim {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (dp, w) in delta_prev.iter_mut().zip(row) {
                        *dp += d * w;
                    }
                }
                // ReLU gate: the stored activation is already rectified, so
                // a zero activation means a closed unit.
                for (dp, &a) in delta_prev.iter_mut().zip(activations[li].iter()) {
                    if a <= 0.0 {
                        *dp = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
    }
    Ok((grads, loss))
}

/// RMSprop: cache ← decay·cache + (1−decay)·g²; p ← p − lr·g/(√cache + ε).
pub fn rmsprop_update(
    params: &mut ParameterSet,
    grads: &ParameterSet,
    cache: &mut ParameterSet,
    learning_rate: f64,
    decay: f64,
    epsilon: f64,
) -> Result<(), NnError> {
    if !params.same_shape(grads) || !params.same_shape(cache) {
        return Err(NnError::ParameterShape);
    }
    for layer in &grads.layers {
        if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteGradient);
        }
    }
    for ((p, g), c) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(cache.layers.iter_mut())
    {
        for ((pw, &gw), cw) in p.weights.iter_mut().zip(&g.weights).zip(c.weights.iter_mut()) {
            *cw = decay * *cw + (1.0 - decay) * gw * gw;
            *pw -= learning_rate * gw / (cw.sqrt() + epsilon);
        }
        for ((pb, &gb), cb) in p.biases.iter_mut().zip(&g.biases).zip(c.biases.iter_mut()) {
            *cb = decay * *cb + (1.0 - decay) * gb * gb;
            *pb -= learning_rate * gb / (cb.sqrt() + epsilon);
        }
    }
    Ok(())
}
