//! Fully connected sigmoid network and the backpropagation recursion.
//!
//! Layer `l` maps activations `a^{l−1}` to `z^l_j = Σ_k w^l_{jk} a^{l−1}_k + d^l_j`
//! and `a^l = f(z^l)` with `f(z) = 1/(1 + e^{−z})`, output layer included.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `f'(z) = f(z)(1 − f(z))`.
pub fn sigmoid_prime(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s)
}

/// One weight layer: `weights` is `n_out × n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.weights[j * self.n_in + k]
    }

    fn weighted_input(&self, a: &[f64], z: &mut [f64]) {
        for (j, zj) in z.iter_mut().enumerate() {
            let row = &self.weights[j * self.n_in..(j + 1) * self.n_in];
            *zj = row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>() + self.biases[j];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
}

/// Per-layer weighted inputs and activations from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `z^l` for each weight layer.
    pub weighted: Vec<Vec<f64>>,
    /// `a^1 = input` followed by `a^l` for each weight layer.
    pub activations: Vec<Vec<f64>>,
}

impl ForwardPass {
    pub fn output(&self) -> f64 {
        self.activations.last().expect("at least one layer")[0]
    }
}

/// `∂C_m/∂w^l_{jk}` and `∂C_m/∂d^l_j`, laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .fold(0.0f64, |m, g| m.max(g.abs()))
    }
}

impl Network {
    /// Random network with weights `~ N(0, 1/fan_in)` and zero biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidLayout(format!("{layer_sizes:?}")));
        }
        let mut rng = seed::rng(seed::derive(seed, "init", &[]));
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let normal = Normal::new(0.0, 1.0 / (n_in as f64).sqrt()).expect("valid sigma");
                Layer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| normal.sample(&mut rng)).collect(),
                    biases: vec![0.0; n_out],
                }
            })
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    /// All weights and biases set to `value`.
    pub fn constant(layer_sizes: &[usize], value: f64) -> Result<Self> {
        let mut net = Self::new(layer_sizes, 0)?;
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = value);
            l.biases.iter_mut().for_each(|b| *b = value);
        }
        Ok(net)
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() != self.layers.len() + 1 {
            return Err(Error::InvalidLayout("layer count mismatch".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.n_in != self.layer_sizes[i]
                || l.n_out != self.layer_sizes[i + 1]
                || l.weights.len() != l.n_in * l.n_out
                || l.biases.len() != l.n_out
            {
                return Err(Error::InvalidLayout(format!("layer {i} has inconsistent shape")));
            }
        }
        if !self.is_finite() {
            return Err(Error::InvalidLayout("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn forward_pass(&self, input: &[f64]) -> Result<ForwardPass> {
        if input.len() != self.input_len() {
            return Err(Error::Dimension {
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut weighted = Vec::with_capacity(self.layers.len());
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for layer in &self.layers {
            let mut z = vec![0.0; layer.n_out];
            layer.weighted_input(activations.last().expect("nonempty"), &mut z);
            activations.push(z.iter().map(|&v| sigmoid(v)).collect());
            weighted.push(z);
        }
        Ok(ForwardPass {
            weighted,
            activations,
        })
    }

    /// Output activation `a^L` (first output neuron).
    pub fn predict(&self, input: &[f64]) -> Result<f64> {
        Ok(self.forward_pass(input)?.output())
    }

    /// Gradients of `C_m = ½ Σ_j (y_j − a^L_j)²` for a single example.
    pub fn backprop(&self, input: &[f64], target: &[f64]) -> Result<Gradients> {
        let pass = self.forward_pass(input)?;
        self.backprop_from(&pass, target)
    }

    pub fn backprop_from(&self, pass: &ForwardPass, target: &[f64]) -> Result<Gradients> {
        let n_layers = self.layers.len();
        let out = &pass.activations[n_layers];
        if target.len() != out.len() {
            return Err(Error::Dimension {
                expected: out.len(),
                got: target.len(),
            });
        }
        // δ^L_j = (a^L_j − y_j) f'(z^L_j)
        let mut delta: Vec<f64> = out
            .iter()
            .zip(target)
            .zip(&pass.weighted[n_layers - 1])
            .map(|((a, y), &z)| (a - y) * sigmoid_prime(z))
            .collect();
        let mut grads = Gradients::zeros_like(self);
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let a_prev = &pass.activations[l];
            let gw = &mut grads.weights[l];
            for (j, &dj) in delta.iter().enumerate() {
                let row = &mut gw[j * layer.n_in..(j + 1) * layer.n_in];
                row.iter_mut().zip(a_prev).for_each(|(g, &a)| *g = a * dj);
            }
            grads.biases[l].copy_from_slice(&delta);
            if l > 0 {
                // δ^{l−1}_k = f'(z^{l−1}_k) Σ_j w^l_{jk} δ^l_j
                let z_prev = &pass.weighted[l - 1];
                let mut next = vec![0.0; layer.n_in];
                for (j, &dj) in delta.iter().enumerate() {
                    let row = &layer.weights[j * layer.n_in..(j + 1) * layer.n_in];
                    next.iter_mut().zip(row).for_each(|(n, &w)| *n += w * dj);
                }
                next.iter_mut()
                    .zip(z_prev)
                    .for_each(|(n, &z)| *n *= sigmoid_prime(z));
                delta = next;
            }
        }
        Ok(grads)
    }

    /// `w ← w − η g`, `d ← d − η g`.
    pub fn apply_gradients(&mut self, grads: &Gradients, eta: f64) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer
                .weights
                .iter_mut()
                .zip(&grads.weights[l])
                .for_each(|(w, g)| *w -= eta * g);
            layer
                .biases
                .iter_mut()
                .zip(&grads.biases[l])
                .for_each(|(d, g)| *d -= eta * g);
        }
    }
}

/// Network for regression on curves: at least one hidden layer and a single output.
pub fn init_network(layer_sizes: &[usize], seed: u64) -> Result<Network> {
    if layer_sizes.len() < 3 {
        return Err(Error::InvalidLayout(format!(
            "need input, at least one hidden layer and output, got {layer_sizes:?}"
        )));
    }
    if *layer_sizes.last().expect("nonempty") != 1 {
        return Err(Error::InvalidLayout("output layer must have one neuron".into()));
    }
    Network::new(layer_sizes, seed)
}

/// `C = (1/N) Σ_m ½ (y_m − a_m)²`.
pub fn cost(outputs: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(outputs.len(), targets.len(), "cost: length mismatch");
    if outputs.is_empty() {
        return 0.0;
    }
    outputs
        .iter()
        .zip(targets)
        .map(|(a, y)| 0.5 * (y - a).powi(2))
        .sum::<f64>()
        / outputs.len() as f64
}
