//! Mini-batch gradient descent driver.
//!
//! Each epoch reshuffles the training set with an epoch-derived seed, cuts it
//! into bins of `b` examples (a trailing partial bin is dropped), and applies
//! one update per bin with the bin-averaged gradient.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoding::{InputTransform, TargetEncoding, TrainedNetwork, TrainingMeta};
use super::network::{cost, Gradients, Network};
use crate::error::{Error, Result};
use crate::seed;

/// Where a training example came from; enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Provenance {
    /// `(exponent index, amplitude index)` on the generating grid.
    pub cell: [u32; 2],
    pub replica: u32,
    /// Base seed of the averaged RB runs.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: Vec<f64>,
    /// Encoded label in `(0, 1)`.
    pub target: f64,
    /// Physical label (α, or A·t0).
    pub label_raw: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub bin_size: usize,
    pub n_epochs: usize,
    pub n_neurons: usize,
    pub n_hidden_layers: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            bin_size: 10,
            n_epochs: 1000,
            n_neurons: 50,
            n_hidden_layers: 2,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidHyperparams(m.into()));
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be finite and non-negative");
        }
        if self.bin_size == 0 {
            return bad("bin size must be positive");
        }
        if self.n_neurons == 0 || self.n_hidden_layers == 0 {
            return bad("need at least one hidden layer with one neuron");
        }
        Ok(())
    }

    /// `[input, n_neurons × n_hidden_layers, 1]`.
    pub fn layout(&self, input_len: usize) -> Vec<usize> {
        let mut v = vec![input_len];
        v.extend(std::iter::repeat_n(self.n_neurons, self.n_hidden_layers));
        v.push(1);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub metric: String,
    /// Held-out Δ or δ after each epoch.
    pub error_history: Vec<f64>,
    /// Averaged training cost `C` after each epoch.
    pub cost_history: Vec<f64>,
    pub initial_cost: f64,
    pub final_cost: f64,
}

impl TrainReport {
    pub fn final_error(&self) -> Option<f64> {
        self.error_history.last().copied()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,{}", self.metric)?;
        for (e, v) in self.error_history.iter().enumerate() {
            writeln!(out, "{},{}", e + 1, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub hp: Hyperparams,
    pub encoding: TargetEncoding,
    pub input_transform: InputTransform,
    /// Seed of the per-epoch shuffles.
    pub seed: u64,
    /// Recorded in the metadata only; initialization happens before [`train`].
    pub init_seed: u64,
    pub dataset_hash: String,
}

/// Abort when the cost grows past this multiple of its initial value.
pub const DIVERGENCE_FACTOR: f64 = 100.0;

fn prepare(examples: &[TrainingExample], transform: InputTransform, n_in: usize) -> Result<Vec<Vec<f64>>> {
    examples
        .iter()
        .map(|ex| {
            if ex.input.len() != n_in {
                return Err(Error::Dimension {
                    expected: n_in,
                    got: ex.input.len(),
                });
            }
            Ok(transform.apply(&ex.input))
        })
        .collect()
}

fn mean_cost(net: &Network, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    let outputs: Vec<f64> = inputs
        .par_iter()
        .map(|x| net.predict(x))
        .collect::<Result<_>>()?;
    Ok(cost(&outputs, targets))
}

fn heldout_error(
    net: &Network,
    encoding: TargetEncoding,
    inputs: &[Vec<f64>],
    labels: &[f64],
) -> Result<f64> {
    let predicted: Vec<f64> = inputs
        .par_iter()
        .map(|x| net.predict(x).map(|o| encoding.decode(o)))
        .collect::<Result<_>>()?;
    encoding.metric(&predicted, labels)
}

/// Train `net` on `dataset`, tracking the held-out error after every epoch.
///
/// When `heldout` is empty the error history is computed on the training set.
pub fn train(
    mut net: Network,
    dataset: &[TrainingExample],
    heldout: &[TrainingExample],
    opts: &TrainOptions,
) -> Result<(TrainedNetwork, TrainReport)> {
    opts.hp.validate()?;
    net.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let b = opts.hp.bin_size;
    let n_in = net.input_len();
    let inputs = prepare(dataset, opts.input_transform, n_in)?;
    let targets: Vec<f64> = dataset.iter().map(|e| e.target).collect();
    let eval_set = if heldout.is_empty() { dataset } else { heldout };
    let eval_inputs = prepare(eval_set, opts.input_transform, n_in)?;
    let eval_labels: Vec<f64> = eval_set.iter().map(|e| e.label_raw).collect();

    let initial_cost = mean_cost(&net, &inputs, &targets)?;
    let mut error_history = Vec::with_capacity(opts.hp.n_epochs);
    let mut cost_history = Vec::with_capacity(opts.hp.n_epochs);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let inv_b = 1.0 / b as f64;

    for epoch in 0..opts.hp.n_epochs {
        let mut rng = seed::rng(seed::derive(opts.seed, "epoch", &[epoch as u64]));
        order.shuffle(&mut rng);
        for bin in order.chunks_exact(b) {
            let mut total = Gradients::zeros_like(&net);
            for &i in bin {
                total.add_assign(&net.backprop(&inputs[i], &[targets[i]])?);
            }
            net.apply_gradients(&total, opts.hp.learning_rate * inv_b);
        }
        let c = mean_cost(&net, &inputs, &targets)?;
        if !c.is_finite() || c > DIVERGENCE_FACTOR * initial_cost.max(1e-12) {
            return Err(Error::Divergence { epoch: epoch + 1, cost: c });
        }
        cost_history.push(c);
        error_history.push(heldout_error(&net, opts.encoding, &eval_inputs, &eval_labels)?);
    }

    let final_cost = cost_history.last().copied().unwrap_or(initial_cost);
    let trained = TrainedNetwork {
        network: net,
        encoding: opts.encoding,
        input_transform: opts.input_transform,
        meta: TrainingMeta {
            hyperparams: Some(opts.hp),
            init_seed: opts.init_seed,
            shuffle_seed: opts.seed,
            dataset_hash: opts.dataset_hash.clone(),
            config_hash: String::new(),
            n_train: dataset.len(),
        },
    };
    let report = TrainReport {
        metric: opts.encoding.metric_name().into(),
        error_history,
        cost_history,
        initial_cost,
        final_cost,
    };
    Ok((trained, report))
}

/// Decoded predictions and the encoding's error metric over `examples`.
pub fn evaluate(net: &TrainedNetwork, examples: &[TrainingExample]) -> Result<(Vec<f64>, f64)> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted: Vec<f64> = examples
        .par_iter()
        .map(|e| net.predict_label(&e.input))
        .collect::<Result<_>>()?;
    let truth: Vec<f64> = examples.iter().map(|e| e.label_raw).collect();
    let err = net.encoding.metric(&predicted, &truth)?;
    Ok((predicted, err))
}
