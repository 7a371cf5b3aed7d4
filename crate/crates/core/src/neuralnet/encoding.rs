//! Label encodings, input transforms and the persisted network format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Layer, Network};
use super::train::Hyperparams;
use crate::error::{Error, Result};
use crate::rbsim::{RatioCurve, RbCurve};

pub const ALPHA_MAX: f64 = 3.0;
pub const LOG_AMP_MIN: f64 = -8.0;
pub const LOG_AMP_MAX: f64 = -2.0;

/// Maps a physical label to a sigmoid target in `(0, 1)` and back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetEncoding {
    /// `y = α/3`.
    #[serde(rename = "alpha")]
    Alpha,
    /// `y = (log10(A·t0) + 8)/6`.
    #[serde(rename = "log-amp")]
    LogAmp,
}

impl TargetEncoding {
    pub fn tag(self) -> &'static str {
        match self {
            TargetEncoding::Alpha => "alpha",
            TargetEncoding::LogAmp => "log-amp",
        }
    }

    pub fn encode(self, label: f64) -> f64 {
        match self {
            TargetEncoding::Alpha => label / ALPHA_MAX,
            TargetEncoding::LogAmp => (label.log10() - LOG_AMP_MIN) / (LOG_AMP_MAX - LOG_AMP_MIN),
        }
    }

    /// Inverse of [`encode`](Self::encode); outputs are clamped to `[0, 1]` first.
    pub fn decode(self, output: f64) -> f64 {
        let y = output.clamp(0.0, 1.0);
        match self {
            TargetEncoding::Alpha => ALPHA_MAX * y,
            TargetEncoding::LogAmp => 10f64.powf((LOG_AMP_MAX - LOG_AMP_MIN) * y + LOG_AMP_MIN),
        }
    }

    /// Held-out error metric: Δ for exponents, δ for amplitudes.
    pub fn metric(self, predicted: &[f64], truth: &[f64]) -> Result<f64> {
        match self {
            TargetEncoding::Alpha => super::mean_abs_error(predicted, truth),
            TargetEncoding::LogAmp => super::mean_rel_error(predicted, truth),
        }
    }

    pub fn metric_name(self) -> &'static str {
        match self {
            TargetEncoding::Alpha => "delta_abs",
            TargetEncoding::LogAmp => "delta_rel",
        }
    }
}

/// Pointwise preprocessing applied to a curve before it enters the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputTransform {
    /// Curve values fed unchanged.
    Raw,
    /// For fidelity curves: `(log10(−ln(2F − 1)) + 3)/3`, the log of the
    /// accumulated decay exponent. `2F − 1` is clamped to `[1e-4, 1]` and the
    /// exponent floored at `1e-10`.
    LogDecay,
    /// For ratio curves: `asinh(ln κ / scale)/asinh(1/scale)`, a signed log
    /// scale for the deviation of κ from 1.
    AsinhLogRatio { scale: f64 },
}

impl InputTransform {
    pub fn apply_one(self, v: f64) -> f64 {
        match self {
            InputTransform::Raw => v,
            InputTransform::LogDecay => {
                let r = (2.0 * v - 1.0).clamp(1e-4, 1.0);
                ((-r.ln()).max(1e-10).log10() + 3.0) / 3.0
            }
            InputTransform::AsinhLogRatio { scale } => {
                (v.max(1e-300).ln() / scale).asinh() / (1.0 / scale).asinh()
            }
        }
    }

    pub fn apply(self, curve: &[f64]) -> Vec<f64> {
        curve.iter().map(|&v| self.apply_one(v)).collect()
    }
}

/// Provenance of a training run, stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub hyperparams: Option<Hyperparams>,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub dataset_hash: String,
    #[serde(default)]
    pub config_hash: String,
    pub n_train: usize,
}

/// A network together with how to read its inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNetwork {
    pub network: Network,
    pub encoding: TargetEncoding,
    pub input_transform: InputTransform,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    layer_sizes: Vec<usize>,
    /// One row-major `n_out × n_in` array per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    encoding: TargetEncoding,
    input_transform: InputTransform,
    metadata: TrainingMeta,
}

impl TrainedNetwork {
    pub fn predict_raw(&self, curve: &[f64]) -> Result<f64> {
        self.network.predict(&self.input_transform.apply(curve))
    }

    /// Decoded physical prediction for a curve.
    pub fn predict_label(&self, curve: &[f64]) -> Result<f64> {
        Ok(self.encoding.decode(self.predict_raw(curve)?))
    }

    /// Fails unless the network was trained with `enc`.
    pub fn require(&self, enc: TargetEncoding) -> Result<()> {
        if self.encoding != enc {
            return Err(Error::EncodingMismatch {
                expected: enc.tag().into(),
                found: self.encoding.tag().into(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = NetworkFile {
            layer_sizes: self.network.layer_sizes.clone(),
            weights: self.network.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: self.network.layers.iter().map(|l| l.biases.clone()).collect(),
            encoding: self.encoding,
            input_transform: self.input_transform,
            metadata: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        if file.weights.len() + 1 != file.layer_sizes.len() || file.biases.len() != file.weights.len() {
            return Err(Error::InvalidLayout("layer arrays do not match layer_sizes".into()));
        }
        let layers = file
            .weights
            .into_iter()
            .zip(file.biases)
            .enumerate()
            .map(|(i, (weights, biases))| Layer {
                n_in: file.layer_sizes[i],
                n_out: file.layer_sizes[i + 1],
                weights,
                biases,
            })
            .collect();
        let network = Network {
            layer_sizes: file.layer_sizes,
            layers,
        };
        network.validate()?;
        Ok(Self {
            network,
            encoding: file.encoding,
            input_transform: file.input_transform,
            meta: file.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Malformed {
                path: path.into(),
                reason: j.to_string(),
            },
            e => e,
        })
    }
}

fn check_len(net: &TrainedNetwork, len: usize) -> Result<()> {
    if net.network.input_len() != len {
        return Err(Error::Dimension {
            expected: net.network.input_len(),
            got: len,
        });
    }
    Ok(())
}

/// Noise exponent from a κ curve, `α = 3·a^L`.
pub fn predict_alpha(net: &TrainedNetwork, kappa: &RatioCurve) -> Result<f64> {
    net.require(TargetEncoding::Alpha)?;
    check_len(net, kappa.ratios.len())?;
    net.predict_label(&kappa.ratios)
}

/// Noise amplitude `A·t0 = 10^(6·a^L − 8)` from an uncorrected fidelity curve.
pub fn predict_amplitude(net: &TrainedNetwork, fidelity: &RbCurve) -> Result<f64> {
    net.require(TargetEncoding::LogAmp)?;
    check_len(net, fidelity.fidelities.len())?;
    net.predict_label(&fidelity.fidelities)
}
