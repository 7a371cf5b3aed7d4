//! Pipeline configuration: a single JSON document with explicit seeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::content_hash;
use crate::dataset::{cell_centers, GridSpec};
use crate::error::{Error, Result};
use crate::neuralnet::{Hyperparams, InputTransform};
use crate::rbsim::CalibrationSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hyperparams: Hyperparams,
    pub input_transform: InputTransform,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldoutConfig {
    pub size: usize,
    pub alpha_seed: u64,
    pub amplitude_seed: u64,
}

/// Layout of the deeper variant trained by the depth experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthConfig {
    pub n_hidden_layers: usize,
    pub n_neurons: usize,
}

impl Default for DepthConfig {
    fn default() -> Self {
        Self {
            n_hidden_layers: 4,
            n_neurons: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    pub calibration: CalibrationSettings,
    /// Use these models instead of calibrating.
    #[serde(default)]
    pub models_file: Option<PathBuf>,
    pub alpha_grid: GridSpec,
    pub amplitude_grid: GridSpec,
    pub holdout: HoldoutConfig,
    pub alpha_network: NetworkConfig,
    pub amplitude_network: NetworkConfig,
    #[serde(default)]
    pub depth: DepthConfig,
}

impl PipelineConfig {
    /// Reduced grids that run end to end in about a minute.
    ///
    /// Curves have 100 gates averaged over 50 runs; the α set is
    /// 10 × 5 × 4 and the amplitude set 50 × 4 examples, trained for 300
    /// epochs with η = 5.
    pub fn desk(output_dir: impl Into<PathBuf>) -> Self {
        let hp = Hyperparams {
            learning_rate: 5.0,
            n_epochs: 300,
            ..Hyperparams::default()
        };
        Self {
            output_dir: output_dir.into(),
            workers: None,
            calibration: CalibrationSettings::default(),
            models_file: None,
            alpha_grid: GridSpec {
                alpha_points: cell_centers(0.0, 3.0, 10),
                log_amp_points: cell_centers(-7.0, -4.0, 5),
                replicas_per_cell: 4,
                rb_runs_per_replica: 50,
                n_gates: 100,
                base_seed: 101,
            },
            amplitude_grid: GridSpec {
                alpha_points: vec![1.5],
                log_amp_points: cell_centers(-8.0, -2.0, 50),
                replicas_per_cell: 4,
                rb_runs_per_replica: 50,
                n_gates: 100,
                base_seed: 202,
            },
            holdout: HoldoutConfig {
                size: 500,
                alpha_seed: 303,
                amplitude_seed: 404,
            },
            alpha_network: NetworkConfig {
                hyperparams: hp,
                input_transform: InputTransform::AsinhLogRatio { scale: 1e-5 },
                init_seed: 7,
                shuffle_seed: 17,
            },
            amplitude_network: NetworkConfig {
                hyperparams: hp,
                input_transform: InputTransform::LogDecay,
                init_seed: 8,
                shuffle_seed: 18,
            },
            depth: DepthConfig::default(),
        }
    }

    /// Full grids of 10000 examples, 200-gate curves of 200 runs, default hyperparameters.
    pub fn full(output_dir: impl Into<PathBuf>) -> Self {
        let mut cfg = Self::desk(output_dir);
        cfg.alpha_grid = GridSpec::alpha_default(101);
        cfg.amplitude_grid = GridSpec::amplitude_default(202);
        cfg.alpha_network.hyperparams = Hyperparams::default();
        cfg.amplitude_network.hyperparams = Hyperparams::default();
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))
    }

    /// Load, apply `key.path=value` overrides, and validate.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: Self = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // relative paths inside the file are taken relative to the file
        if let Some(dir) = path.parent() {
            if let Some(m) = &cfg.models_file {
                if m.is_relative() {
                    cfg.models_file = Some(dir.join(m));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha_grid.validate()?;
        self.amplitude_grid.validate()?;
        if self.amplitude_grid.alpha_points.len() != 1 {
            return Err(Error::Config("amplitude grid needs exactly one exponent".into()));
        }
        if self.holdout.size == 0 {
            return Err(Error::Config("holdout size must be at least 1".into()));
        }
        for net in [&self.alpha_network, &self.amplitude_network] {
            net.hyperparams.validate()?;
        }
        if self.depth.n_hidden_layers == 0 || self.depth.n_neurons == 0 {
            return Err(Error::Config("depth variant needs a hidden layer".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let Some(m) = &self.models_file {
            if !m.is_file() {
                return Err(Error::Config(format!("models file {} not found", m.display())));
            }
        }
        Ok(())
    }

    /// Hash of everything that affects results (output location and worker count excluded).
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output_dir");
            map.remove("workers");
        }
        content_hash(&v)
    }
}

/// Set `a.b.c=value` in a JSON document; `value` is parsed as JSON, falling
/// back to a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| Error::Config(format!("override {path:?}: {key:?} is not an index")))?;
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("override {path:?}: index {idx} out of range")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("override {path:?}: {key:?} is not inside an object"))),
        };
    }
    Ok(())
}
