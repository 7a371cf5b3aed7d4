//! End-to-end workflow: calibrate, build datasets, train both networks,
//! evaluate on held-out data, and predict spectra for new curves.
//!
//! Every stage writes its artifacts plus a record under `stages/` holding a
//! key derived from the config slice and upstream artifact hashes. A stage
//! whose record key and artifact hashes still match is skipped.

mod config;
mod predict;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{apply_override, DepthConfig, HoldoutConfig, NetworkConfig, PipelineConfig};
pub use predict::{
    network_id, predict, read_curve_csv, write_curve_csv, CurveSet, Diagnostics,
    SpectroscopyResult,
};

use crate::dataset::{
    self, build_dataset, dataset_hash, split_holdout, BuildOptions, Dataset, DatasetKind,
};
use crate::error::{Error, Result};
use crate::neuralnet::{evaluate, init_network, train, TrainOptions, TrainReport, TrainedNetwork};
use crate::rbsim::{calibrate_models, ModelPair};

/// Hex SHA-256 of a value's JSON form.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(value).expect("value serializes")))
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// One file produced by a stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub stage: String,
    pub stage_key: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StageRecord {
    stage: String,
    stage_key: String,
    config_hash: String,
    files: Vec<(String, String)>,
}

/// Held-out results of one trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub metric: String,
    pub untrained_error: f64,
    pub final_error: f64,
    pub n_train: usize,
    pub n_holdout: usize,
    pub layer_sizes: Vec<usize>,
    pub network_file: String,
    pub history_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub config_hash: String,
    pub model_pair_id: String,
    pub alpha: NetworkSummary,
    pub amplitude: NetworkSummary,
    pub artifacts: Vec<Artifact>,
}

/// Summary plus the stages that actually ran (the rest came from cache).
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub summary: PipelineSummary,
    pub executed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrainStageReport {
    untrained_error: f64,
    report: TrainReport,
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Stage runner bound to one config and output directory.
pub struct Pipeline {
    cfg: PipelineConfig,
    config_hash: String,
    dir: PathBuf,
    executed: Vec<String>,
    artifacts: Vec<Artifact>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let dir = cfg.output_dir.clone();
        std::fs::create_dir_all(dir.join("stages")).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            config_hash: cfg.hash(),
            cfg,
            dir,
            executed: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn record_path(&self, stage: &str) -> PathBuf {
        self.dir.join("stages").join(format!("{stage}.json"))
    }

    fn cached(&self, stage: &str, key: &str) -> Option<StageRecord> {
        let text = std::fs::read_to_string(self.record_path(stage)).ok()?;
        let rec: StageRecord = serde_json::from_str(&text).ok()?;
        if rec.stage_key != key {
            return None;
        }
        for (file, sha) in &rec.files {
            if file_hash(&self.path(file)).ok()? != *sha {
                return None;
            }
        }
        Some(rec)
    }

    /// Run `body` unless a matching record exists; either way register its files.
    fn stage(
        &mut self,
        stage: &'static str,
        key: &str,
        body: impl FnOnce(&Self) -> Result<Vec<String>>,
    ) -> Result<()> {
        let rec = match self.cached(stage, key) {
            Some(rec) => rec,
            None => {
                let files = body(self).map_err(|e| Error::staged(stage, e))?;
                let files = files
                    .into_iter()
                    .map(|f| Ok((f.clone(), file_hash(&self.path(&f))?)))
                    .collect::<Result<Vec<_>>>()?;
                let rec = StageRecord {
                    stage: stage.into(),
                    stage_key: key.into(),
                    config_hash: self.config_hash.clone(),
                    files,
                };
                let text = serde_json::to_string_pretty(&rec)?;
                dataset::write_atomic(&self.record_path(stage), text.as_bytes())?;
                self.executed.push(stage.into());
                rec
            }
        };
        for (file, sha256) in rec.files {
            self.artifacts.push(Artifact {
                file,
                sha256,
                stage: stage.into(),
                stage_key: rec.stage_key.clone(),
                config_hash: rec.config_hash.clone(),
            });
        }
        Ok(())
    }

    fn artifact_hash(&self, file: &str) -> String {
        self.artifacts
            .iter()
            .rev()
            .find(|a| a.file == file)
            .map(|a| a.sha256.clone())
            .unwrap_or_default()
    }

    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            workers: self.cfg.workers,
            checkpoint: None,
        }
    }

    /// Calibrated (or supplied) model pair, written to `models.json`.
    pub fn models(&mut self) -> Result<ModelPair> {
        let key = match &self.cfg.models_file {
            Some(path) => content_hash(&("file", file_hash(path)?)),
            None => content_hash(&("calibrate", &self.cfg.calibration)),
        };
        self.stage("calibrate", &key, |p| {
            let pair = match &p.cfg.models_file {
                Some(path) => load_models(path)?,
                None => calibrate_models(&p.cfg.calibration)?,
            };
            save_models(&pair, &p.path("models.json"))?;
            Ok(vec!["models.json".into()])
        })?;
        load_models(&self.path("models.json"))
    }

    fn dataset_file(kind: DatasetKind, holdout: bool) -> String {
        let k = match kind {
            DatasetKind::Alpha => "alpha",
            DatasetKind::Amplitude => "amplitude",
        };
        if holdout {
            format!("{k}_holdout.bin")
        } else {
            format!("{k}_train.bin")
        }
    }

    /// Training and held-out datasets of one kind.
    pub fn datasets(&mut self, kind: DatasetKind, pair: &ModelPair) -> Result<(Dataset, Dataset)> {
        let (grid, hold_seed, stage_train, stage_hold) = match kind {
            DatasetKind::Alpha => (
                self.cfg.alpha_grid.clone(),
                self.cfg.holdout.alpha_seed,
                "alpha-dataset",
                "alpha-holdout",
            ),
            DatasetKind::Amplitude => (
                self.cfg.amplitude_grid.clone(),
                self.cfg.holdout.amplitude_seed,
                "amplitude-dataset",
                "amplitude-holdout",
            ),
        };
        let train_file = Self::dataset_file(kind, false);
        let hold_file = Self::dataset_file(kind, true);
        let pair_id = pair.id();
        let opts = self.build_options();

        let key = content_hash(&(kind, &grid, &pair_id));
        self.stage(stage_train, &key, |p| {
            let data = p.path(&train_file);
            let mut opts = opts.clone();
            opts.checkpoint = Some(p.path(&format!("{train_file}.partial")));
            let ds = build_dataset(kind, &grid, pair, &opts)?;
            dataset::save_dataset(&ds, &data)?;
            let manifest = train_file.replace(".bin", ".manifest.json");
            dataset::write_manifest(&ds, &data, &p.path(&manifest))?;
            Ok(vec![train_file.clone(), manifest])
        })?;

        let size = self.cfg.holdout.size;
        let key = content_hash(&(kind, &grid, &pair_id, size, hold_seed));
        self.stage(stage_hold, &key, |p| {
            let ds = split_holdout(kind, &grid, pair, size, hold_seed, &opts)?;
            dataset::save_dataset(&ds, &p.path(&hold_file))?;
            Ok(vec![hold_file.clone()])
        })?;
        Ok((
            dataset::load_dataset(&self.path(&train_file))?,
            dataset::load_dataset(&self.path(&hold_file))?,
        ))
    }

    /// Train (or reload) the network for `kind` with the configured or an explicit layout.
    pub fn network(
        &mut self,
        kind: DatasetKind,
        net_cfg: &NetworkConfig,
        suffix: &str,
        train_ds: &Dataset,
        holdout: &Dataset,
    ) -> Result<NetworkSummary> {
        let stem = match kind {
            DatasetKind::Alpha => "alpha",
            DatasetKind::Amplitude => "amplitude",
        };
        let stage: &'static str = match (kind, suffix.is_empty()) {
            (DatasetKind::Alpha, true) => "alpha-train",
            (DatasetKind::Alpha, false) => "alpha-train-deep",
            (DatasetKind::Amplitude, true) => "amplitude-train",
            (DatasetKind::Amplitude, false) => "amplitude-train-deep",
        };
        let net_file = format!("{stem}{suffix}_network.json");
        let hist_file = format!("{stem}{suffix}_history.csv");
        let report_file = format!("{stem}{suffix}_report.json");
        let train_hash = self.artifact_hash(&Self::dataset_file(kind, false));
        let hold_hash = self.artifact_hash(&Self::dataset_file(kind, true));
        let key = content_hash(&(kind, net_cfg, &train_hash, &hold_hash));
        let config_hash = self.config_hash.clone();
        self.stage(stage, &key, |p| {
            let layout = net_cfg.hyperparams.layout(train_ds.input_len());
            let net = init_network(&layout, net_cfg.init_seed)?;
            let encoding = kind.encoding();
            let untrained = TrainedNetwork {
                network: net.clone(),
                encoding,
                input_transform: net_cfg.input_transform,
                meta: Default::default(),
            };
            let (_, untrained_error) = evaluate(&untrained, &holdout.examples)?;
            let opts = TrainOptions {
                hp: net_cfg.hyperparams,
                encoding,
                input_transform: net_cfg.input_transform,
                seed: net_cfg.shuffle_seed,
                init_seed: net_cfg.init_seed,
                dataset_hash: dataset_hash(train_ds)?,
            };
            let (mut trained, report) = train(net, &train_ds.examples, &holdout.examples, &opts)?;
            trained.meta.config_hash = config_hash.clone();
            trained.save(&p.path(&net_file))?;
            let mut csv = Vec::new();
            report
                .write_csv(&mut csv)
                .map_err(|e| Error::io(p.path(&hist_file), e))?;
            std::fs::write(p.path(&hist_file), csv).map_err(|e| Error::io(p.path(&hist_file), e))?;
            let rep = TrainStageReport {
                untrained_error,
                report,
            };
            std::fs::write(p.path(&report_file), serde_json::to_string_pretty(&rep)?)
                .map_err(|e| Error::io(p.path(&report_file), e))?;
            Ok(vec![net_file.clone(), hist_file.clone(), report_file.clone()])
        })?;
        let rep: TrainStageReport = read_json(&self.path(&report_file))?;
        let trained = TrainedNetwork::load(&self.path(&net_file))?;
        Ok(NetworkSummary {
            metric: rep.report.metric.clone(),
            untrained_error: rep.untrained_error,
            final_error: rep.report.final_error().unwrap_or(rep.untrained_error),
            n_train: train_ds.len(),
            n_holdout: holdout.len(),
            layer_sizes: trained.network.layer_sizes,
            network_file: net_file,
            history_file: hist_file,
        })
    }

    pub fn executed(&self) -> &[String] {
        &self.executed
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: path.into(),
        reason: e.to_string(),
    })
}

pub fn save_models(pair: &ModelPair, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(pair)?;
    dataset::write_atomic(path, text.as_bytes())
}

pub fn load_models(path: &Path) -> Result<ModelPair> {
    let pair: ModelPair = read_json(path)?;
    pair.validate()?;
    Ok(pair)
}

/// Calibrate → datasets → both networks → held-out evaluation → `summary.json`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let mut p = Pipeline::new(cfg.clone())?;
    let pair = p.models()?;
    let (a_train, a_hold) = p.datasets(DatasetKind::Alpha, &pair)?;
    let (m_train, m_hold) = p.datasets(DatasetKind::Amplitude, &pair)?;
    let alpha_cfg = cfg.alpha_network.clone();
    let amp_cfg = cfg.amplitude_network.clone();
    let alpha = p.network(DatasetKind::Alpha, &alpha_cfg, "", &a_train, &a_hold)?;
    let amplitude = p.network(DatasetKind::Amplitude, &amp_cfg, "", &m_train, &m_hold)?;
    let summary = PipelineSummary {
        config_hash: p.config_hash.clone(),
        model_pair_id: pair.id(),
        alpha,
        amplitude,
        artifacts: p.artifacts.clone(),
    };
    let text = serde_json::to_string_pretty(&summary)?;
    dataset::write_atomic(&p.path(SUMMARY_FILE), text.as_bytes())?;
    Ok(PipelineOutcome {
        summary,
        executed: p.executed.clone(),
    })
}

/// Final held-out errors of the default and the deeper layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthComparison {
    pub metric: String,
    pub default_layers: Vec<usize>,
    pub default_error: f64,
    pub deep_layers: Vec<usize>,
    pub deep_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub config_hash: String,
    pub alpha: DepthComparison,
    pub amplitude: DepthComparison,
}

pub const DEPTH_REPORT_FILE: &str = "depth_report.json";

/// Train the deeper variant of both networks next to the defaults on the same data and seeds.
pub fn depth_experiment(cfg: &PipelineConfig) -> Result<DepthReport> {
    let mut p = Pipeline::new(cfg.clone())?;
    let pair = p.models()?;
    let mut compare = |kind: DatasetKind, net_cfg: &NetworkConfig| -> Result<DepthComparison> {
        let (tr, ho) = p.datasets(kind, &pair)?;
        let default = p.network(kind, net_cfg, "", &tr, &ho)?;
        let mut deep_cfg = net_cfg.clone();
        deep_cfg.hyperparams.n_hidden_layers = cfg.depth.n_hidden_layers;
        deep_cfg.hyperparams.n_neurons = cfg.depth.n_neurons;
        let deep = p.network(kind, &deep_cfg, "_deep", &tr, &ho)?;
        Ok(DepthComparison {
            metric: default.metric,
            default_layers: default.layer_sizes,
            default_error: default.final_error,
            deep_layers: deep.layer_sizes,
            deep_error: deep.final_error,
        })
    };
    let alpha = compare(DatasetKind::Alpha, &cfg.alpha_network)?;
    let amplitude = compare(DatasetKind::Amplitude, &cfg.amplitude_network)?;
    let report = DepthReport {
        config_hash: p.config_hash.clone(),
        alpha,
        amplitude,
    };
    let text = serde_json::to_string_pretty(&report)?;
    dataset::write_atomic(&p.path(DEPTH_REPORT_FILE), text.as_bytes())?;
    Ok(report)
}

/// Check that a summary only references artifacts that are present with their recorded hashes.
pub fn verify_summary(dir: &Path) -> Result<PipelineSummary> {
    let summary: PipelineSummary = read_json(&dir.join(SUMMARY_FILE))?;
    for a in &summary.artifacts {
        if a.config_hash.is_empty() || file_hash(&dir.join(&a.file))? != a.sha256 {
            return Err(Error::Checksum(dir.join(&a.file)));
        }
    }
    Ok(summary)
}
