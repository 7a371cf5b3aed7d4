//! Labeled training and evaluation sets built from averaged RB curves.
//!
//! An exponent (`alpha`) dataset pairs κ curves with `α/3`; an amplitude
//! dataset pairs uncorrected fidelity curves with `(log10 A + 8)/6` at a
//! single fixed exponent. Every example records the grid cell, replica and
//! seed it came from and can be regenerated from those alone.

mod store;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{Provenance, TargetEncoding, TrainingExample};
use crate::noisegen::NoiseSpectrum;
use crate::rbsim::{ratio_curve, ModelPair, RbSetup, RbSimulator};
use crate::seed;

pub use store::{
    decode_dataset, encode_dataset,
    dataset_hash, export_csv, write_atomic, load_dataset, save_dataset, write_manifest, Manifest, FORMAT_MAGIC,
    SCHEMA_VERSION,
};

/// Examples generated between checkpoint writes.
pub const CHECKPOINT_EVERY: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Alpha,
    Amplitude,
}

impl DatasetKind {
    pub fn encoding(self) -> TargetEncoding {
        match self {
            DatasetKind::Alpha => TargetEncoding::Alpha,
            DatasetKind::Amplitude => TargetEncoding::LogAmp,
        }
    }

    fn tag(self) -> u64 {
        match self {
            DatasetKind::Alpha => 0,
            DatasetKind::Amplitude => 1,
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(DatasetKind::Alpha),
            "amp" | "amplitude" => Ok(DatasetKind::Amplitude),
            other => Err(Error::Config(format!("unknown dataset kind {other:?}"))),
        }
    }
}

/// Training examples vs. freshly drawn evaluation examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DatasetRole {
    #[default]
    Train,
    Holdout,
}

impl DatasetRole {
    fn seed_tag(self) -> &'static str {
        match self {
            DatasetRole::Train => "example",
            DatasetRole::Holdout => "holdout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_points: Vec<f64>,
    /// `log10(A·t0)` values.
    pub log_amp_points: Vec<f64>,
    pub replicas_per_cell: usize,
    pub rb_runs_per_replica: usize,
    pub n_gates: usize,
    pub base_seed: u64,
}

/// `n` cell centers of `(lo, hi)`: `lo + (hi − lo)(k − ½)/n`, `k = 1..=n`.
pub fn cell_centers(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| lo + (hi - lo) * (k as f64 - 0.5) / n as f64)
        .collect()
}

/// Midpoints between consecutive values.
pub fn midpoints(points: &[f64]) -> Vec<f64> {
    points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

impl GridSpec {
    /// 50 exponents on `(0, 3)` × 25 amplitudes on `(−7, −4)` × 8 replicas.
    pub fn alpha_default(base_seed: u64) -> Self {
        Self {
            alpha_points: cell_centers(0.0, 3.0, 50),
            log_amp_points: cell_centers(-7.0, -4.0, 25),
            replicas_per_cell: 8,
            rb_runs_per_replica: 200,
            n_gates: 200,
            base_seed,
        }
    }

    /// α = 1.5 × 400 amplitudes on `(−8, −2)` × 25 replicas.
    pub fn amplitude_default(base_seed: u64) -> Self {
        Self {
            alpha_points: vec![1.5],
            log_amp_points: cell_centers(-8.0, -2.0, 400),
            replicas_per_cell: 25,
            rb_runs_per_replica: 200,
            n_gates: 200,
            base_seed,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.alpha_points.len() * self.log_amp_points.len()
    }

    pub fn n_examples(&self) -> usize {
        self.n_cells() * self.replicas_per_cell
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGrid(m));
        if self.alpha_points.is_empty() || self.log_amp_points.is_empty() {
            return bad("grid needs at least one exponent and one amplitude".into());
        }
        if self.replicas_per_cell == 0 || self.rb_runs_per_replica == 0 {
            return bad("replica and run counts must be positive".into());
        }
        if self.n_gates == 0 {
            return bad("n_gates must be positive".into());
        }
        for &a in &self.alpha_points {
            if !(0.0..=crate::noisegen::MAX_EXPONENT).contains(&a) {
                return bad(format!("exponent {a} outside [0, 3]"));
            }
        }
        for &l in &self.log_amp_points {
            if !l.is_finite() || !(-300.0..=300.0).contains(&l) {
                return bad(format!("log-amplitude {l} out of range"));
            }
        }
        Ok(())
    }

    /// Flat index → `(exponent index, amplitude index, replica)`, replicas fastest.
    fn locate(&self, flat: usize) -> (usize, usize, usize) {
        let r = flat % self.replicas_per_cell;
        let cell = flat / self.replicas_per_cell;
        (cell / self.log_amp_points.len(), cell % self.log_amp_points.len(), r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub role: DatasetRole,
    pub grid: GridSpec,
    /// [`ModelPair::id`] of the models that produced the curves.
    pub model_pair_id: String,
    pub examples: Vec<TrainingExample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.grid.n_gates
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        self.examples.iter().map(|e| e.provenance.seed)
    }

    /// First `n` examples in generation order.
    pub fn truncated(&self, n: usize) -> Dataset {
        let mut ds = self.clone();
        ds.examples.truncate(n);
        ds
    }

    /// Every `step`-th example, starting at `offset`.
    pub fn strided(&self, step: usize, offset: usize) -> Dataset {
        let mut ds = self.clone();
        ds.examples = self
            .examples
            .iter()
            .skip(offset)
            .step_by(step.max(1))
            .cloned()
            .collect();
        ds
    }
}

/// Parallelism and checkpointing for dataset generation.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Partial results are written here every [`CHECKPOINT_EVERY`] examples
    /// and resumed from when present.
    pub checkpoint: Option<PathBuf>,
}

/// Seed of one example; both models of a pair use it so they share gate sequences.
pub fn example_seed(
    base: u64,
    role: DatasetRole,
    kind: DatasetKind,
    cell: [u32; 2],
    replica: u32,
) -> u64 {
    seed::derive(
        base,
        role.seed_tag(),
        &[kind.tag(), cell[0] as u64, cell[1] as u64, replica as u64],
    )
}

/// Simulate one example at `(alpha, log_amp)`.
pub fn generate_example(
    kind: DatasetKind,
    pair: &ModelPair,
    alpha: f64,
    log_amp: f64,
    n_gates: usize,
    n_runs: usize,
    provenance: Provenance,
) -> Result<TrainingExample> {
    let spec = NoiseSpectrum::new(10f64.powf(log_amp), alpha)?;
    let sim = RbSimulator::new(&spec, RbSetup::for_pair(n_gates, pair))?;
    let seed = provenance.seed;
    let (input, label_raw, target) = match kind {
        DatasetKind::Alpha => {
            let u = sim.average(&pair.uncorrected, n_runs, seed)?;
            let c = sim.average(&pair.corrected, n_runs, seed)?;
            (ratio_curve(&c, &u)?.ratios, alpha, TargetEncoding::Alpha.encode(alpha))
        }
        DatasetKind::Amplitude => {
            let u = sim.average(&pair.uncorrected, n_runs, seed)?;
            let target = (log_amp - crate::neuralnet::LOG_AMP_MIN)
                / (crate::neuralnet::LOG_AMP_MAX - crate::neuralnet::LOG_AMP_MIN);
            (u.fidelities, spec.amplitude, target)
        }
    };
    Ok(TrainingExample {
        input,
        target,
        label_raw,
        provenance,
    })
}

/// Regenerate an example from its recorded provenance.
pub fn regenerate(ds: &Dataset, pair: &ModelPair, provenance: &Provenance) -> Result<TrainingExample> {
    let [ia, il] = provenance.cell;
    let alpha = *ds
        .grid
        .alpha_points
        .get(ia as usize)
        .ok_or_else(|| Error::InvalidGrid(format!("exponent index {ia}")))?;
    let log_amp = *ds
        .grid
        .log_amp_points
        .get(il as usize)
        .ok_or_else(|| Error::InvalidGrid(format!("amplitude index {il}")))?;
    generate_example(
        ds.kind,
        pair,
        alpha,
        log_amp,
        ds.grid.n_gates,
        ds.grid.rb_runs_per_replica,
        provenance.clone(),
    )
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn build(
    kind: DatasetKind,
    role: DatasetRole,
    grid: &GridSpec,
    pair: &ModelPair,
    jobs: Vec<Provenance>,
    opts: &BuildOptions,
) -> Result<Dataset> {
    grid.validate()?;
    pair.validate()?;
    let mut ds = Dataset {
        kind,
        role,
        grid: grid.clone(),
        model_pair_id: pair.id(),
        examples: Vec::with_capacity(jobs.len()),
    };
    if let Some(path) = &opts.checkpoint {
        if path.exists() {
            let partial = load_dataset(path)?;
            let compatible = partial.kind == kind
                && partial.role == role
                && partial.grid == *grid
                && partial.model_pair_id == ds.model_pair_id
                && partial.len() <= jobs.len()
                && partial
                    .examples
                    .iter()
                    .zip(&jobs)
                    .all(|(e, p)| e.provenance == *p);
            if compatible {
                ds.examples = partial.examples;
            }
        }
    }
    let generate = |p: &Provenance| {
        let [ia, il] = p.cell;
        generate_example(
            kind,
            pair,
            grid.alpha_points[ia as usize],
            grid.log_amp_points[il as usize],
            grid.n_gates,
            grid.rb_runs_per_replica,
            p.clone(),
        )
    };
    with_workers(opts.workers, || -> Result<()> {
        while ds.examples.len() < jobs.len() {
            let start = ds.examples.len();
            let end = (start + CHECKPOINT_EVERY).min(jobs.len());
            let chunk: Vec<TrainingExample> = jobs[start..end]
                .par_iter()
                .map(generate)
                .collect::<Result<_>>()?;
            ds.examples.extend(chunk);
            if let Some(path) = &opts.checkpoint {
                if ds.examples.len() < jobs.len() {
                    save_dataset(&ds, path)?;
                }
            }
        }
        Ok(())
    })??;
    if let Some(path) = &opts.checkpoint {
        if path.exists() {
            std::fs::remove_file(path).map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(ds)
}

fn grid_jobs(kind: DatasetKind, role: DatasetRole, grid: &GridSpec) -> Vec<Provenance> {
    (0..grid.n_examples())
        .map(|flat| {
            let (ia, il, r) = grid.locate(flat);
            let cell = [ia as u32, il as u32];
            Provenance {
                cell,
                replica: r as u32,
                seed: example_seed(grid.base_seed, role, kind, cell, r as u32),
            }
        })
        .collect()
}

/// κ-curve examples over the full grid.
pub fn build_alpha_dataset(grid: &GridSpec, pair: &ModelPair, opts: &BuildOptions) -> Result<Dataset> {
    let kind = DatasetKind::Alpha;
    build(kind, DatasetRole::Train, grid, pair, grid_jobs(kind, DatasetRole::Train, grid), opts)
}

/// Uncorrected-fidelity examples; the grid must hold a single exponent.
pub fn build_amplitude_dataset(
    grid: &GridSpec,
    pair: &ModelPair,
    opts: &BuildOptions,
) -> Result<Dataset> {
    if grid.alpha_points.len() != 1 {
        return Err(Error::InvalidGrid(format!(
            "amplitude grid needs one exponent, got {}",
            grid.alpha_points.len()
        )));
    }
    let kind = DatasetKind::Amplitude;
    build(kind, DatasetRole::Train, grid, pair, grid_jobs(kind, DatasetRole::Train, grid), opts)
}

pub fn build_dataset(
    kind: DatasetKind,
    grid: &GridSpec,
    pair: &ModelPair,
    opts: &BuildOptions,
) -> Result<Dataset> {
    match kind {
        DatasetKind::Alpha => build_alpha_dataset(grid, pair, opts),
        DatasetKind::Amplitude => build_amplitude_dataset(grid, pair, opts),
    }
}

/// Grid whose labels sit strictly between the training labels.
///
/// The labelled axis is replaced by its midpoints; the other axis is also
/// moved to midpoints when it has more than one value.
pub fn holdout_grid(kind: DatasetKind, grid: &GridSpec) -> Result<GridSpec> {
    let shift = |pts: &[f64], labelled: bool| -> Result<Vec<f64>> {
        if pts.len() >= 2 {
            Ok(midpoints(pts))
        } else if labelled {
            Err(Error::InvalidGrid(
                "need at least two labelled grid values for midpoints".into(),
            ))
        } else {
            Ok(pts.to_vec())
        }
    };
    let mut out = grid.clone();
    out.alpha_points = shift(&grid.alpha_points, kind == DatasetKind::Alpha)?;
    out.log_amp_points = shift(&grid.log_amp_points, kind == DatasetKind::Amplitude)?;
    Ok(out)
}

/// `n` fresh examples at grid midpoints with seeds disjoint from training.
///
/// Cells are visited in a seeded random order, cycling with a new replica
/// index once every cell has been used.
pub fn split_holdout(
    kind: DatasetKind,
    grid: &GridSpec,
    pair: &ModelPair,
    n: usize,
    seed: u64,
    opts: &BuildOptions,
) -> Result<Dataset> {
    use rand::seq::SliceRandom;
    if n == 0 {
        return Err(Error::Config("holdout size must be at least 1".into()));
    }
    let mut hgrid = holdout_grid(kind, grid)?;
    hgrid.base_seed = seed;
    let n_cells = hgrid.n_cells();
    hgrid.replicas_per_cell = n.div_ceil(n_cells);
    let mut order: Vec<usize> = (0..n_cells).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, "holdout-order", &[kind.tag()])));
    let role = DatasetRole::Holdout;
    let jobs: Vec<Provenance> = (0..n)
        .map(|j| {
            let c = order[j % n_cells];
            let cell = [(c / hgrid.log_amp_points.len()) as u32, (c % hgrid.log_amp_points.len()) as u32];
            let replica = (j / n_cells) as u32;
            Provenance {
                cell,
                replica,
                seed: example_seed(seed, role, kind, cell, replica),
            }
        })
        .collect();
    build(kind, role, &hgrid, pair, jobs, opts)
}
