use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rbspectro::dataset::{self, BuildOptions, DatasetKind, GridSpec};
use rbspectro::neuralnet::{self, Hyperparams, InputTransform, TrainOptions, TrainedNetwork};
use rbspectro::noisegen::{self, estimate_psd, fit_spectrum, NoiseSynth, TraceMeta};
use rbspectro::pipeline::{self, CurveSet, PipelineConfig};
use rbspectro::rbsim::{self, CalibrationSettings, ModelPair, RbSetup, RbSimulator};
use rbspectro::{seed, Error, NoiseSpectrum, Result};

#[derive(Parser, Debug)]
#[command(name = "rbspectro", version, about = "Noise spectroscopy from randomized benchmarking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a 1/f^α noise trace (CSV plus JSON sidecar), optionally with its PSD.
    GenNoise(GenNoise),
    /// Averaged RB curves for one spectrum.
    RunRb(RunRb),
    /// Calibrate the corrected-gate coupling and write the model pair.
    Calibrate(Calibrate),
    /// Build a training or held-out dataset.
    GenDataset(GenDataset),
    /// Train a network on a dataset.
    Train(Train),
    /// Predict α and A·t0 for a curve file.
    Predict(Predict),
    /// Compare 4×25 against the default 2×50 layout on identical data.
    DepthExperiment(PipelineArgs),
    /// Run the full workflow from a config file.
    RunPipeline(PipelineArgs),
    /// Convert a binary dataset to CSV.
    ExportCsv(ExportCsv),
    /// Write a preset pipeline config or grid.
    InitConfig(InitConfig),
}

#[derive(Args, Debug)]
pub struct GenNoise {
    #[arg(long)]
    alpha: f64,
    /// Amplitude A·t0.
    #[arg(long)]
    amp: f64,
    /// Number of samples (power of two, at least 256).
    #[arg(long, default_value_t = 16384)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the periodogram (averaged over `--psd-traces` traces).
    #[arg(long)]
    psd: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    psd_traces: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    Raw,
    Dcg,
    Both,
}

#[derive(Args, Debug)]
pub struct RunRb {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    amp: f64,
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    model: ModelChoice,
    #[arg(long, default_value_t = rbsim::DEFAULT_GATES)]
    gates: usize,
    #[arg(long, default_value_t = rbsim::DEFAULT_RUNS)]
    runs: usize,
    /// Model pair JSON; defaults to the built-in calibrated couplings.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Calibrate {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    ref_amp: Option<f64>,
    #[arg(long)]
    crossover: Option<f64>,
    #[arg(long)]
    uncorrected_coupling: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    gates: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindArg {
    Alpha,
    Amp,
}

impl From<KindArg> for DatasetKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Alpha => DatasetKind::Alpha,
            KindArg::Amp => DatasetKind::Amplitude,
        }
    }
}

#[derive(Args, Debug)]
pub struct GenDataset {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Grid JSON; `base_seed` is replaced by `--seed`.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Generate this many held-out examples at grid midpoints instead.
    #[arg(long)]
    holdout: Option<usize>,
    /// Checkpoint file for resumable generation.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Train {
    #[arg(long)]
    data: PathBuf,
    /// Held-out dataset for the error history (defaults to the training set).
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Epoch-vs-error CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Shuffle seed.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    bin: Option<usize>,
    #[arg(long)]
    neurons: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    /// `raw`, `log-decay` or `asinh-log-ratio[:scale]`; defaults per dataset kind.
    #[arg(long)]
    transform: Option<String>,
}

#[derive(Args, Debug)]
pub struct Predict {
    /// CSV with columns n and any of F_uncorrected, F_corrected, kappa.
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    alpha_net: Option<PathBuf>,
    #[arg(long)]
    amp_net: Option<PathBuf>,
    /// Result JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override a config field: `--set alpha_network.hyperparams.n_epochs=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ExportCsv {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Full,
    AlphaGrid,
    AmplitudeGrid,
}

#[derive(Args, Debug)]
pub struct InitConfig {
    #[arg(long, value_enum)]
    preset: Preset,
    #[arg(long)]
    out: PathBuf,
    /// Output directory recorded in pipeline presets.
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenNoise(a) => gen_noise(a),
        Command::RunRb(a) => run_rb(a),
        Command::Calibrate(a) => calibrate(a),
        Command::GenDataset(a) => gen_dataset(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::DepthExperiment(a) => {
            let report = pipeline::depth_experiment(&pipeline_config(&a)?)?;
            print_json(&report)
        }
        Command::RunPipeline(a) => {
            let outcome = pipeline::run_pipeline(&pipeline_config(&a)?)?;
            for stage in &outcome.executed {
                eprintln!("ran stage {stage}");
            }
            print_json(&outcome.summary)
        }
        Command::ExportCsv(a) => {
            let ds = dataset::load_dataset(&a.data)?;
            write_with(&a.out, |w| dataset::export_csv(&ds, w))
        }
        Command::InitConfig(a) => init_config(a),
    }
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let io = |e| Error::Io {
        path: path.into(),
        source: e,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    f(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_with(path, |w| writeln!(w, "{text}"))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct NoiseSidecar {
    #[serde(flatten)]
    meta: TraceMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<noisegen::SpectrumFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psd_traces: Option<usize>,
}

fn gen_noise(a: GenNoise) -> Result<()> {
    let spec = NoiseSpectrum::new(a.amp, a.alpha)?;
    let synth = NoiseSynth::new(spec, a.n, a.dt)?;
    let trace_seed = |k: u64| seed::derive(a.seed, "trace", &[k]);
    let trace = synth.trace(trace_seed(0));
    write_with(&a.out, |w| trace.write_csv(w))?;
    let mut side = NoiseSidecar {
        meta: TraceMeta::new(&spec, &trace),
        fit: None,
        psd_traces: None,
    };
    if let Some(psd_path) = &a.psd {
        if a.psd_traces == 0 {
            return Err(Error::Config("--psd-traces must be at least 1".into()));
        }
        let mut traces = vec![trace];
        traces.extend((1..a.psd_traces as u64).map(|k| synth.trace(trace_seed(k))));
        let psd = estimate_psd(&traces)?;
        let band = (psd.frequencies[0], *psd.frequencies.last().unwrap());
        side.fit = Some(fit_spectrum(&psd, band)?);
        side.psd_traces = Some(a.psd_traces);
        write_with(psd_path, |w| psd.write_csv(w))?;
    }
    write_json(&sidecar(&a.out), &side)
}

fn models_or_default(path: Option<&Path>) -> Result<ModelPair> {
    match path {
        Some(p) => pipeline::load_models(p),
        None => Ok(ModelPair::default()),
    }
}

#[derive(Serialize)]
struct RbSidecar {
    spectrum: NoiseSpectrum,
    n_gates: usize,
    n_runs: usize,
    seed: u64,
    model_pair_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_uncorrected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_kappa: Option<f64>,
}

fn run_rb(a: RunRb) -> Result<()> {
    let spec = NoiseSpectrum::new(a.amp, a.alpha)?;
    let pair = models_or_default(a.models.as_deref())?;
    let sim = RbSimulator::new(&spec, RbSetup::for_pair(a.gates, &pair))?;
    let mut curves = CurveSet {
        n: (1..=a.gates).collect(),
        ..Default::default()
    };
    let mut side = RbSidecar {
        spectrum: spec,
        n_gates: a.gates,
        n_runs: a.runs,
        seed: a.seed,
        model_pair_id: pair.id(),
        gamma_uncorrected: None,
        tail_kappa: None,
    };
    let unc = match a.model {
        ModelChoice::Raw | ModelChoice::Both => Some(sim.average(&pair.uncorrected, a.runs, a.seed)?),
        ModelChoice::Dcg => None,
    };
    let cor = match a.model {
        ModelChoice::Dcg | ModelChoice::Both => Some(sim.average(&pair.corrected, a.runs, a.seed)?),
        ModelChoice::Raw => None,
    };
    if let Some(u) = &unc {
        if u.len() >= rbsim::MIN_FIT_POINTS {
            side.gamma_uncorrected = Some(rbsim::fit_decay(u)?.gamma);
        }
        curves.f_uncorrected = Some(u.fidelities.clone());
    }
    if let Some(c) = &cor {
        curves.f_corrected = Some(c.fidelities.clone());
    }
    if let (Some(u), Some(c)) = (&unc, &cor) {
        let k = rbsim::ratio_curve(c, u)?;
        side.tail_kappa = Some(k.tail_mean());
        curves.kappa = Some(k.ratios);
    }
    write_with(&a.out, |w| pipeline::write_curve_csv(&curves, w))?;
    write_json(&sidecar(&a.out), &side)
}

fn calibrate(a: Calibrate) -> Result<()> {
    let d = CalibrationSettings::default();
    let settings = CalibrationSettings {
        reference_amp: a.ref_amp.unwrap_or(d.reference_amp),
        target_crossover: a.crossover.unwrap_or(d.target_crossover),
        uncorrected_coupling: a.uncorrected_coupling.unwrap_or(d.uncorrected_coupling),
        n_runs: a.runs.unwrap_or(d.n_runs),
        n_gates: a.gates.unwrap_or(d.n_gates),
        seed: a.seed,
        ..d
    };
    let pair = rbsim::calibrate_models(&settings)?;
    pipeline::save_models(&pair, &a.out)
}

fn read_grid(path: &Path) -> Result<GridSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn gen_dataset(a: GenDataset) -> Result<()> {
    let mut grid = read_grid(&a.grid)?;
    grid.base_seed = a.seed;
    let pair = pipeline::load_models(&a.models)?;
    let kind = DatasetKind::from(a.kind);
    let opts = BuildOptions {
        workers: a.workers,
        checkpoint: a.checkpoint,
    };
    let ds = match a.holdout {
        Some(n) => dataset::split_holdout(kind, &grid, &pair, n, a.seed, &opts)?,
        None => dataset::build_dataset(kind, &grid, &pair, &opts)?,
    };
    dataset::save_dataset(&ds, &a.out)?;
    let manifest = a.out.with_extension("manifest.json");
    dataset::write_manifest(&ds, &a.out, &manifest)?;
    Ok(())
}

fn parse_transform(s: &str) -> Result<InputTransform> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    match (name, arg) {
        ("raw", None) => Ok(InputTransform::Raw),
        ("log-decay", None) => Ok(InputTransform::LogDecay),
        ("asinh-log-ratio", scale) => {
            let scale = match scale {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("bad transform scale {v:?}")))?,
                None => 1e-5,
            };
            if !(scale > 0.0) {
                return Err(Error::Config("transform scale must be positive".into()));
            }
            Ok(InputTransform::AsinhLogRatio { scale })
        }
        _ => Err(Error::Config(format!("unknown input transform {s:?}"))),
    }
}

fn default_transform(kind: DatasetKind) -> InputTransform {
    match kind {
        DatasetKind::Alpha => InputTransform::AsinhLogRatio { scale: 1e-5 },
        DatasetKind::Amplitude => InputTransform::LogDecay,
    }
}

fn train(a: Train) -> Result<()> {
    let data = dataset::load_dataset(&a.data)?;
    let holdout = match &a.holdout {
        Some(p) => Some(dataset::load_dataset(p)?),
        None => None,
    };
    if let Some(h) = &holdout {
        if h.kind != data.kind {
            return Err(Error::Config("holdout and training sets are of different kinds".into()));
        }
    }
    let d = Hyperparams::default();
    let hp = Hyperparams {
        learning_rate: a.eta.unwrap_or(d.learning_rate),
        bin_size: a.bin.unwrap_or(d.bin_size),
        n_epochs: a.epochs.unwrap_or(d.n_epochs),
        n_neurons: a.neurons.unwrap_or(d.n_neurons),
        n_hidden_layers: a.layers.unwrap_or(d.n_hidden_layers),
    };
    hp.validate()?;
    let transform = match &a.transform {
        Some(s) => parse_transform(s)?,
        None => default_transform(data.kind),
    };
    let init_seed = a.init_seed.unwrap_or_else(|| seed::derive(a.seed, "init", &[]));
    let net = neuralnet::init_network(&hp.layout(data.input_len()), init_seed)?;
    let opts = TrainOptions {
        hp,
        encoding: data.kind.encoding(),
        input_transform: transform,
        seed: a.seed,
        init_seed,
        dataset_hash: dataset::dataset_hash(&data)?,
    };
    let held = holdout.as_ref().map(|h| h.examples.as_slice()).unwrap_or(&[]);
    let (trained, report) = neuralnet::train(net, &data.examples, held, &opts)?;
    trained.save(&a.out)?;
    if let Some(h) = &a.history {
        write_with(h, |w| report.write_csv(w))?;
    }
    eprintln!(
        "final {} = {:.4}, cost = {:.3e}",
        report.metric,
        report.final_error().unwrap_or(f64::NAN),
        report.final_cost
    );
    Ok(())
}

fn predict(a: Predict) -> Result<()> {
    let curves = pipeline::read_curve_csv(&a.curves)?;
    let load = |p: &Option<PathBuf>| p.as_deref().map(TrainedNetwork::load).transpose();
    let alpha_net = load(&a.alpha_net)?;
    let amp_net = load(&a.amp_net)?;
    let mut result = pipeline::predict(&curves, alpha_net.as_ref(), amp_net.as_ref())?;
    if let Ok(text) = std::fs::read_to_string(sidecar(&a.curves)) {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
            result.true_alpha = v["spectrum"]["exponent"].as_f64();
            result.true_amp = v["spectrum"]["amplitude"].as_f64();
        }
    }
    match &a.out {
        Some(p) => write_json(p, &result),
        None => print_json(&result),
    }
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut overrides = a.overrides.clone();
    if let Some(d) = &a.out_dir {
        overrides.push(format!("output_dir={}", serde_json::to_string(d)?));
    }
    if let Some(w) = a.workers {
        overrides.push(format!("workers={w}"));
    }
    PipelineConfig::load(&a.config, &overrides)
}

fn init_config(a: InitConfig) -> Result<()> {
    match a.preset {
        Preset::Desk => write_json(&a.out, &PipelineConfig::desk(a.output_dir)),
        Preset::Full => write_json(&a.out, &PipelineConfig::full(a.output_dir)),
        Preset::AlphaGrid => write_json(&a.out, &GridSpec::alpha_default(0)),
        Preset::AmplitudeGrid => write_json(&a.out, &GridSpec::amplitude_default(0)),
    }
}
