use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::{CliffordGate, CliffordGroup, Mat2, State, N_CLIFFORDS};
use super::model::{GateKind, GateModel, ModelPair};
use crate::error::{Error, Result};
use crate::noisegen::{trace_len_for, NoiseSpectrum, NoiseSynth};
use crate::seed;

/// Floor applied to uncorrected fidelities before dividing.
pub const FIDELITY_FLOOR: f64 = 1e-6;

pub const DEFAULT_GATES: usize = 200;
pub const DEFAULT_RUNS: usize = 200;

/// Sequence length and noise-trace length shared by every run of an experiment.
///
/// One noise sample spans one uncorrected gate slot (`dt = t0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbSetup {
    pub n_gates: usize,
    pub trace_len: usize,
}

impl RbSetup {
    /// Trace length is the next power of two covering the longer gate sequence of the pair.
    pub fn for_pair(n_gates: usize, pair: &ModelPair) -> Self {
        Self::for_duration(n_gates, pair.longest_duration())
    }

    pub fn for_duration(n_gates: usize, longest_duration: usize) -> Self {
        Self {
            n_gates,
            trace_len: trace_len_for(n_gates * longest_duration),
        }
    }

    fn check(&self, model: &GateModel) -> Result<()> {
        if self.n_gates == 0 {
            return Err(Error::Config("n_gates must be at least 1".into()));
        }
        let need = self.n_gates * model.duration_samples;
        if self.trace_len < need {
            return Err(Error::Config(format!(
                "trace length {} shorter than the {need} samples the sequence consumes",
                self.trace_len
            )));
        }
        Ok(())
    }
}

/// `exp(−i(ε_x σ_x + ε_z σ_z)/2)`.
pub fn error_unitary(eps_x: f64, eps_z: f64) -> Mat2 {
    let theta = eps_x.hypot(eps_z);
    if theta == 0.0 {
        return Mat2::IDENTITY;
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let (nx, nz) = (eps_x / theta, eps_z / theta);
    let i = Complex64::new(0.0, 1.0);
    Mat2([
        [Complex64::new(c, 0.0) - i * s * nz, -i * s * nx],
        [-i * s * nx, Complex64::new(c, 0.0) + i * s * nz],
    ])
}

/// Apply `E · U_gate` to `state`, with `E` built from the model's response to the noise windows.
pub fn apply_noisy_gate(
    state: &State,
    gate: &CliffordGate,
    model: &GateModel,
    window_x: &[f64],
    window_z: &[f64],
) -> Result<State> {
    let (ex, ez) = model.error_angles(window_x, window_z)?;
    Ok(error_unitary(ex, ez).apply(&gate.unitary.apply(state)))
}

fn overlap_sq(a: &State, b: &State) -> f64 {
    let inner = a[0].conj() * b[0] + a[1].conj() * b[1];
    inner.norm_sqr().min(1.0)
}

/// Simulator bound to one noise spectrum and setup; reuses its FFT plan across runs.
#[derive(Debug)]
pub struct RbSimulator {
    synth: NoiseSynth,
    setup: RbSetup,
}

impl RbSimulator {
    pub fn new(spec: &NoiseSpectrum, setup: RbSetup) -> Result<Self> {
        Ok(Self {
            synth: NoiseSynth::new(*spec, setup.trace_len, 1.0)?,
            setup,
        })
    }

    pub fn setup(&self) -> RbSetup {
        self.setup
    }

    pub fn spectrum(&self) -> &NoiseSpectrum {
        self.synth.spectrum()
    }

    /// Uniformly random Clifford indices for run seed `run_seed`.
    ///
    /// Depends only on the run seed, so both gate models see the same sequence.
    pub fn draw_sequence(&self, run_seed: u64) -> Vec<u8> {
        let mut rng = seed::rng(seed::derive(run_seed, "sequence", &[]));
        (0..self.setup.n_gates)
            .map(|_| rng.random_range(0..N_CLIFFORDS) as u8)
            .collect()
    }

    fn noise_seed(run_seed: u64, kind: GateKind, channel: u64) -> u64 {
        seed::derive(run_seed, "noise", &[kind.tag(), channel])
    }

    /// Fidelities `F^i`, `i = 1..=n_gates`, for one random sequence.
    pub fn run(&self, model: &GateModel, run_seed: u64) -> Result<Vec<f64>> {
        self.setup.check(model)?;
        let sequence = self.draw_sequence(run_seed);
        let xs = self.synth.trace(Self::noise_seed(run_seed, model.kind, 0));
        let zs = self.synth.trace(Self::noise_seed(run_seed, model.kind, 1));
        self.evolve(model, &sequence, &xs.samples, &zs.samples)
    }

    /// Evolve `|0⟩` through `sequence` with and without noise.
    pub fn evolve(
        &self,
        model: &GateModel,
        sequence: &[u8],
        noise_x: &[f64],
        noise_z: &[f64],
    ) -> Result<Vec<f64>> {
        let group = CliffordGroup::get();
        let d = model.duration_samples;
        let zero = Complex64::new(0.0, 0.0);
        let mut ideal: State = [Complex64::new(1.0, 0.0), zero];
        let mut noisy = ideal;
        let mut out = Vec::with_capacity(sequence.len());
        for (t, &g) in sequence.iter().enumerate() {
            let gate = group.gate(g as usize);
            let span = t * d..(t + 1) * d;
            ideal = gate.unitary.apply(&ideal);
            noisy = apply_noisy_gate(&noisy, gate, model, &noise_x[span.clone()], &noise_z[span])?;
            out.push(overlap_sq(&ideal, &noisy));
        }
        Ok(out)
    }

    pub fn average(&self, model: &GateModel, n_runs: usize, base_seed: u64) -> Result<RbCurve> {
        if n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        let runs: Vec<Vec<f64>> = (0..n_runs as u64)
            .into_par_iter()
            .map(|r| self.run(model, run_seed(base_seed, r)))
            .collect::<Result<_>>()?;
        let mut mean = vec![0.0; self.setup.n_gates];
        for run in &runs {
            for (m, f) in mean.iter_mut().zip(run) {
                *m += f;
            }
        }
        let inv = 1.0 / n_runs as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        Ok(RbCurve {
            fidelities: mean,
            n_runs_averaged: n_runs,
            spectrum: *self.spectrum(),
            model_kind: model.kind,
        })
    }
}

/// Seed of run `r` under `base_seed`.
pub fn run_seed(base_seed: u64, r: u64) -> u64 {
    seed::derive(base_seed, "run", &[r])
}

/// Averaged fidelity curve `F^i`, `i = 1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbCurve {
    pub fidelities: Vec<f64>,
    pub n_runs_averaged: usize,
    pub spectrum: NoiseSpectrum,
    pub model_kind: GateKind,
}

impl RbCurve {
    pub fn len(&self) -> usize {
        self.fidelities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fidelities.is_empty()
    }
}

/// `κ^i = F^i_corrected / F^i_uncorrected`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub ratios: Vec<f64>,
    pub spectrum: NoiseSpectrum,
}

impl RatioCurve {
    /// Mean of `κ^i` over the last quarter of the sequence (`i ∈ [150, 200]` for `N = 200`).
    pub fn tail_mean(&self) -> f64 {
        tail_mean(&self.ratios)
    }
}

pub(crate) fn tail_mean(v: &[f64]) -> f64 {
    let n = v.len();
    let start = (3 * n / 4).saturating_sub(1).min(n.saturating_sub(1));
    let tail = &v[start..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

pub fn ratio_curve(corrected: &RbCurve, uncorrected: &RbCurve) -> Result<RatioCurve> {
    if corrected.len() != uncorrected.len() || corrected.is_empty() {
        return Err(Error::MismatchedCurves(format!(
            "lengths {} and {}",
            corrected.len(),
            uncorrected.len()
        )));
    }
    if corrected.spectrum != uncorrected.spectrum {
        return Err(Error::MismatchedCurves("different noise spectra".into()));
    }
    let ratios = corrected
        .fidelities
        .iter()
        .zip(&uncorrected.fidelities)
        .map(|(c, u)| c.max(FIDELITY_FLOOR) / u.max(FIDELITY_FLOOR))
        .collect();
    Ok(RatioCurve {
        ratios,
        spectrum: corrected.spectrum,
    })
}

pub fn run_rb_sequence(
    spec: &NoiseSpectrum,
    model: &GateModel,
    setup: RbSetup,
    seed: u64,
) -> Result<Vec<f64>> {
    RbSimulator::new(spec, setup)?.run(model, seed)
}

/// Pointwise mean of `n_runs` independent runs; run `r` uses seed [`run_seed`]`(seed, r)`.
pub fn average_rb(
    spec: &NoiseSpectrum,
    model: &GateModel,
    setup: RbSetup,
    n_runs: usize,
    seed: u64,
) -> Result<RbCurve> {
    RbSimulator::new(spec, setup)?.average(model, n_runs, seed)
}

/// Uncorrected and corrected curves over the same gate sequences with independent noise.
pub fn average_rb_pair(
    spec: &NoiseSpectrum,
    pair: &ModelPair,
    setup: RbSetup,
    n_runs: usize,
    seed: u64,
) -> Result<(RbCurve, RbCurve)> {
    let sim = RbSimulator::new(spec, setup)?;
    Ok((
        sim.average(&pair.uncorrected, n_runs, seed)?,
        sim.average(&pair.corrected, n_runs, seed)?,
    ))
}
