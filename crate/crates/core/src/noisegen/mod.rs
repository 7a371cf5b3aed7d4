//! Synthesis and spectral estimation of power-law (1/f^α) noise.
//!
//! Traces are built in the frequency domain: each positive-frequency bin gets
//! a fixed magnitude set by the target density and a uniformly random phase,
//! the spectrum is Hermitian-symmetrized with a zeroed DC bin, and an inverse
//! FFT yields a real time series. All quantities are in units of the
//! reference time `t0 = 1`.

mod psd;

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng as _;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use psd::{estimate_psd, fit_spectrum, PsdEstimate, SpectrumFit};

pub const MIN_TRACE_LEN: usize = 256;
pub const MAX_EXPONENT: f64 = 3.0;

/// Power spectral density `S(ω) = A / (ω t0)^α` with `t0 = 1`.
///
/// `amplitude` stores the dimensionless product `A·t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    pub amplitude: f64,
    pub exponent: f64,
}

impl NoiseSpectrum {
    pub fn new(amplitude: f64, exponent: f64) -> Result<Self> {
        let spec = Self {
            amplitude,
            exponent,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "amplitude must be positive and finite, got {}",
                self.amplitude
            )));
        }
        if !(0.0..=MAX_EXPONENT).contains(&self.exponent) {
            return Err(Error::InvalidSpectrum(format!(
                "exponent must lie in [0, {MAX_EXPONENT}], got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn density(&self, omega: f64) -> f64 {
        self.amplitude / omega.powf(self.exponent)
    }
}

/// A sampled real noise realization `ξ(t_j)`, `t_j = j·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrace {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub seed: u64,
}

impl NoiseTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,value")?;
        for (j, v) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", j as f64 * self.dt, v)?;
        }
        Ok(())
    }
}

/// Metadata written next to an exported trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub amplitude: f64,
    pub exponent: f64,
    pub t0: f64,
    pub n_samples: usize,
    pub dt: f64,
    pub seed: u64,
}

impl TraceMeta {
    pub fn new(spec: &NoiseSpectrum, trace: &NoiseTrace) -> Self {
        Self {
            amplitude: spec.amplitude,
            exponent: spec.exponent,
            t0: 1.0,
            n_samples: trace.len(),
            dt: trace.dt,
            seed: trace.seed,
        }
    }
}

pub(crate) fn check_length(n: usize) -> Result<()> {
    if n < MIN_TRACE_LEN || !n.is_power_of_two() {
        return Err(Error::InvalidLength {
            len: n,
            min: MIN_TRACE_LEN,
        });
    }
    Ok(())
}

/// Smallest admissible trace length holding at least `samples` points.
pub fn trace_len_for(samples: usize) -> usize {
    samples.next_power_of_two().max(MIN_TRACE_LEN)
}

/// Reusable synthesizer for a fixed `(spectrum, length, dt)`.
///
/// Bin magnitudes and the inverse FFT plan are computed once; each call to
/// [`NoiseSynth::trace`] only draws phases and transforms.
pub struct NoiseSynth {
    spec: NoiseSpectrum,
    dt: f64,
    magnitudes: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NoiseSynth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynth")
            .field("spec", &self.spec)
            .field("n", &self.magnitudes.len())
            .field("dt", &self.dt)
            .finish_non_exhaustive()
    }
}

impl NoiseSynth {
    pub fn new(spec: NoiseSpectrum, n_samples: usize, dt: f64) -> Result<Self> {
        spec.validate()?;
        check_length(n_samples)?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInterval(dt));
        }
        let n = n_samples;
        let domega = 2.0 * PI / (n as f64 * dt);
        // |X_k|^2 = n S(ω_k) / dt makes the periodogram (dt/n)|X_k|^2 equal S(ω_k).
        let magnitudes = (0..=n / 2)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    (n as f64 * spec.density(k as f64 * domega) / dt).sqrt()
                }
            })
            .collect();
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self {
            spec,
            dt,
            magnitudes,
            ifft,
        })
    }

    pub fn len(&self) -> usize {
        2 * (self.magnitudes.len() - 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spectrum(&self) -> &NoiseSpectrum {
        &self.spec
    }

    pub fn trace(&self, seed: u64) -> NoiseTrace {
        let n = self.len();
        let half = n / 2;
        let mut rng = seed::rng(seed);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for k in 1..half {
            let phase = rng.random::<f64>() * 2.0 * PI;
            let c = Complex64::from_polar(self.magnitudes[k], phase);
            buf[k] = c;
            buf[n - k] = c.conj();
        }
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        buf[half] = Complex64::new(sign * self.magnitudes[half], 0.0);
        self.ifft.process(&mut buf);
        let scale = 1.0 / n as f64;
        NoiseTrace {
            samples: buf.iter().map(|c| c.re * scale).collect(),
            dt: self.dt,
            seed,
        }
    }
}

/// Generate one noise trace realizing `spec`.
pub fn generate_trace(
    spec: &NoiseSpectrum,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<NoiseTrace> {
    Ok(NoiseSynth::new(*spec, n_samples, dt)?.trace(seed))
}
