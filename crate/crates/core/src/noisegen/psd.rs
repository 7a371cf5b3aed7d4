use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::NoiseTrace;
use crate::error::{Error, Result};

/// Averaged periodogram on the positive-frequency grid `ω_k = 2πk/(n dt)`, `k = 1..=n/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub n_traces_averaged: usize,
}

impl PsdEstimate {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "omega,power")?;
        for (w, p) in self.frequencies.iter().zip(&self.power) {
            writeln!(out, "{w},{p}")?;
        }
        Ok(())
    }
}

/// Plain (unwindowed) periodogram `(dt/n)|X_k|²`, averaged over traces.
pub fn estimate_psd(traces: &[NoiseTrace]) -> Result<PsdEstimate> {
    let first = traces.first().ok_or(Error::MismatchedTraces)?;
    let n = first.len();
    let dt = first.dt;
    if n < 2 || traces.iter().any(|t| t.len() != n || t.dt != dt) {
        return Err(Error::MismatchedTraces);
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let half = n / 2;
    let mut power = vec![0.0; half];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in traces {
        for (b, &x) in buf.iter_mut().zip(&t.samples) {
            *b = Complex64::new(x, 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            *p += buf[k + 1].norm_sqr();
        }
    }
    let scale = dt / (n as f64 * traces.len() as f64);
    power.iter_mut().for_each(|p| *p *= scale);
    let domega = 2.0 * PI / (n as f64 * dt);
    Ok(PsdEstimate {
        frequencies: (1..=half).map(|k| k as f64 * domega).collect(),
        power,
        n_traces_averaged: traces.len(),
    })
}

/// Power-law fit of a spectrum, `S(ω) = amplitude / ω^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// RMS misfit in natural-log space.
    pub residual: f64,
}

pub const MIN_FIT_BINS: usize = 10;

/// Least-squares line through `(ln ω, ln S)` for bins with `lo <= ω <= hi`.
///
/// Bins with zero power are skipped since they have no logarithm.
pub fn fit_spectrum(psd: &PsdEstimate, band: (f64, f64)) -> Result<SpectrumFit> {
    let (lo, hi) = band;
    let pts: Vec<(f64, f64)> = psd
        .frequencies
        .iter()
        .zip(&psd.power)
        .filter(|(&w, &p)| w >= lo && w <= hi && p > 0.0)
        .map(|(&w, &p)| (w.ln(), p.ln()))
        .collect();
    if pts.len() < MIN_FIT_BINS {
        return Err(Error::InsufficientBins {
            need: MIN_FIT_BINS,
            found: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(SpectrumFit {
        amplitude: intercept.exp(),
        // -0.0 for flat spectra reads oddly in reports
        exponent: -slope + 0.0,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(amp: f64, alpha: f64, n: usize) -> PsdEstimate {
        let frequencies: Vec<f64> = (1..=n).map(|k| k as f64 * 0.01).collect();
        let power = frequencies.iter().map(|w| amp / w.powf(alpha)).collect();
        PsdEstimate {
            frequencies,
            power,
            n_traces_averaged: 1,
        }
    }

    #[test]
    fn fits_exact_power_law() {
        let fit = fit_spectrum(&exact(1e-3, 1.0, 300), (0.0, f64::INFINITY)).unwrap();
        assert!((fit.amplitude - 1e-3).abs() < 1e-15);
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fits_flat_spectrum() {
        let fit = fit_spectrum(&exact(1e-4, 0.0, 50), (0.0, f64::INFINITY)).unwrap();
        assert!((fit.amplitude - 1e-4).abs() < 1e-16);
        assert!(fit.exponent.abs() < 1e-12);
    }

    #[test]
    fn too_few_bins() {
        let psd = exact(1e-3, 1.0, 300);
        assert!(matches!(
            fit_spectrum(&psd, (0.0, 0.095)),
            Err(Error::InsufficientBins { found: 9, .. })
        ));
    }

    #[test]
    fn zero_trace_has_zero_power() {
        let t = NoiseTrace {
            samples: vec![0.0; 256],
            dt: 1.0,
            seed: 0,
        };
        let psd = estimate_psd(&[t]).unwrap();
        assert_eq!(psd.power.len(), 128);
        assert!(psd.power.iter().all(|&p| p == 0.0));
        assert!(psd.frequencies.windows(2).all(|w| w[1] > w[0]));
        assert!(psd.frequencies[0] > 0.0);
    }

    #[test]
    fn sinusoid_concentrates_in_one_bin() {
        let n = 512;
        let k0 = 17;
        let samples = (0..n)
            .map(|j| (2.0 * PI * k0 as f64 * j as f64 / n as f64).cos())
            .collect();
        let psd = estimate_psd(&[NoiseTrace {
            samples,
            dt: 0.5,
            seed: 0,
        }])
        .unwrap();
        let peak = psd.power[k0 - 1];
        assert!((psd.frequencies[k0 - 1] - 2.0 * PI * k0 as f64 / (n as f64 * 0.5)).abs() < 1e-12);
        for (k, &p) in psd.power.iter().enumerate() {
            if k != k0 - 1 {
                assert!(p <= 1e-10 * peak, "bin {k}: {p}");
            }
        }
    }

    #[test]
    fn mismatched_traces_rejected() {
        let a = NoiseTrace {
            samples: vec![0.0; 256],
            dt: 1.0,
            seed: 0,
        };
        let mut b = a.clone();
        b.dt = 2.0;
        assert!(matches!(
            estimate_psd(&[a.clone(), b]),
            Err(Error::MismatchedTraces)
        ));
        let mut c = a.clone();
        c.samples.push(0.0);
        assert!(estimate_psd(&[a, c]).is_err());
        assert!(estimate_psd(&[]).is_err());
    }
}
