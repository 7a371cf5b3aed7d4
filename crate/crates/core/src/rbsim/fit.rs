//! Nonlinear least-squares fit of `F(n) = (1 + e^{−γn})/2`.

use serde::{Deserialize, Serialize};

use super::sim::RbCurve;
use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub gamma: f64,
    /// RMS residual of the fit.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn model(gamma: f64, n: f64) -> f64 {
    0.5 * (1.0 + (-gamma * n).exp())
}

fn sse(f: &[f64], gamma: f64) -> f64 {
    f.iter()
        .enumerate()
        .map(|(i, &y)| (y - model(gamma, (i + 1) as f64)).powi(2))
        .sum()
}

pub fn fit_decay(curve: &RbCurve) -> Result<DecayFit> {
    fit_decay_values(&curve.fidelities)
}

/// Fit `γ ≥ 0` to fidelities indexed `n = 1..=len`.
///
/// A log-spaced scan picks the starting point, then damped Gauss-Newton
/// (Levenberg-Marquardt in one dimension) refines it.
pub fn fit_decay_values(f: &[f64]) -> Result<DecayFit> {
    if f.len() < MIN_FIT_POINTS {
        return Err(Error::CurveTooShort {
            len: f.len(),
            min: MIN_FIT_POINTS,
        });
    }
    let mut gamma = 0.0;
    let mut best = sse(f, 0.0);
    for k in 0..=240 {
        let g = 10f64.powf(-9.0 + k as f64 * 0.05);
        let s = sse(f, g);
        if s < best {
            best = s;
            gamma = g;
        }
    }

    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let (mut jtj, mut jtr) = (0.0, 0.0);
        for (i, &y) in f.iter().enumerate() {
            let n = (i + 1) as f64;
            let e = (-gamma * n).exp();
            let r = y - 0.5 * (1.0 + e);
            let j = -0.5 * n * e; // d model / d gamma
            jtj += j * j;
            jtr += j * r;
        }
        if jtj == 0.0 || jtr.abs() <= 1e-18 * jtj.sqrt().max(1.0) {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let step = jtr / (jtj * (1.0 + lambda));
            let trial = (gamma + step).max(0.0);
            let s = sse(f, trial);
            if s <= best {
                let moved = (trial - gamma).abs();
                gamma = trial;
                best = s;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if moved <= 1e-14 * gamma.max(1e-10) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left within machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    Ok(DecayFit {
        gamma,
        residual: (best / f.len() as f64).sqrt(),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(gamma: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|i| model(gamma, i as f64)).collect()
    }

    #[test]
    fn recovers_exact_gamma() {
        for g in [1e-4, 1e-3, 0.01, 0.05, 0.3] {
            let fit = fit_decay_values(&exact(g, 200)).unwrap();
            assert!(fit.converged);
            assert!((fit.gamma - g).abs() < 1e-6 * g.max(1e-3), "{g} -> {}", fit.gamma);
            assert!(fit.residual < 1e-9);
        }
    }

    #[test]
    fn flat_curve_gives_zero() {
        let fit = fit_decay_values(&[1.0; 200]).unwrap();
        assert_eq!(fit.gamma, 0.0);
        assert!(fit.converged);
        assert_eq!(fit.residual, 0.0);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            fit_decay_values(&[1.0; 9]),
            Err(Error::CurveTooShort { len: 9, .. })
        ));
    }

    #[test]
    fn noisy_curve_still_fits() {
        let mut f = exact(0.02, 200);
        for (i, v) in f.iter_mut().enumerate() {
            *v += 0.003 * ((i * 7919 % 13) as f64 / 6.0 - 1.0);
        }
        let fit = fit_decay_values(&f).unwrap();
        assert!((fit.gamma - 0.02).abs() < 1e-3);
    }
}
