//! Abstract gate-error models.
//!
//! A gate consumes `duration_samples` consecutive noise samples per channel and
//! turns them into a rotation error `ε_c = coupling_c · Σ_k w_k ξ_c[k]`. The
//! uncorrected gate sees one sample with unit weight. The corrected gate is a
//! longer composite whose weights sum to zero, so any static noise cancels
//! exactly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Uncorrected,
    Corrected,
}

impl GateKind {
    pub fn tag(self) -> u64 {
        match self {
            GateKind::Uncorrected => 0,
            GateKind::Corrected => 1,
        }
    }
}

/// Error couplings for the σx (nuclear-like) and σz (charge-like) channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub x: f64,
    pub z: f64,
}

impl Coupling {
    pub fn equal(c: f64) -> Self {
        Self { x: c, z: c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateModel {
    pub kind: GateKind,
    pub duration_samples: usize,
    pub noise_weights: Vec<f64>,
    pub coupling: Coupling,
}

/// Corrected-gate weight pattern before normalization.
pub const CORRECTED_PATTERN: [f64; 5] = [1.0, -2.0, 2.0, -2.0, 1.0];

/// Uncorrected coupling used by the shipped calibration.
pub const DEFAULT_UNCORRECTED_COUPLING: f64 = 2.0;

/// Corrected coupling found by [`crate::rbsim::calibrate_models`] with default settings.
pub const DEFAULT_CORRECTED_COUPLING: f64 = 9.715682147151638;

impl GateModel {
    pub fn uncorrected(coupling: Coupling) -> Self {
        Self {
            kind: GateKind::Uncorrected,
            duration_samples: 1,
            noise_weights: vec![1.0],
            coupling,
        }
    }

    /// Composite gate with weights ∝ [1, −2, 2, −2, 1], normalized to Σ|w| = 1.
    pub fn corrected(coupling: Coupling) -> Self {
        let norm: f64 = CORRECTED_PATTERN.iter().map(|w| w.abs()).sum();
        Self {
            kind: GateKind::Corrected,
            duration_samples: CORRECTED_PATTERN.len(),
            noise_weights: CORRECTED_PATTERN.iter().map(|w| w / norm).collect(),
            coupling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("{:?} gate model: {msg}", self.kind)));
        if self.duration_samples == 0 || self.noise_weights.len() != self.duration_samples {
            return bad("weights must have one entry per consumed sample");
        }
        if !self.noise_weights.iter().all(|w| w.is_finite())
            || !self.coupling.x.is_finite()
            || !self.coupling.z.is_finite()
        {
            return bad("non-finite parameter");
        }
        let sum: f64 = self.noise_weights.iter().sum();
        match self.kind {
            GateKind::Uncorrected => {
                let w0 = self.noise_weights[0];
                if !(w0 > 0.0) || self.noise_weights.iter().any(|&w| w != w0) {
                    return bad("weights must be equal and positive");
                }
                if (sum - 1.0).abs() > 1e-12 {
                    return bad("weights must sum to 1");
                }
            }
            GateKind::Corrected => {
                if sum != 0.0 {
                    return bad("weights must sum to exactly 0");
                }
            }
        }
        Ok(())
    }

    /// Rotation angles `(ε_x, ε_z)` for one gate given its noise windows.
    pub fn error_angles(&self, window_x: &[f64], window_z: &[f64]) -> Result<(f64, f64)> {
        for w in [window_x, window_z] {
            if w.len() != self.duration_samples {
                return Err(Error::WindowLength {
                    expected: self.duration_samples,
                    got: w.len(),
                });
            }
        }
        let dot = |w: &[f64]| -> f64 { self.noise_weights.iter().zip(w).map(|(a, b)| a * b).sum() };
        Ok((self.coupling.x * dot(window_x), self.coupling.z * dot(window_z)))
    }
}

/// Summary of how a model pair was calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInfo {
    pub reference_amp: f64,
    pub target_crossover: f64,
    pub achieved_tail_kappa: f64,
    pub iterations: usize,
    pub n_runs: usize,
    pub n_gates: usize,
    pub seed: u64,
}

/// Uncorrected/corrected model pair as persisted by `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPair {
    pub uncorrected: GateModel,
    pub corrected: GateModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationInfo>,
}

impl Default for ModelPair {
    fn default() -> Self {
        Self::with_couplings(DEFAULT_UNCORRECTED_COUPLING, DEFAULT_CORRECTED_COUPLING)
    }
}

impl ModelPair {
    pub fn with_couplings(uncorrected: f64, corrected: f64) -> Self {
        Self {
            uncorrected: GateModel::uncorrected(Coupling::equal(uncorrected)),
            corrected: GateModel::corrected(Coupling::equal(corrected)),
            calibration: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.uncorrected.validate()?;
        self.corrected.validate()?;
        if self.uncorrected.kind != GateKind::Uncorrected || self.corrected.kind != GateKind::Corrected {
            return Err(Error::Config("model pair kinds swapped".into()));
        }
        if self.corrected.duration_samples <= self.uncorrected.duration_samples {
            return Err(Error::Config(
                "corrected gate must be longer than the uncorrected gate".into(),
            ));
        }
        Ok(())
    }

    pub fn longest_duration(&self) -> usize {
        self.uncorrected
            .duration_samples
            .max(self.corrected.duration_samples)
    }

    /// Content hash of the physical parameters (calibration notes excluded).
    pub fn id(&self) -> String {
        let body = serde_json::to_vec(&(&self.uncorrected, &self.corrected))
            .expect("model pair serializes");
        hex::encode(Sha256::digest(&body))[..16].to_string()
    }
}
