//! Noise spectroscopy from randomized benchmarking.
//!
//! The crate simulates single-qubit randomized benchmarking (RB) under
//! power-law noise `S(ω) = A/(ω t0)^α` for an uncorrected gate and a
//! noise-cancelling composite gate, and trains small feed-forward networks to
//! invert the simulation: one network reads the corrected/uncorrected fidelity
//! ratio `κ` and returns `α`, a second reads the uncorrected fidelity decay and
//! returns `A`.

pub mod dataset;
pub mod error;
pub mod neuralnet;
pub mod noisegen;
pub mod pipeline;
pub mod rbsim;
pub mod seed;

pub use error::{Error, Result};
pub use noisegen::{NoiseSpectrum, NoiseTrace, PsdEstimate};
pub use rbsim::{GateKind, GateModel, ModelPair, RatioCurve, RbCurve, RbSetup};
