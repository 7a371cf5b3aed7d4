//! Randomized benchmarking of single-qubit Clifford gates under sampled noise.

mod calibrate;
mod clifford;
mod fit;
mod model;
mod sim;

pub use calibrate::{calibrate_models, tail_kappa, CalibrationSettings};
pub use clifford::{clifford_table, CliffordGate, CliffordGroup, Mat2, State, N_CLIFFORDS};
pub use fit::{fit_decay, fit_decay_values, DecayFit, MIN_FIT_POINTS};
pub use model::{
    CalibrationInfo, Coupling, GateKind, GateModel, ModelPair, CORRECTED_PATTERN,
    DEFAULT_CORRECTED_COUPLING, DEFAULT_UNCORRECTED_COUPLING,
};
pub use sim::{
    apply_noisy_gate, average_rb, average_rb_pair, error_unitary, ratio_curve, run_rb_sequence,
    run_seed, RatioCurve, RbCurve, RbSetup, RbSimulator, DEFAULT_GATES, DEFAULT_RUNS,
    FIDELITY_FLOOR,
};
