//! Feed-forward sigmoid networks trained by backpropagation.

mod encoding;
mod metrics;
mod network;
mod train;

pub use encoding::{
    predict_alpha, predict_amplitude, InputTransform, TargetEncoding, TrainedNetwork, TrainingMeta,
    ALPHA_MAX, LOG_AMP_MAX, LOG_AMP_MIN,
};
pub use metrics::{mean_abs_error, mean_rel_error};
pub use network::{cost, init_network, sigmoid, sigmoid_prime, ForwardPass, Gradients, Layer, Network};
pub use train::{
    evaluate, train, Hyperparams, Provenance, TrainOptions, TrainReport, TrainingExample,
    DIVERGENCE_FACTOR,
};
