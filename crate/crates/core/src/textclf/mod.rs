//! Linear text classifier: tf-idf features, softmax regression trained by
//! mini-batch gradient descent, and the evaluation metrics.

mod features;
mod metrics;
mod model;

pub use features::{FeatureSpace, FeatureVector, DEFAULT_MAX_TOKENS};
pub use metrics::{evaluate, majority_baseline, ClassMetrics, EvalReport};
pub use model::{
    fit_epochs, loss_and_grad, train, training_rng, Gradient, LinearModel, Prediction, TrainParams,
    NUM_CLASSES,
};
