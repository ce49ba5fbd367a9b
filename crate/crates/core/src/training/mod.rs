//! Hand-differentiated MLP autoencoder, optimizers and the training loop.

mod config;
mod mlp;
mod optim;
mod trainer;

pub use config::{BasisInit, QuantizerKind, TrainConfig};
pub use mlp::{mlp_forward, Dense, DenseGrads, Mlp, MlpCache, MlpGrads, MlpParams};
pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use trainer::{
    evaluate, loss_and_grads, run_training, train_step, Evaluation, LossTerms, Model, ModelGrads,
    QuantizerState, StepOutput, Trainer,
};
