//! Loss, optimizers, the three model variants and the training loop.

mod loss;
mod model;
mod optim;
mod trainer;

pub use loss::{argmax, softmax, softmax_xent};
pub use model::{Model, ModelConfig, ModelKind, DEFAULT_VQC_INIT_RANGE};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use trainer::{batch_loss_grad, evaluate, train, write_metrics_csv, EpochMetrics, TrainConfig, METRICS_HEADER};
