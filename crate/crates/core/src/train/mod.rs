//! Splitting, optimization and the minibatch training loop.

mod config;
mod crossval;
mod fit;
mod optim;
mod split;

pub use config::{lr_at_epoch, TrainConfig};
pub use crossval::{run_cross_validation, run_fold, FoldResult};
pub use fit::{evaluate, train, train_observed, Checkpoint, Predictions, TrainHistory};
pub use optim::{adam_step, l2_term, AdamHyper, AdamState};
pub use split::{make_kfold, split_dataset, FoldPlan, SplitPlan, SPLIT_RATIOS};
