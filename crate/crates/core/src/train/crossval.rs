use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::fit::{evaluate, train, Predictions, TrainHistory};
use super::split::{FoldPlan, SplitPlan};
use crate::dataset::SampleSource;
use crate::error::Result;
use crate::metrics::{classwise_metrics, ClasswiseMetrics, ConfusionMatrix};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub history: TrainHistory,
    pub predictions: Predictions,
    pub confusion: ConfusionMatrix,
    pub metrics: ClasswiseMetrics,
}

/// Trains on every fold but `fold` and evaluates on `fold`. The run uses seed
/// `config.seed + fold`, which is also handed to `make_model`.
pub fn run_fold<S, F>(fold: usize, make_model: &F, data: &S, plan: &FoldPlan, config: &TrainConfig) -> Result<FoldResult>
where
    S: SampleSource + ?Sized,
    F: Fn(u64) -> Result<Model> + ?Sized,
{
    let seed = config.seed.wrapping_add(fold as u64);
    let fold_config = TrainConfig { seed, ..config.clone() };
    let split = SplitPlan {
        train: plan.train_ids(fold),
        validation: Vec::new(),
        test: plan.eval_ids(fold).to_vec(),
    };
    let (model, history) = train(make_model(seed)?, data, &split, &fold_config)?;
    let predictions = evaluate(&model, data, &split.test)?;
    let confusion = predictions.confusion()?;
    Ok(FoldResult {
        fold,
        seed,
        history,
        metrics: classwise_metrics(&confusion),
        confusion,
        predictions,
    })
}

/// Every fold of `plan`, in order.
pub fn run_cross_validation<S, F>(make_model: &F, data: &S, plan: &FoldPlan, config: &TrainConfig) -> Result<Vec<FoldResult>>
where
    S: SampleSource + ?Sized,
    F: Fn(u64) -> Result<Model> + ?Sized,
{
    (0..plan.k()).map(|f| run_fold(f, make_model, data, plan, config)).collect()
}
