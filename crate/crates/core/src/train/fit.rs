use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{lr_at_epoch, TrainConfig};
use super::optim::{adam_step, l2_term, AdamState};
use super::split::SplitPlan;
use crate::dataset::SampleSource;
use crate::error::{Error, Result};
use crate::kernels;
use crate::metrics::{confusion_matrix, ConfusionMatrix};
use crate::model::{Model, RunMode};
use crate::rng::derive_seed;
use crate::tensor::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub epoch: usize,
    pub lr: f64,
    /// Mean objective (cross-entropy plus penalty) over the iterations since
    /// the previous checkpoint.
    pub train_loss: f64,
    /// Mean evaluation-mode cross-entropy; `None` without a validation split.
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub checkpoints: Vec<Checkpoint>,
    /// Total number of optimizer updates.
    pub iterations: usize,
    /// Objective of every iteration, in order.
    pub iteration_losses: Vec<f64>,
}

/// Evaluation-mode outputs for a list of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub ids: Vec<usize>,
    pub labels: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
    pub mean_loss: f64,
}

impl Predictions {
    pub fn predicted(&self) -> Vec<usize> {
        self.probs.iter().map(|p| argmax(p)).collect()
    }

    pub fn confusion(&self) -> Result<ConfusionMatrix> {
        confusion_matrix(&self.predicted(), &self.labels)
    }

    pub fn accuracy(&self) -> f64 {
        let hits = self.predicted().iter().zip(&self.labels).filter(|(p, l)| p == l).count();
        hits as f64 / self.labels.len().max(1) as f64
    }

    /// Probability of `class` for every sample.
    pub fn scores(&self, class: usize) -> Vec<f64> {
        self.probs.iter().map(|p| p[class]).collect()
    }
}

fn checked_label<S: SampleSource + ?Sized>(model: &Model, data: &S, id: usize) -> Result<usize> {
    let label = data.label(id);
    if label >= model.class_count() {
        return Err(Error::invalid("sample label", format!("sample {id} has no valid class")));
    }
    Ok(label)
}

/// Evaluation-mode probabilities and loss for `ids`.
pub fn evaluate<S: SampleSource + ?Sized>(model: &Model, data: &S, ids: &[usize]) -> Result<Predictions> {
    let mut labels = Vec::with_capacity(ids.len());
    let mut probs = Vec::with_capacity(ids.len());
    let mut loss = 0.0;
    for &id in ids {
        let label = checked_label(model, data, id)?;
        let logits = model.logits(&data.input(id)?)?;
        let xent = kernels::softmax_xent(&logits, label)?;
        loss += xent.loss;
        labels.push(label);
        probs.push(xent.probs.into_data());
    }
    Ok(Predictions {
        ids: ids.to_vec(),
        labels,
        probs,
        mean_loss: if ids.is_empty() { 0.0 } else { loss / ids.len() as f64 },
    })
}

/// Minibatch Adam on `plan.train`, reshuffled every epoch, with a validation
/// checkpoint every `validation_freq_iters` updates. Returns the final model.
pub fn train<S: SampleSource + ?Sized>(
    model: Model,
    data: &S,
    plan: &SplitPlan,
    config: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    train_observed(model, data, plan, config, &mut |_| {})
}

/// [`train`], calling `observe` after each checkpoint.
pub fn train_observed<S: SampleSource + ?Sized>(
    mut model: Model,
    data: &S,
    plan: &SplitPlan,
    config: &TrainConfig,
    observe: &mut dyn FnMut(&Checkpoint),
) -> Result<(Model, TrainHistory)> {
    config.validate()?;
    if plan.train.is_empty() {
        return Err(Error::invalid("training split", "is empty"));
    }
    if let Some(&bad) = plan.train.iter().chain(&plan.validation).find(|&&i| i >= data.len()) {
        return Err(Error::invalid("split plan", format!("id {bad} outside a dataset of {}", data.len())));
    }
    let mut history = TrainHistory::default();
    if config.epochs == 0 {
        return Ok((model, history));
    }
    model.set_dropout_rate(config.dropout_rate)?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "shuffle"));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "dropout"));
    let mut state = AdamState::new(model.params());
    let mut order = plan.train.clone();
    let mut window = (0.0, 0usize);

    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(config, epoch);
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.params().zeros_like();
            let mut data_loss = 0.0;
            let share = 1.0 / batch.len() as f64;
            for &id in batch {
                let label = checked_label(&model, data, id)?;
                let seed = dropout_rng.next_u64();
                let pass = model.forward(&data.input(id)?, RunMode::Train { seed })?;
                let xent = kernels::softmax_xent(&pass.logits, label)?;
                data_loss += xent.loss * share;
                let mut g = xent.grad_logits;
                g.scale(share);
                model.backward_into(&pass.cache, &g, &mut grads, false)?;
            }
            let (penalty, l2_grad) = l2_term(model.params(), config.l2_lambda);
            let loss = data_loss + penalty;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    iteration: history.iterations + 1,
                });
            }
            grads.add_scaled(&l2_grad, 1.0)?;
            adam_step(model.params_mut(), &grads, &mut state, lr, config.adam())?;

            history.iterations += 1;
            history.iteration_losses.push(loss);
            window.0 += loss;
            window.1 += 1;
            if history.iterations % config.validation_freq_iters == 0 {
                let (val_loss, val_accuracy) = if plan.validation.is_empty() {
                    (None, None)
                } else {
                    let p = evaluate(&model, data, &plan.validation)?;
                    (Some(p.mean_loss), Some(p.accuracy()))
                };
                let checkpoint = Checkpoint {
                    iteration: history.iterations,
                    epoch,
                    lr,
                    train_loss: window.0 / window.1 as f64,
                    val_loss,
                    val_accuracy,
                };
                observe(&checkpoint);
                history.checkpoints.push(checkpoint);
                window = (0.0, 0);
            }
        }
    }
    Ok((model, history))
}
