use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if input.shape() != grad_out.shape() {
        return Err(Error::shape(
            "relu backward",
            format!("{:?} vs {:?}", input.shape(), grad_out.shape()),
        ));
    }
    let mut grad = grad_out.clone();
    for (g, &x) in grad.data_mut().iter_mut().zip(input.data()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(grad)
}

/// Per-element multipliers applied by a dropout forward pass: `0` for dropped
/// elements, `1/(1−rate)` for survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask(pub Vec<f64>);

impl DropoutMask {
    pub fn ones(len: usize) -> Self {
        DropoutMask(vec![1.0; len])
    }
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid("dropout rate", format!("{rate} is outside [0, 1)")));
    }
    Ok(())
}

/// Inverted dropout. Evaluation mode is the identity.
pub fn dropout<R: RngCore + ?Sized>(
    input: &Tensor,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor, DropoutMask)> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((input.clone(), DropoutMask::ones(input.len())));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let mut out = input.clone();
    for (v, m) in out.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((out, DropoutMask(mask)))
}

pub fn dropout_backward(mask: &DropoutMask, grad_out: &Tensor) -> Result<Tensor> {
    if mask.0.len() != grad_out.len() {
        return Err(Error::shape(
            "dropout backward",
            format!("mask of {} for gradient of {}", mask.0.len(), grad_out.len()),
        ));
    }
    let mut grad = grad_out.clone();
    for (g, m) in grad.data_mut().iter_mut().zip(&mask.0) {
        *g *= m;
    }
    Ok(grad)
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxXent {
    pub probs: Tensor,
    pub loss: f64,
    pub grad_logits: Tensor,
}

/// Softmax followed by cross-entropy against `true_class`.
///
/// The loss is computed in log-sum-exp form so that saturated logits still
/// give a finite value.
pub fn softmax_xent(logits: &Tensor, true_class: usize) -> Result<SoftmaxXent> {
    if logits.rank() != 1 {
        return Err(Error::shape(
            "softmax_xent",
            format!("logits must be a vector, got {:?}", logits.shape()),
        ));
    }
    if true_class >= logits.len() {
        return Err(Error::invalid(
            "class id",
            format!("{true_class} with {} classes", logits.len()),
        ));
    }
    logits.ensure_finite("logits")?;
    let z = logits.data();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = libm::log(z.iter().map(|&v| libm::exp(v - max)).sum::<f64>());
    let probs = softmax(z);
    let loss = log_total - (z[true_class] - max);
    let mut grad = probs.clone();
    grad[true_class] -= 1.0;
    Ok(SoftmaxXent {
        probs: Tensor::vector(probs),
        loss,
        grad_logits: Tensor::vector(grad),
    })
}
