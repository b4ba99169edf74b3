use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::optim::AdamHyper;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr0: f64,
    pub lr_factor: f64,
    pub lr_period_epochs: usize,
    pub batch_size: usize,
    pub l2_lambda: f64,
    /// Applied to every dropout layer of the model being trained.
    pub dropout_rate: f64,
    pub validation_freq_iters: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1024,
            lr0: 1e-5,
            lr_factor: 0.75,
            lr_period_epochs: 256,
            batch_size: 32,
            l2_lambda: 0.1,
            dropout_rate: 0.5,
            validation_freq_iters: 128,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |detail: &str| Err(Error::invalid("train config", String::from(detail)));
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return fail("lr0 must be positive");
        }
        if !(self.lr_factor > 0.0 && self.lr_factor <= 1.0) {
            return fail("lr_factor must lie in (0, 1]");
        }
        if self.lr_period_epochs == 0 {
            return fail("lr_period_epochs must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return fail("l2_lambda must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail("dropout_rate must lie in [0, 1)");
        }
        if self.validation_freq_iters == 0 {
            return fail("validation_freq_iters must be positive");
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid("train config", format!("{name} must lie in [0, 1)")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return fail("adam_eps must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// `lr0 · lr_factor^⌊epoch / lr_period_epochs⌋` rounded to 15 significant
/// digits, so `1e-5 · 0.75` gives `7.5e-6`.
pub fn lr_at_epoch(config: &TrainConfig, epoch: usize) -> f64 {
    let steps = epoch / config.lr_period_epochs.max(1);
    let decay = (0..steps).fold(1.0, |acc, _| acc * config.lr_factor);
    round_significant(config.lr0 * decay, 15)
}

fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let k = digits - 1 - libm::floor(libm::log10(libm::fabs(x))) as i32;
    // Powers of ten up to 1e22 are exact, so the division rounds once.
    if !(0..=22).contains(&k) {
        return x;
    }
    let scale = (0..k).fold(1.0, |acc, _| acc * 10.0);
    libm::round(x * scale) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
        let bad = TrainConfig { lr_factor: 1.5, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { l2_lambda: -1.0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn schedule_is_piecewise_constant() {
        let c = TrainConfig::default();
        assert_eq!(lr_at_epoch(&c, 0), 1e-5);
        assert_eq!(lr_at_epoch(&c, 255), 1e-5);
        assert_eq!(lr_at_epoch(&c, 256), lr_at_epoch(&c, 511));
        assert!(lr_at_epoch(&c, 512) < lr_at_epoch(&c, 256));
        assert_eq!(lr_at_epoch(&c, 256), 7.5e-6);
        assert_eq!(lr_at_epoch(&c, 512), 5.625e-6);
    }
}
