//! Loss, optimizer, metrics, the training loop, and cross-validation
//! aggregation.

mod adam;
mod loss;
mod metrics;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use loss::{compute_loss, l2_penalty, predict, softmax_cross_entropy};
pub use metrics::{aggregate_cv, compute_metrics, CvSummary, MeanStd, MetricsReport};
pub use trainer::{evaluate, train, EpochStats, Evaluation, TrainOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("shape: {0}")]
    Shape(String),
    #[error("training diverged: {context}")]
    Diverged { context: String },
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Optimizer hyperparameters. Defaults follow the reference protocol:
/// Adam at learning rate 0.0004 with betas (0.9, 0.999) and epsilon 1e-8,
/// batch size 30, 60 epochs, weight decay 0.01.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0004,
            batch_size: 30,
            epochs: 60,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0 {
            return Err(TrainError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be positive".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(TrainError::InvalidConfig("weight_decay must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(TrainError::InvalidConfig("betas must lie in (0, 1)".into()));
        }
        if self.adam_epsilon <= 0.0 {
            return Err(TrainError::InvalidConfig("adam_epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_protocol() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.learning_rate, 0.0004);
        assert_eq!(cfg.batch_size, 30);
        assert_eq!(cfg.epochs, 60);
        assert_eq!(cfg.weight_decay, 0.01);
        assert_eq!((cfg.beta1, cfg.beta2, cfg.adam_epsilon), (0.9, 0.999, 1e-8));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_hyperparameters() {
        let bad = TrainConfig {
            beta1: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
