//! Bias-corrected Adam over the model's trainable tensors.

use super::{TrainConfig, TrainError};
use crate::model::{ModelGrads, ModelParams};
use crate::tensor::{Scalar, Tensor};

/// Per-parameter first and second moment estimates plus the step counter.
/// Moment tensors are shaped identically to their parameters and aligned with
/// the canonical trainable order.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    names: Vec<String>,
    first_moment: Vec<Tensor<T>>,
    second_moment: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let trainable = params.trainable();
        Self {
            names: trainable.iter().map(|(n, _)| n.clone()).collect(),
            first_moment: trainable
                .iter()
                .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
                .collect(),
            second_moment: trainable
                .iter()
                .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
                .collect(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update:
///
/// ```text
/// m <- b1 m + (1 - b1) g        mhat = m / (1 - b1^t)
/// v <- b2 v + (1 - b2) g^2      vhat = v / (1 - b2^t)
/// theta <- theta - lr * mhat / (sqrt(vhat) + eps)
/// ```
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelGrads<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    let grad_list = grads.trainable();
    let mut param_list = params.trainable_mut();
    if grad_list.len() != param_list.len() || grad_list.len() != state.names.len() {
        return Err(TrainError::Shape(format!(
            "parameter/gradient/state count mismatch: {} vs {} vs {}",
            param_list.len(),
            grad_list.len(),
            state.names.len()
        )));
    }

    state.step += 1;
    let t = state.step;
    let b1 = T::from_f64(cfg.beta1);
    let b2 = T::from_f64(cfg.beta2);
    let one = T::one();
    let lr = T::from_f64(cfg.learning_rate);
    let eps = T::from_f64(cfg.adam_epsilon);
    let bias1 = one - T::from_f64(cfg.beta1.powi(t as i32));
    let bias2 = one - T::from_f64(cfg.beta2.powi(t as i32));

    for (i, ((pname, param), (gname, grad))) in
        param_list.iter_mut().zip(grad_list.iter()).enumerate()
    {
        if pname != gname || param.shape() != grad.shape() {
            return Err(TrainError::Shape(format!(
                "parameter {pname} {:?} does not line up with gradient {gname} {:?}",
                param.shape(),
                grad.shape()
            )));
        }
        let m = state.first_moment[i].data_mut();
        let v = state.second_moment[i].data_mut();
        for ((p, &g), (m, v)) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
