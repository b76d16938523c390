//! Loss composition: mean softmax cross-entropy over the batch plus an L2
//! penalty of `wd * sum(|theta|^2 / 2)` over every trainable tensor.

use super::TrainError;
use crate::model::ModelParams;
use crate::tensor::{Scalar, Tensor};

/// Mean softmax cross-entropy and its analytic gradient with respect to the
/// logits: `(softmax - onehot) / n`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, Tensor<T>), TrainError> {
    let (n, classes) = logits.dims2().map_err(|e| TrainError::Shape(e.to_string()))?;
    if n != labels.len() {
        return Err(TrainError::Shape(format!(
            "{n} logit rows but {} labels",
            labels.len()
        )));
    }
    if !logits.all_finite() {
        return Err(TrainError::Diverged {
            context: "non-finite logits".into(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(TrainError::Shape(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }

    let probs = logits.softmax_rows();
    let inv_n = T::one() / T::from_f64(n as f64);
    let mut loss = T::zero();
    let mut grads = probs.clone();
    for (i, &label) in labels.iter().enumerate() {
        loss = loss - probs.at2(i, label).ln();
        let row = &mut grads.data_mut()[i * classes..(i + 1) * classes];
        row[label] = row[label] - T::one();
        for g in row.iter_mut() {
            *g = *g * inv_n;
        }
    }
    loss = loss * inv_n;
    Ok((loss, grads))
}

/// `wd * sum(|theta|^2 / 2)` over all trainable tensors.
pub fn l2_penalty<T: Scalar>(params: &ModelParams<T>, weight_decay: f64) -> T {
    let half = T::from_f64(0.5);
    let wd = T::from_f64(weight_decay);
    let mut total = T::zero();
    for (_, tensor) in params.trainable() {
        let mut sq = T::zero();
        for &v in tensor.data() {
            sq = sq + v * v;
        }
        total = total + half * sq;
    }
    wd * total
}

/// Total training loss (cross-entropy plus weight decay) and the gradient
/// with respect to the logits. The matching parameter-space gradient of the
/// L2 term is added by `ModelGrads::add_l2_term`.
pub fn compute_loss<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
    params: &ModelParams<T>,
    weight_decay: f64,
) -> Result<(T, Tensor<T>), TrainError> {
    let (data_loss, grads) = softmax_cross_entropy(logits, labels)?;
    Ok((data_loss + l2_penalty(params, weight_decay), grads))
}

/// Class predictions: argmax over each logit row.
pub fn predict<T: Scalar>(logits: &Tensor<T>) -> Vec<usize> {
    let (n, classes) = logits.dims2().expect("rank-2 logits");
    (0..n)
        .map(|i| {
            let mut best = 0;
            for c in 1..classes {
                if logits.at2(i, c) > logits.at2(i, best) {
                    best = c;
                }
            }
            best
        })
        .collect()
}
