//! Batch normalization over the feature (last) axis. Training mode pools the
//! statistics over all non-feature axes jointly — samples and time steps —
//! and refreshes the running estimates; inference mode reads the running
//! estimates.

use super::{LayerError, Mode};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormParams<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub epsilon: T,
    pub momentum: T,
}

impl<T: Scalar> BatchNormParams<T> {
    pub fn new(n_features: usize, epsilon: f64, momentum: f64) -> Self {
        Self {
            gamma: Tensor::ones(vec![n_features]),
            beta: Tensor::zeros(vec![n_features]),
            running_mean: Tensor::zeros(vec![n_features]),
            running_var: Tensor::ones(vec![n_features]),
            epsilon: T::from_f64(epsilon),
            momentum: T::from_f64(momentum),
        }
    }

    pub fn n_features(&self) -> usize {
        self.gamma.len()
    }
}

#[derive(Clone, Debug)]
pub struct BatchNormCache<T> {
    normalized: Tensor<T>,
    inv_std: Vec<T>,
    rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormGrads<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

/// Normalizes the last axis of `x`. In `Train` mode the batch statistics are
/// used and the running estimates updated in place; the returned cache feeds
/// the backward pass. `Infer` mode uses the running estimates and returns no
/// cache.
pub fn batchnorm_apply<T: Scalar>(
    x: &Tensor<T>,
    p: &mut BatchNormParams<T>,
    mode: Mode,
) -> Result<(Tensor<T>, Option<BatchNormCache<T>>), LayerError> {
    let n_feat = p.n_features();
    let last = *x.shape().last().expect("non-empty shape");
    if last != n_feat {
        return Err(LayerError::FeatureMismatch {
            input: last,
            expected: n_feat,
        });
    }
    let rows = x.len() / n_feat;

    match mode {
        Mode::Train => {
            let mut mean = vec![T::zero(); n_feat];
            for row in x.data().chunks_exact(n_feat) {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m = *m + v;
                }
            }
            let inv_n = T::one() / T::from_f64(rows as f64);
            for m in &mut mean {
                *m = *m * inv_n;
            }
            let mut var = vec![T::zero(); n_feat];
            for row in x.data().chunks_exact(n_feat) {
                for ((v, &xv), &m) in var.iter_mut().zip(row).zip(&mean) {
                    let d = xv - m;
                    *v = *v + d * d;
                }
            }
            for v in &mut var {
                *v = *v * inv_n;
            }

            let inv_std: Vec<T> = var
                .iter()
                .map(|&v| T::one() / (v + p.epsilon).sqrt())
                .collect();
            let mut normalized = x.clone();
            for row in normalized.data_mut().chunks_exact_mut(n_feat) {
                for ((v, &m), &is) in row.iter_mut().zip(&mean).zip(&inv_std) {
                    *v = (*v - m) * is;
                }
            }
            let y = scale_shift(&normalized, p);

            let keep = p.momentum;
            let blend = T::one() - keep;
            for ((rm, &m), (rv, &v)) in p
                .running_mean
                .data_mut()
                .iter_mut()
                .zip(&mean)
                .zip(p.running_var.data_mut().iter_mut().zip(&var))
            {
                *rm = keep * *rm + blend * m;
                *rv = keep * *rv + blend * v;
            }

            Ok((
                y,
                Some(BatchNormCache {
                    normalized,
                    inv_std,
                    rows,
                }),
            ))
        }
        Mode::Infer => {
            let mut normalized = x.clone();
            let mean = p.running_mean.data();
            let inv_std: Vec<T> = p
                .running_var
                .data()
                .iter()
                .map(|&v| T::one() / (v + p.epsilon).sqrt())
                .collect();
            for row in normalized.data_mut().chunks_exact_mut(n_feat) {
                for ((v, &m), &is) in row.iter_mut().zip(mean).zip(&inv_std) {
                    *v = (*v - m) * is;
                }
            }
            Ok((scale_shift(&normalized, p), None))
        }
    }
}

fn scale_shift<T: Scalar>(normalized: &Tensor<T>, p: &BatchNormParams<T>) -> Tensor<T> {
    let n_feat = p.n_features();
    let mut y = normalized.clone();
    for row in y.data_mut().chunks_exact_mut(n_feat) {
        for ((v, &g), &b) in row.iter_mut().zip(p.gamma.data()).zip(p.beta.data()) {
            *v = *v * g + b;
        }
    }
    y
}

/// Train-mode backward pass; differentiates through the batch mean and
/// variance as well as the scale and shift.
pub fn batchnorm_backward<T: Scalar>(
    cache: &BatchNormCache<T>,
    p: &BatchNormParams<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, BatchNormGrads<T>), LayerError> {
    let n_feat = p.n_features();
    if upstream.shape() != cache.normalized.shape() {
        return Err(LayerError::GradShapeMismatch {
            cached: cache.normalized.shape().to_vec(),
            upstream: upstream.shape().to_vec(),
        });
    }

    let mut d_gamma = vec![T::zero(); n_feat];
    let mut d_beta = vec![T::zero(); n_feat];
    // Per-feature sums of dxhat and dxhat * xhat, where dxhat = dy * gamma.
    let mut sum_dxhat = vec![T::zero(); n_feat];
    let mut sum_dxhat_xhat = vec![T::zero(); n_feat];
    for (dy_row, x_row) in upstream
        .data()
        .chunks_exact(n_feat)
        .zip(cache.normalized.data().chunks_exact(n_feat))
    {
        for f in 0..n_feat {
            let dy = dy_row[f];
            let xhat = x_row[f];
            d_beta[f] = d_beta[f] + dy;
            d_gamma[f] = d_gamma[f] + dy * xhat;
            let dxhat = dy * p.gamma.data()[f];
            sum_dxhat[f] = sum_dxhat[f] + dxhat;
            sum_dxhat_xhat[f] = sum_dxhat_xhat[f] + dxhat * xhat;
        }
    }

    let inv_n = T::one() / T::from_f64(cache.rows as f64);
    let mut d_input = upstream.clone();
    for (dx_row, x_row) in d_input
        .data_mut()
        .chunks_exact_mut(n_feat)
        .zip(cache.normalized.data().chunks_exact(n_feat))
    {
        for f in 0..n_feat {
            let dxhat = dx_row[f] * p.gamma.data()[f];
            dx_row[f] = cache.inv_std[f]
                * (dxhat - inv_n * sum_dxhat[f] - x_row[f] * inv_n * sum_dxhat_xhat[f]);
        }
    }

    Ok((
        d_input,
        BatchNormGrads {
            gamma: Tensor::new(vec![n_feat], d_gamma)?,
            beta: Tensor::new(vec![n_feat], d_beta)?,
        },
    ))
}
