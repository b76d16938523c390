//! Channel attention: a trained affine map plus row softmax produces
//! per-channel weights at every time step, the weights are averaged over time
//! to one stochastic vector per sample, and the input is rescaled by it.

use super::{add_bias_rows, column_sums, LayerError};
use crate::tensor::{Scalar, Tensor};

/// Trainable attention parameters: a square kernel over channels and one bias
/// per channel, broadcast across rows so the parameter count does not depend
/// on the batch size.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams<T> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> AttentionParams<T> {
    pub fn n_channels(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn validate(&self) -> Result<(), LayerError> {
        let (a, b) = self.kernel.dims2()?;
        if a != b {
            return Err(LayerError::ChannelMismatch { input: a, kernel: b });
        }
        if self.bias.shape() != [a] {
            return Err(LayerError::FeatureMismatch {
                input: self.bias.len(),
                expected: a,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AttentionCache<T> {
    input: Tensor<T>,
    /// Row-stochastic softmax output, one row per (sample, time step).
    softmax: Tensor<T>,
    /// Per-sample channel weights (softmax rows averaged over time).
    weights: Tensor<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionGrads<T> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Forward pass over a `[n_sm, n_sp, n_ch]` input. Returns the weighted
/// signals, the `[n_sm, n_ch]` channel weights (each row sums to 1), and the
/// cache for the backward pass.
pub fn attention_forward<T: Scalar>(
    x: &Tensor<T>,
    p: &AttentionParams<T>,
) -> Result<(Tensor<T>, Tensor<T>, AttentionCache<T>), LayerError> {
    let (n_sm, n_sp, n_ch) = x.dims3()?;
    if n_ch != p.n_channels() {
        return Err(LayerError::ChannelMismatch {
            input: n_ch,
            kernel: p.n_channels(),
        });
    }

    // Flatten time into rows, apply the affine map, normalize each row.
    let rows = x.clone().reshape(vec![n_sm * n_sp, n_ch])?;
    let logits = add_bias_rows(&rows.matmul(&p.kernel)?, &p.bias);
    let softmax = logits.softmax_rows();

    // Average the per-step weight rows over time, then rescale the input by
    // each sample's weight vector (shared across its time steps).
    let weights = softmax
        .clone()
        .reshape(vec![n_sm, n_sp, n_ch])?
        .mean_over_axis(1)?;
    let mut y = x.clone();
    {
        let w = weights.data();
        for (s, sample) in y.data_mut().chunks_exact_mut(n_sp * n_ch).enumerate() {
            let w_row = &w[s * n_ch..(s + 1) * n_ch];
            for step in sample.chunks_exact_mut(n_ch) {
                for (v, &wc) in step.iter_mut().zip(w_row) {
                    *v = *v * wc;
                }
            }
        }
    }

    let cache = AttentionCache {
        input: x.clone(),
        softmax,
        weights: weights.clone(),
    };
    Ok((y, weights, cache))
}

/// Exact gradients of the forward map: differentiates through the elementwise
/// product, the copy across time steps, the time mean, the row softmax, and
/// the affine transform.
pub fn attention_backward<T: Scalar>(
    cache: &AttentionCache<T>,
    p: &AttentionParams<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, AttentionGrads<T>), LayerError> {
    let (n_sm, n_sp, n_ch) = cache.input.dims3()?;
    if upstream.shape() != cache.input.shape() {
        return Err(LayerError::GradShapeMismatch {
            cached: cache.input.shape().to_vec(),
            upstream: upstream.shape().to_vec(),
        });
    }

    // y = x (*) w  =>  dx gets w, dw gets sum over time of dy * x.
    let mut d_input = upstream.hadamard(&broadcast_weights(&cache.weights, n_sp)?)?;
    let mut d_weights = vec![T::zero(); n_sm * n_ch];
    for s in 0..n_sm {
        for t in 0..n_sp {
            for c in 0..n_ch {
                d_weights[s * n_ch + c] = d_weights[s * n_ch + c]
                    + upstream.at3(s, t, c) * cache.input.at3(s, t, c);
            }
        }
    }

    // Mean over time: every step's softmax row receives d_weights / n_sp.
    let inv_steps = T::one() / T::from_f64(n_sp as f64);
    let n_rows = n_sm * n_sp;
    let mut d_softmax = vec![T::zero(); n_rows * n_ch];
    for s in 0..n_sm {
        for t in 0..n_sp {
            let base = (s * n_sp + t) * n_ch;
            for c in 0..n_ch {
                d_softmax[base + c] = d_weights[s * n_ch + c] * inv_steps;
            }
        }
    }

    // Row softmax backward: dl = s (*) (ds - <ds, s>).
    let mut d_logits = vec![T::zero(); n_rows * n_ch];
    for r in 0..n_rows {
        let s_row = &cache.softmax.data()[r * n_ch..(r + 1) * n_ch];
        let ds_row = &d_softmax[r * n_ch..(r + 1) * n_ch];
        let mut dot = T::zero();
        for (&sv, &dv) in s_row.iter().zip(ds_row) {
            dot = dot + sv * dv;
        }
        for c in 0..n_ch {
            d_logits[r * n_ch + c] = s_row[c] * (ds_row[c] - dot);
        }
    }
    let d_logits = Tensor::new(vec![n_rows, n_ch], d_logits)?;

    let rows = cache.input.clone().reshape(vec![n_rows, n_ch])?;
    let d_kernel = rows.transpose()?.matmul(&d_logits)?;
    let d_bias = column_sums(&d_logits);
    let d_rows = d_logits.matmul(&p.kernel.transpose()?)?;
    d_input.add_assign(&d_rows.reshape(vec![n_sm, n_sp, n_ch])?);

    Ok((
        d_input,
        AttentionGrads {
            kernel: d_kernel,
            bias: d_bias,
        },
    ))
}

fn broadcast_weights<T: Scalar>(
    weights: &Tensor<T>,
    n_sp: usize,
) -> Result<Tensor<T>, LayerError> {
    let (n_sm, n_ch) = weights.dims2()?;
    let mut data = Vec::with_capacity(n_sm * n_sp * n_ch);
    for s in 0..n_sm {
        let row = &weights.data()[s * n_ch..(s + 1) * n_ch];
        for _ in 0..n_sp {
            data.extend_from_slice(row);
        }
    }
    Ok(Tensor::new(vec![n_sm, n_sp, n_ch], data)?)
}
