//! Temporal pooling. Max pooling compresses the time axis over fixed windows;
//! average pooling collapses it entirely, leaving one feature row per sample.

use super::LayerError;
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    input_shape: Vec<usize>,
    /// Flat input index of the winning element for every output element.
    argmax: Vec<usize>,
}

/// Per-feature max over time windows of `window` steps advancing by `stride`;
/// a trailing remainder shorter than the window is dropped.
pub fn maxpool_time<T: Scalar>(
    x: &Tensor<T>,
    window: usize,
    stride: usize,
) -> Result<(Tensor<T>, MaxPoolCache), LayerError> {
    assert!(window > 0 && stride > 0, "window and stride must be positive");
    let (n_sm, steps, n_fe) = x.dims3()?;
    if steps < window {
        return Err(LayerError::PoolTooShort {
            len: steps,
            window,
        });
    }
    let out_steps = (steps - window) / stride + 1;
    let mut out = vec![T::zero(); n_sm * out_steps * n_fe];
    let mut argmax = vec![0usize; out.len()];
    for s in 0..n_sm {
        for o in 0..out_steps {
            let t0 = o * stride;
            for f in 0..n_fe {
                let mut best_idx = (s * steps + t0) * n_fe + f;
                let mut best = x.data()[best_idx];
                for dt in 1..window {
                    let idx = (s * steps + t0 + dt) * n_fe + f;
                    let v = x.data()[idx];
                    if v > best {
                        best = v;
                        best_idx = idx;
                    }
                }
                let out_idx = (s * out_steps + o) * n_fe + f;
                out[out_idx] = best;
                argmax[out_idx] = best_idx;
            }
        }
    }
    Ok((
        Tensor::new(vec![n_sm, out_steps, n_fe], out)?,
        MaxPoolCache {
            input_shape: vec![n_sm, steps, n_fe],
            argmax,
        },
    ))
}

/// Routes each upstream gradient to the input element that won its window.
pub fn maxpool_backward<T: Scalar>(
    cache: &MaxPoolCache,
    upstream: &Tensor<T>,
) -> Result<Tensor<T>, LayerError> {
    if upstream.len() != cache.argmax.len() {
        return Err(LayerError::GradShapeMismatch {
            cached: cache.input_shape.clone(),
            upstream: upstream.shape().to_vec(),
        });
    }
    let mut d_input = Tensor::zeros(cache.input_shape.clone());
    for (&src, &g) in cache.argmax.iter().zip(upstream.data()) {
        d_input.data_mut()[src] = d_input.data_mut()[src] + g;
    }
    Ok(d_input)
}

#[derive(Clone, Debug)]
pub struct AvgPoolCache {
    input_shape: Vec<usize>,
}

/// Mean over the whole time axis: `[n_sm, steps, n_fe] -> [n_sm, n_fe]`.
pub fn avgpool_time<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, AvgPoolCache), LayerError> {
    let (_, _, _) = x.dims3()?;
    let y = x.mean_over_axis(1)?;
    Ok((
        y,
        AvgPoolCache {
            input_shape: x.shape().to_vec(),
        },
    ))
}

pub fn avgpool_backward<T: Scalar>(
    cache: &AvgPoolCache,
    upstream: &Tensor<T>,
) -> Result<Tensor<T>, LayerError> {
    let (n_sm, steps, n_fe) = (
        cache.input_shape[0],
        cache.input_shape[1],
        cache.input_shape[2],
    );
    if upstream.shape() != [n_sm, n_fe] {
        return Err(LayerError::GradShapeMismatch {
            cached: cache.input_shape.clone(),
            upstream: upstream.shape().to_vec(),
        });
    }
    let inv = T::one() / T::from_f64(steps as f64);
    let mut d_input = Tensor::zeros(cache.input_shape.clone());
    for s in 0..n_sm {
        for t in 0..steps {
            for f in 0..n_fe {
                d_input.data_mut()[(s * steps + t) * n_fe + f] =
                    upstream.at2(s, f) * inv;
            }
        }
    }
    Ok(d_input)
}
