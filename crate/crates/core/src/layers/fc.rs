//! Fully connected layer: `y = activation(x . W + b)`.

use super::{add_bias_rows, column_sums, Activation, LayerError};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct FcParams<T> {
    /// `[n_in, n_out]`
    pub weights: Tensor<T>,
    /// `[n_out]`
    pub bias: Tensor<T>,
}

impl<T: Scalar> FcParams<T> {
    pub fn n_in(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn n_out(&self) -> usize {
        self.weights.shape()[1]
    }
}

#[derive(Clone, Debug)]
pub struct FcCache<T> {
    input: Tensor<T>,
    pre: Tensor<T>,
    activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FcGrads<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn fc_forward<T: Scalar>(
    x: &Tensor<T>,
    p: &FcParams<T>,
    activation: Activation,
) -> Result<(Tensor<T>, FcCache<T>), LayerError> {
    let (_, n_in) = x.dims2()?;
    if n_in != p.n_in() {
        return Err(LayerError::FeatureMismatch {
            input: n_in,
            expected: p.n_in(),
        });
    }
    let pre = add_bias_rows(&x.matmul(&p.weights)?, &p.bias);
    let y = pre.map(|z| activation.apply(z));
    Ok((
        y,
        FcCache {
            input: x.clone(),
            pre,
            activation,
        },
    ))
}

pub fn fc_backward<T: Scalar>(
    cache: &FcCache<T>,
    p: &FcParams<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, FcGrads<T>), LayerError> {
    if upstream.shape() != cache.pre.shape() {
        return Err(LayerError::GradShapeMismatch {
            cached: cache.pre.shape().to_vec(),
            upstream: upstream.shape().to_vec(),
        });
    }
    let mut d_pre = upstream.clone();
    for (v, &z) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
        *v = *v * cache.activation.grad(z);
    }
    let d_weights = cache.input.transpose()?.matmul(&d_pre)?;
    let d_bias = column_sums(&d_pre);
    let d_input = d_pre.matmul(&p.weights.transpose()?)?;
    Ok((
        d_input,
        FcGrads {
            weights: d_weights,
            bias: d_bias,
        },
    ))
}
