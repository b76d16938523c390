//! Forward and backward passes for every layer type in the network:
//! channel attention, IndRNN, batch normalization, temporal max pooling,
//! temporal average pooling, and fully connected layers.
//!
//! Every forward returns the layer output together with a cache; the matching
//! backward consumes the cache and an upstream gradient and produces exact
//! analytic gradients for the input and each parameter tensor.

mod attention;
mod batchnorm;
mod fc;
mod indrnn;
mod pool;

pub use attention::{
    attention_backward, attention_forward, AttentionCache, AttentionGrads, AttentionParams,
};
pub use batchnorm::{
    batchnorm_apply, batchnorm_backward, BatchNormCache, BatchNormGrads, BatchNormParams,
};
pub use fc::{fc_backward, fc_forward, FcCache, FcGrads, FcParams};
pub use indrnn::{
    indrnn_backward, indrnn_forward, indrnn_infer, IndRnnCache, IndRnnGrads, IndRnnParams,
};
pub use pool::{
    avgpool_backward, avgpool_time, maxpool_backward, maxpool_time, AvgPoolCache, MaxPoolCache,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{Scalar, ShapeError, Tensor};

#[derive(Debug, Error)]
pub enum LayerError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("input has {input} channels but the attention kernel expects {kernel}")]
    ChannelMismatch { input: usize, kernel: usize },
    #[error("input has {input} features but the layer expects {expected}")]
    FeatureMismatch { input: usize, expected: usize },
    #[error("time axis of length {len} is shorter than the pooling window {window}")]
    PoolTooShort { len: usize, window: usize },
    #[error("cache/gradient shape mismatch: cached {cached:?}, upstream {upstream:?}")]
    GradShapeMismatch {
        cached: Vec<usize>,
        upstream: Vec<usize>,
    },
}

/// Whether batch statistics are computed fresh (training) or read from the
/// running estimates (inference).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Identity => z,
        }
    }

    /// Derivative evaluated at the pre-activation value.
    #[inline]
    pub fn grad<T: Scalar>(self, pre: T) -> T {
        match self {
            Activation::Relu => {
                if pre > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
        }
    }
}

/// `matrix + bias` with the bias vector broadcast across rows.
pub(crate) fn add_bias_rows<T: Scalar>(matrix: &Tensor<T>, bias: &Tensor<T>) -> Tensor<T> {
    let (_, n) = matrix.dims2().expect("rank-2 matrix");
    assert_eq!(bias.shape(), &[n], "bias length must match columns");
    let mut out = matrix.clone();
    for row in out.data_mut().chunks_exact_mut(n) {
        for (v, &b) in row.iter_mut().zip(bias.data()) {
            *v = *v + b;
        }
    }
    out
}

/// Column sums of a rank-2 tensor.
pub(crate) fn column_sums<T: Scalar>(matrix: &Tensor<T>) -> Tensor<T> {
    let (m, n) = matrix.dims2().expect("rank-2 matrix");
    let mut out = vec![T::zero(); n];
    for i in 0..m {
        for j in 0..n {
            out[j] = out[j] + matrix.at2(i, j);
        }
    }
    Tensor::new(vec![n], out).expect("vector shape")
}
