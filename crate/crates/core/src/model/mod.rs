//! Builds and runs the architecture family: dense IndRNN stacks with optional
//! channel attention (`adindrnn`, `dindrnn`) and plain IndRNN stacks with or
//! without attention (`aindrnn`, `indrnn`).

mod checkpoint;
mod forward;
mod params;
mod spec;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use forward::{
    dense_block_forward, extract_attention_weights, model_backward, model_forward,
    DenseBlockCache, ForwardCaches, ModelOutput, StageShape,
};
pub use params::{build_model, BlockParams, LayerParams, ModelGrads, ModelParams};
pub use spec::{BlockSpec, InitSpec, ModelSpec, Variant};

use thiserror::Error;

use crate::layers::LayerError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Shape(#[from] crate::tensor::ShapeError),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("this model variant has no attention layer")]
    NoAttention,
    #[error("input has {input} channels but the model expects {expected}")]
    ChannelMismatch { input: usize, expected: usize },
    #[error(
        "sequence of {len} steps cannot feed pooling stage {stage} (window {window}); \
         the spec is too deep for this input length"
    )]
    SequenceTooShort {
        stage: usize,
        len: usize,
        window: usize,
    },
    #[error("checkpoint io: {0}")]
    CheckpointIo(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    CheckpointFormat(String),
}
