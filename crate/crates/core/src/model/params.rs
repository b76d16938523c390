//! Trainable parameter set matching a `ModelSpec`, with seeded construction
//! and a flat named view used by the optimizer, the weight-decay term, and the
//! checkpoint format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelError, ModelSpec};
use crate::layers::{
    AttentionGrads, AttentionParams, BatchNormGrads, BatchNormParams, FcGrads, FcParams,
    IndRnnGrads, IndRnnParams,
};
use crate::tensor::{Scalar, Tensor};

/// One in-block component: an IndRNN layer followed by batch normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub indrnn: IndRnnParams<T>,
    pub bn: BatchNormParams<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockParams<T> {
    pub layers: Vec<LayerParams<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub spec: ModelSpec,
    pub attention: Option<AttentionParams<T>>,
    pub blocks: Vec<BlockParams<T>>,
    pub fc1: FcParams<T>,
    pub fc2: FcParams<T>,
}

/// Gradients mirroring `ModelParams` (trainable tensors only).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads<T> {
    pub attention: Option<AttentionGrads<T>>,
    pub blocks: Vec<Vec<(IndRnnGrads<T>, BatchNormGrads<T>)>>,
    pub fc1: FcGrads<T>,
    pub fc2: FcGrads<T>,
}

/// Feature width feeding layer `layer_idx` of block `block_idx`.
///
/// Dense blocks concatenate the block input with every earlier component
/// output, so widths grow by one state size per component; plain stacks feed
/// each layer the previous layer's output.
fn layer_input_width(spec: &ModelSpec, block_idx: usize, layer_idx: usize) -> usize {
    let block_input = if block_idx == 0 {
        spec.n_channels
    } else {
        spec.blocks[block_idx - 1].state_size
    };
    let state = spec.blocks[block_idx].state_size;
    if spec.variant.uses_dense_blocks() {
        block_input + layer_idx * state
    } else if layer_idx == 0 {
        block_input
    } else {
        state
    }
}

/// Builds a freshly initialized parameter set. Drawing order is fixed, so the
/// same seed always produces bit-identical parameters: attention kernel, then
/// per block and layer the input weights, recurrent weights and output
/// weights, then the two FC layers.
pub fn build_model<T: Scalar>(spec: &ModelSpec, seed: u64) -> Result<ModelParams<T>, ModelError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let attention = if spec.use_attention() {
        let c = spec.n_channels;
        Some(AttentionParams {
            kernel: truncated_normal(&mut rng, vec![c, c], spec.init.attention_kernel_std),
            bias: Tensor::zeros(vec![c]),
        })
    } else {
        None
    };

    let mut blocks = Vec::with_capacity(spec.blocks.len());
    for (bi, block) in spec.blocks.iter().enumerate() {
        let h = block.state_size;
        let mut layers = Vec::with_capacity(block.layers);
        for li in 0..block.layers {
            let in_w = layer_input_width(spec, bi, li);
            layers.push(LayerParams {
                indrnn: IndRnnParams {
                    input_weights: xavier_uniform(&mut rng, in_w, h),
                    recurrent_weights: uniform_01(&mut rng, h),
                    hidden_bias: Tensor::zeros(vec![h]),
                    output_weights: xavier_uniform(&mut rng, h, h),
                    output_bias: Tensor::zeros(vec![h]),
                },
                bn: BatchNormParams::new(h, spec.bn_epsilon, spec.bn_momentum),
            });
        }
        blocks.push(BlockParams { layers });
    }

    let last = spec.last_state_size();
    let fc1 = FcParams {
        weights: xavier_uniform(&mut rng, last, spec.fc_hidden),
        bias: Tensor::filled(vec![spec.fc_hidden], T::from_f64(spec.init.fc_bias_value)),
    };
    let fc2 = FcParams {
        weights: xavier_uniform(&mut rng, spec.fc_hidden, spec.n_classes),
        bias: Tensor::filled(vec![spec.n_classes], T::from_f64(spec.init.fc_bias_value)),
    };

    Ok(ModelParams {
        spec: spec.clone(),
        attention,
        blocks,
        fc1,
        fc2,
    })
}

fn xavier_uniform<T: Scalar>(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| T::from_f64(rng.gen_range(-limit..limit)))
        .collect();
    Tensor::new(vec![fan_in, fan_out], data).expect("positive extents")
}

fn uniform_01<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Tensor<T> {
    let data = (0..n).map(|_| T::from_f64(rng.gen_range(0.0..1.0))).collect();
    Tensor::new(vec![n], data).expect("positive extent")
}

/// Normal(0, std) with rejection outside two standard deviations.
fn truncated_normal<T: Scalar>(rng: &mut ChaCha8Rng, shape: Vec<usize>, std: f64) -> Tensor<T> {
    let len = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    while data.len() < len {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        if z.abs() <= 2.0 {
            data.push(T::from_f64(z * std));
        }
    }
    Tensor::new(shape, data).expect("positive extents")
}

impl<T: Scalar> ModelParams<T> {
    /// Parameter set with the right shapes and all values zero; used when
    /// loading a checkpoint.
    pub fn zeros_from_spec(spec: &ModelSpec) -> Result<Self, ModelError> {
        let mut params = build_model::<T>(spec, 0)?;
        for (_, tensor, _) in params.named_tensors_mut() {
            for v in tensor.data_mut() {
                *v = T::zero();
            }
        }
        Ok(params)
    }

    /// Every tensor in canonical order as `(name, tensor, trainable)`.
    /// Batch-norm running statistics are listed but not trainable.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>, bool)> {
        let mut out = Vec::new();
        if let Some(a) = &self.attention {
            out.push(("attention.kernel".to_string(), &a.kernel, true));
            out.push(("attention.bias".to_string(), &a.bias, true));
        }
        for (bi, block) in self.blocks.iter().enumerate() {
            for (li, layer) in block.layers.iter().enumerate() {
                let p = format!("block{bi}.layer{li}");
                let ind = &layer.indrnn;
                out.push((format!("{p}.input_weights"), &ind.input_weights, true));
                out.push((format!("{p}.recurrent_weights"), &ind.recurrent_weights, true));
                out.push((format!("{p}.hidden_bias"), &ind.hidden_bias, true));
                out.push((format!("{p}.output_weights"), &ind.output_weights, true));
                out.push((format!("{p}.output_bias"), &ind.output_bias, true));
                out.push((format!("{p}.bn.gamma"), &layer.bn.gamma, true));
                out.push((format!("{p}.bn.beta"), &layer.bn.beta, true));
                out.push((format!("{p}.bn.running_mean"), &layer.bn.running_mean, false));
                out.push((format!("{p}.bn.running_var"), &layer.bn.running_var, false));
            }
        }
        out.push(("fc1.weights".to_string(), &self.fc1.weights, true));
        out.push(("fc1.bias".to_string(), &self.fc1.bias, true));
        out.push(("fc2.weights".to_string(), &self.fc2.weights, true));
        out.push(("fc2.bias".to_string(), &self.fc2.bias, true));
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor<T>, bool)> {
        let mut out: Vec<(String, &mut Tensor<T>, bool)> = Vec::new();
        if let Some(a) = &mut self.attention {
            out.push(("attention.kernel".to_string(), &mut a.kernel, true));
            out.push(("attention.bias".to_string(), &mut a.bias, true));
        }
        for (bi, block) in self.blocks.iter_mut().enumerate() {
            for (li, layer) in block.layers.iter_mut().enumerate() {
                let p = format!("block{bi}.layer{li}");
                let ind = &mut layer.indrnn;
                out.push((format!("{p}.input_weights"), &mut ind.input_weights, true));
                out.push((
                    format!("{p}.recurrent_weights"),
                    &mut ind.recurrent_weights,
                    true,
                ));
                out.push((format!("{p}.hidden_bias"), &mut ind.hidden_bias, true));
                out.push((format!("{p}.output_weights"), &mut ind.output_weights, true));
                out.push((format!("{p}.output_bias"), &mut ind.output_bias, true));
                out.push((format!("{p}.bn.gamma"), &mut layer.bn.gamma, true));
                out.push((format!("{p}.bn.beta"), &mut layer.bn.beta, true));
                out.push((
                    format!("{p}.bn.running_mean"),
                    &mut layer.bn.running_mean,
                    false,
                ));
                out.push((
                    format!("{p}.bn.running_var"),
                    &mut layer.bn.running_var,
                    false,
                ));
            }
        }
        out.push(("fc1.weights".to_string(), &mut self.fc1.weights, true));
        out.push(("fc1.bias".to_string(), &mut self.fc1.bias, true));
        out.push(("fc2.weights".to_string(), &mut self.fc2.weights, true));
        out.push(("fc2.bias".to_string(), &mut self.fc2.bias, true));
        out
    }

    pub fn trainable(&self) -> Vec<(String, &Tensor<T>)> {
        self.named_tensors()
            .into_iter()
            .filter(|(_, _, t)| *t)
            .map(|(n, t, _)| (n, t))
            .collect()
    }

    pub fn trainable_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.named_tensors_mut()
            .into_iter()
            .filter(|(_, _, t)| *t)
            .map(|(n, t, _)| (n, t))
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t, _)| t.all_finite())
    }

    /// Clamps every recurrent weight to `[-bound, bound]`; applied after
    /// optimizer steps when the spec asks for it.
    pub fn clip_recurrent_weights(&mut self, bound: f64) {
        let b = T::from_f64(bound);
        for block in &mut self.blocks {
            for layer in &mut block.layers {
                for u in layer.indrnn.recurrent_weights.data_mut() {
                    *u = u.min(b).max(-b);
                }
            }
        }
    }
}

impl<T: Scalar> ModelGrads<T> {
    /// Zero gradients shaped like the trainable tensors of `params`.
    pub fn zeros_like(params: &ModelParams<T>) -> Self {
        let zero = |t: &Tensor<T>| Tensor::zeros(t.shape().to_vec());
        ModelGrads {
            attention: params.attention.as_ref().map(|a| AttentionGrads {
                kernel: zero(&a.kernel),
                bias: zero(&a.bias),
            }),
            blocks: params
                .blocks
                .iter()
                .map(|b| {
                    b.layers
                        .iter()
                        .map(|l| {
                            (
                                IndRnnGrads {
                                    input_weights: zero(&l.indrnn.input_weights),
                                    recurrent_weights: zero(&l.indrnn.recurrent_weights),
                                    hidden_bias: zero(&l.indrnn.hidden_bias),
                                    output_weights: zero(&l.indrnn.output_weights),
                                    output_bias: zero(&l.indrnn.output_bias),
                                },
                                BatchNormGrads {
                                    gamma: zero(&l.bn.gamma),
                                    beta: zero(&l.bn.beta),
                                },
                            )
                        })
                        .collect()
                })
                .collect(),
            fc1: FcGrads {
                weights: zero(&params.fc1.weights),
                bias: zero(&params.fc1.bias),
            },
            fc2: FcGrads {
                weights: zero(&params.fc2.weights),
                bias: zero(&params.fc2.bias),
            },
        }
    }

    /// Trainable gradients in the same canonical order as
    /// `ModelParams::trainable`.
    pub fn trainable(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out: Vec<(String, &Tensor<T>)> = Vec::new();
        if let Some(a) = &self.attention {
            out.push(("attention.kernel".to_string(), &a.kernel));
            out.push(("attention.bias".to_string(), &a.bias));
        }
        for (bi, layers) in self.blocks.iter().enumerate() {
            for (li, (ind, bn)) in layers.iter().enumerate() {
                let p = format!("block{bi}.layer{li}");
                out.push((format!("{p}.input_weights"), &ind.input_weights));
                out.push((format!("{p}.recurrent_weights"), &ind.recurrent_weights));
                out.push((format!("{p}.hidden_bias"), &ind.hidden_bias));
                out.push((format!("{p}.output_weights"), &ind.output_weights));
                out.push((format!("{p}.output_bias"), &ind.output_bias));
                out.push((format!("{p}.bn.gamma"), &bn.gamma));
                out.push((format!("{p}.bn.beta"), &bn.beta));
            }
        }
        out.push(("fc1.weights".to_string(), &self.fc1.weights));
        out.push(("fc1.bias".to_string(), &self.fc1.bias));
        out.push(("fc2.weights".to_string(), &self.fc2.weights));
        out.push(("fc2.bias".to_string(), &self.fc2.bias));
        out
    }

    fn trainable_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out: Vec<(String, &mut Tensor<T>)> = Vec::new();
        if let Some(a) = &mut self.attention {
            out.push(("attention.kernel".to_string(), &mut a.kernel));
            out.push(("attention.bias".to_string(), &mut a.bias));
        }
        for (bi, layers) in self.blocks.iter_mut().enumerate() {
            for (li, (ind, bn)) in layers.iter_mut().enumerate() {
                let p = format!("block{bi}.layer{li}");
                out.push((format!("{p}.input_weights"), &mut ind.input_weights));
                out.push((format!("{p}.recurrent_weights"), &mut ind.recurrent_weights));
                out.push((format!("{p}.hidden_bias"), &mut ind.hidden_bias));
                out.push((format!("{p}.output_weights"), &mut ind.output_weights));
                out.push((format!("{p}.output_bias"), &mut ind.output_bias));
                out.push((format!("{p}.bn.gamma"), &mut bn.gamma));
                out.push((format!("{p}.bn.beta"), &mut bn.beta));
            }
        }
        out.push(("fc1.weights".to_string(), &mut self.fc1.weights));
        out.push(("fc1.bias".to_string(), &mut self.fc1.bias));
        out.push(("fc2.weights".to_string(), &mut self.fc2.weights));
        out.push(("fc2.bias".to_string(), &mut self.fc2.bias));
        out
    }

    /// Adds the weight-decay gradient `wd * theta` for every trainable
    /// tensor, matching the `wd * sum(|theta|^2 / 2)` loss term.
    pub fn add_l2_term(&mut self, params: &ModelParams<T>, weight_decay: f64) {
        let wd = T::from_f64(weight_decay);
        let param_list = params.trainable();
        let mut grad_list = self.trainable_mut();
        assert_eq!(param_list.len(), grad_list.len(), "grads mirror params");
        for ((pname, p), (gname, g)) in param_list.iter().zip(grad_list.iter_mut()) {
            assert_eq!(pname, gname, "canonical order must agree");
            for (gv, &pv) in g.data_mut().iter_mut().zip(p.data()) {
                *gv = *gv + wd * pv;
            }
        }
    }
}
