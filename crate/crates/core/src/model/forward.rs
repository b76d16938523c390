//! Runs the full architecture: optional attention, then the block body
//! (dense blocks with pooling between them, or a plain stack pooling after
//! every layer), average pooling over time, and two FC layers.

use super::{ModelError, ModelParams};
use crate::layers::{
    attention_backward, attention_forward, avgpool_backward, avgpool_time, batchnorm_apply,
    batchnorm_backward, fc_backward, fc_forward, indrnn_backward, indrnn_forward, indrnn_infer,
    maxpool_backward, maxpool_time, Activation, AttentionCache, AvgPoolCache, BatchNormCache,
    BatchNormGrads, FcCache, IndRnnCache, IndRnnGrads, LayerError, MaxPoolCache, Mode,
};
use crate::model::params::{LayerParams, ModelGrads};
use crate::tensor::{Scalar, Tensor};

/// One stage of the forward pass with its output shape; recorded in both
/// modes, mostly for diagnostics and shape assertions.
#[derive(Clone, Debug, PartialEq)]
pub struct StageShape {
    pub stage: String,
    pub shape: Vec<usize>,
}

impl StageShape {
    fn new(stage: impl Into<String>, shape: &[usize]) -> Self {
        Self {
            stage: stage.into(),
            shape: shape.to_vec(),
        }
    }
}

pub struct ModelOutput<T> {
    pub logits: Tensor<T>,
    /// Per-sample channel weights when the variant has attention.
    pub attention_weights: Option<Tensor<T>>,
    /// Present after a `Train` forward; feeds `model_backward`.
    pub caches: Option<ForwardCaches<T>>,
    pub trace: Vec<StageShape>,
}

pub struct ForwardCaches<T> {
    attention: Option<AttentionCache<T>>,
    body: BodyCache<T>,
    avg: AvgPoolCache,
    fc1: FcCache<T>,
    fc2: FcCache<T>,
}

enum BodyCache<T> {
    Dense(Vec<(DenseBlockCache<T>, MaxPoolCache)>),
    Plain(Vec<(IndRnnCache<T>, BatchNormCache<T>, MaxPoolCache)>),
}

pub struct DenseBlockCache<T> {
    layer_caches: Vec<(IndRnnCache<T>, BatchNormCache<T>)>,
    input_width: usize,
    state_size: usize,
}

/// Within a dense block, component `i` consumes the feature-axis
/// concatenation of the block input and the outputs of components `0..i`;
/// the block output is the last component's output. Each component is an
/// IndRNN layer followed by batch normalization. Returns a cache only in
/// `Train` mode.
pub fn dense_block_forward<T: Scalar>(
    x: &Tensor<T>,
    layers: &mut [LayerParams<T>],
    hidden_act: Activation,
    out_act: Activation,
    mode: Mode,
) -> Result<(Tensor<T>, Option<DenseBlockCache<T>>), ModelError> {
    dense_block_forward_inner(x, layers, hidden_act, out_act, mode, true)
}

/// Test hook: zeroes every dense link, leaving only the sequential chain
/// (component `i` sees zeros in place of the block input and the outputs of
/// components before `i - 1`).
#[cfg(test)]
pub(crate) fn dense_block_forward_severed<T: Scalar>(
    x: &Tensor<T>,
    layers: &mut [LayerParams<T>],
    hidden_act: Activation,
    out_act: Activation,
    mode: Mode,
) -> Result<(Tensor<T>, Option<DenseBlockCache<T>>), ModelError> {
    dense_block_forward_inner(x, layers, hidden_act, out_act, mode, false)
}

fn dense_block_forward_inner<T: Scalar>(
    x: &Tensor<T>,
    layers: &mut [LayerParams<T>],
    hidden_act: Activation,
    out_act: Activation,
    mode: Mode,
    links: bool,
) -> Result<(Tensor<T>, Option<DenseBlockCache<T>>), ModelError> {
    assert!(!layers.is_empty(), "dense block needs at least one component");
    let (_, _, f0) = x.dims3().map_err(LayerError::from)?;
    let state_size = layers[0].indrnn.state_size();
    let train = mode == Mode::Train;

    let mut outs: Vec<Tensor<T>> = Vec::with_capacity(layers.len());
    let mut layer_caches = Vec::new();
    for (i, layer) in layers.iter_mut().enumerate() {
        let input = if i == 0 {
            x.clone()
        } else if links {
            let mut parts: Vec<&Tensor<T>> = Vec::with_capacity(i + 1);
            parts.push(x);
            parts.extend(outs.iter().take(i));
            Tensor::concat_features(&parts)?
        } else {
            let zero_head = Tensor::zeros(x.shape().to_vec());
            let zero_outs: Vec<Tensor<T>> = outs[..i - 1]
                .iter()
                .map(|o| Tensor::zeros(o.shape().to_vec()))
                .collect();
            let mut parts: Vec<&Tensor<T>> = Vec::with_capacity(i + 1);
            parts.push(&zero_head);
            parts.extend(zero_outs.iter());
            parts.push(&outs[i - 1]);
            Tensor::concat_features(&parts)?
        };

        let bn_out = if train {
            let (y_seq, ind_cache) = indrnn_forward(&input, &layer.indrnn, hidden_act, out_act)?;
            let (bn_out, bn_cache) = batchnorm_apply(&y_seq, &mut layer.bn, mode)?;
            layer_caches.push((ind_cache, bn_cache.expect("train mode caches")));
            bn_out
        } else {
            let y_seq = indrnn_infer(&input, &layer.indrnn, hidden_act, out_act)?;
            let (bn_out, _) = batchnorm_apply(&y_seq, &mut layer.bn, mode)?;
            bn_out
        };
        outs.push(bn_out);
    }

    let y = outs.pop().expect("at least one component");
    let cache = train.then_some(DenseBlockCache {
        layer_caches,
        input_width: f0,
        state_size,
    });
    Ok((y, cache))
}

fn dense_block_backward<T: Scalar>(
    cache: &DenseBlockCache<T>,
    layers: &[LayerParams<T>],
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<(IndRnnGrads<T>, BatchNormGrads<T>)>), ModelError> {
    let n_layers = cache.layer_caches.len();
    let f0 = cache.input_width;
    let h = cache.state_size;

    let mut d_outs: Vec<Option<Tensor<T>>> = vec![None; n_layers];
    d_outs[n_layers - 1] = Some(upstream.clone());
    let mut d_input: Option<Tensor<T>> = None;
    let mut grads_rev = Vec::with_capacity(n_layers);

    for i in (0..n_layers).rev() {
        let d_out = d_outs[i]
            .take()
            .expect("every component output feeds a later gradient");
        let (ind_cache, bn_cache) = &cache.layer_caches[i];
        let (d_seq, bn_grads) = batchnorm_backward(bn_cache, &layers[i].bn, &d_out)?;
        let (d_concat, ind_grads) = indrnn_backward(ind_cache, &layers[i].indrnn, &d_seq)?;

        // The concatenated input splits back into the block input plus the
        // outputs of components 0..i.
        let mut widths = Vec::with_capacity(i + 1);
        widths.push(f0);
        widths.extend(std::iter::repeat(h).take(i));
        let mut parts = split_features(&d_concat, &widths)?;
        for j in (0..i).rev() {
            let part = parts.pop().expect("one part per earlier component");
            accumulate(&mut d_outs[j], part);
        }
        accumulate(&mut d_input, parts.pop().expect("block input part"));
        grads_rev.push((ind_grads, bn_grads));
    }

    grads_rev.reverse();
    Ok((d_input.expect("block has at least one component"), grads_rev))
}

fn accumulate<T: Scalar>(slot: &mut Option<Tensor<T>>, value: Tensor<T>) {
    match slot {
        Some(acc) => acc.add_assign(&value),
        None => *slot = Some(value),
    }
}

/// Splits a rank-3 tensor along the feature axis into parts of the given
/// widths.
fn split_features<T: Scalar>(
    t: &Tensor<T>,
    widths: &[usize],
) -> Result<Vec<Tensor<T>>, ModelError> {
    let (n, steps, total) = t.dims3().map_err(LayerError::from)?;
    debug_assert_eq!(widths.iter().sum::<usize>(), total);
    let mut parts: Vec<Tensor<T>> = widths
        .iter()
        .map(|&w| Tensor::zeros(vec![n, steps, w]))
        .collect();
    for s in 0..n {
        for step in 0..steps {
            let mut offset = 0;
            let base = (s * steps + step) * total;
            for (p, &w) in parts.iter_mut().zip(widths) {
                let dst_base = (s * steps + step) * w;
                p.data_mut()[dst_base..dst_base + w]
                    .copy_from_slice(&t.data()[base + offset..base + offset + w]);
                offset += w;
            }
        }
    }
    Ok(parts)
}

/// Full forward pass over a `[n_sm, n_sp, n_ch]` batch.
pub fn model_forward<T: Scalar>(
    params: &mut ModelParams<T>,
    x: &Tensor<T>,
    mode: Mode,
) -> Result<ModelOutput<T>, ModelError> {
    let spec = params.spec.clone();
    let (_, n_sp, n_ch) = x.dims3().map_err(LayerError::from)?;
    if n_ch != spec.n_channels {
        return Err(ModelError::ChannelMismatch {
            input: n_ch,
            expected: spec.n_channels,
        });
    }
    spec.validate_input_len(n_sp)?;

    let train = mode == Mode::Train;
    let mut trace = vec![StageShape::new("input", x.shape())];
    let mut attention_weights = None;
    let mut attention_cache = None;

    let mut cur = if let Some(att) = &params.attention {
        let (y, weights, cache) = attention_forward(x, att)?;
        trace.push(StageShape::new("attention", y.shape()));
        attention_weights = Some(weights);
        if train {
            attention_cache = Some(cache);
        }
        y
    } else {
        x.clone()
    };

    let body = if spec.variant.uses_dense_blocks() {
        let mut caches = Vec::new();
        for (bi, block) in params.blocks.iter_mut().enumerate() {
            let (y, block_cache) = dense_block_forward(
                &cur,
                &mut block.layers,
                spec.hidden_activation,
                spec.output_activation,
                mode,
            )?;
            trace.push(StageShape::new(format!("block{bi}"), y.shape()));
            let (pooled, pool_cache) = maxpool_time(&y, spec.pool_window, spec.pool_stride)?;
            trace.push(StageShape::new(format!("pool{bi}"), pooled.shape()));
            if train {
                caches.push((block_cache.expect("train mode caches"), pool_cache));
            }
            cur = pooled;
        }
        BodyCache::Dense(caches)
    } else {
        let mut caches = Vec::new();
        for (bi, block) in params.blocks.iter_mut().enumerate() {
            for (li, layer) in block.layers.iter_mut().enumerate() {
                let stage = format!("block{bi}.layer{li}");
                if train {
                    let (y_seq, ind_cache) = indrnn_forward(
                        &cur,
                        &layer.indrnn,
                        spec.hidden_activation,
                        spec.output_activation,
                    )?;
                    let (bn_out, bn_cache) = batchnorm_apply(&y_seq, &mut layer.bn, mode)?;
                    trace.push(StageShape::new(&stage, bn_out.shape()));
                    let (pooled, pool_cache) =
                        maxpool_time(&bn_out, spec.pool_window, spec.pool_stride)?;
                    trace.push(StageShape::new(format!("{stage}.pool"), pooled.shape()));
                    caches.push((ind_cache, bn_cache.expect("train mode caches"), pool_cache));
                    cur = pooled;
                } else {
                    let y_seq = indrnn_infer(
                        &cur,
                        &layer.indrnn,
                        spec.hidden_activation,
                        spec.output_activation,
                    )?;
                    let (bn_out, _) = batchnorm_apply(&y_seq, &mut layer.bn, mode)?;
                    trace.push(StageShape::new(&stage, bn_out.shape()));
                    let (pooled, _) = maxpool_time(&bn_out, spec.pool_window, spec.pool_stride)?;
                    trace.push(StageShape::new(format!("{stage}.pool"), pooled.shape()));
                    cur = pooled;
                }
            }
        }
        BodyCache::Plain(caches)
    };

    let (avg, avg_cache) = avgpool_time(&cur)?;
    trace.push(StageShape::new("avgpool", avg.shape()));
    let (hidden, fc1_cache) = fc_forward(&avg, &params.fc1, Activation::Relu)?;
    trace.push(StageShape::new("fc1", hidden.shape()));
    let (logits, fc2_cache) = fc_forward(&hidden, &params.fc2, Activation::Identity)?;
    trace.push(StageShape::new("fc2", logits.shape()));

    let caches = train.then_some(ForwardCaches {
        attention: attention_cache,
        body,
        avg: avg_cache,
        fc1: fc1_cache,
        fc2: fc2_cache,
    });

    Ok(ModelOutput {
        logits,
        attention_weights,
        caches,
        trace,
    })
}

/// Backward pass from the logit gradients; returns the parameter gradients
/// and the gradient with respect to the model input.
pub fn model_backward<T: Scalar>(
    params: &ModelParams<T>,
    caches: &ForwardCaches<T>,
    d_logits: &Tensor<T>,
) -> Result<(ModelGrads<T>, Tensor<T>), ModelError> {
    let (d_hidden, fc2_grads) = fc_backward(&caches.fc2, &params.fc2, d_logits)?;
    let (d_avg, fc1_grads) = fc_backward(&caches.fc1, &params.fc1, &d_hidden)?;
    let mut d_cur = avgpool_backward(&caches.avg, &d_avg)?;

    let blocks_grads = match &caches.body {
        BodyCache::Dense(list) => {
            let mut rev = Vec::with_capacity(list.len());
            for (bi, (block_cache, pool_cache)) in list.iter().enumerate().rev() {
                d_cur = maxpool_backward(pool_cache, &d_cur)?;
                let (d_in, layer_grads) =
                    dense_block_backward(block_cache, &params.blocks[bi].layers, &d_cur)?;
                rev.push(layer_grads);
                d_cur = d_in;
            }
            rev.reverse();
            rev
        }
        BodyCache::Plain(list) => {
            // The flat stage list maps back onto (block, layer) by walking
            // the spec's layer counts.
            let mut layer_params: Vec<&LayerParams<T>> = Vec::new();
            for block in &params.blocks {
                for layer in &block.layers {
                    layer_params.push(layer);
                }
            }
            debug_assert_eq!(layer_params.len(), list.len());
            let mut flat_rev = Vec::with_capacity(list.len());
            for ((ind_cache, bn_cache, pool_cache), layer) in
                list.iter().zip(&layer_params).rev()
            {
                d_cur = maxpool_backward(pool_cache, &d_cur)?;
                let (d_seq, bn_grads) = batchnorm_backward(bn_cache, &layer.bn, &d_cur)?;
                let (d_in, ind_grads) = indrnn_backward(ind_cache, &layer.indrnn, &d_seq)?;
                flat_rev.push((ind_grads, bn_grads));
                d_cur = d_in;
            }
            flat_rev.reverse();
            let mut flat = flat_rev.into_iter();
            params
                .blocks
                .iter()
                .map(|b| (&mut flat).take(b.layers.len()).collect())
                .collect()
        }
    };

    let attention_grads = match (&caches.attention, &params.attention) {
        (Some(cache), Some(p)) => {
            let (d_x, grads) = attention_backward(cache, p, &d_cur)?;
            d_cur = d_x;
            Some(grads)
        }
        _ => None,
    };

    Ok((
        ModelGrads {
            attention: attention_grads,
            blocks: blocks_grads,
            fc1: fc1_grads,
            fc2: fc2_grads,
        },
        d_cur,
    ))
}

/// The per-sample channel weights the attention layer assigns to `x`,
/// without running the rest of the model.
pub fn extract_attention_weights<T: Scalar>(
    params: &ModelParams<T>,
    x: &Tensor<T>,
) -> Result<Tensor<T>, ModelError> {
    let att = params.attention.as_ref().ok_or(ModelError::NoAttention)?;
    let (_, weights, _) = attention_forward(x, att)?;
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelSpec, Variant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_input(seed: u64, n: usize, t: usize, c: usize) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * t * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::new(vec![n, t, c], data).unwrap()
    }

    #[test]
    fn dense_block_width_arithmetic() {
        // Input width 17, state 80: component inputs 17, 97, 177, output 80.
        let spec = ModelSpec::uniform(Variant::Dindrnn, 17, 1, 3, &[80]);
        let mut params = build_model::<f64>(&spec, 3).unwrap();
        let x = random_input(1, 2, 4, 17);
        let (y, _) = dense_block_forward(
            &x,
            &mut params.blocks[0].layers,
            Activation::Relu,
            Activation::Relu,
            Mode::Infer,
        )
        .unwrap();
        assert_eq!(y.shape(), &[2, 4, 80]);
    }

    #[test]
    fn single_component_block_is_plain_indrnn_bn() {
        let spec = ModelSpec::uniform(Variant::Dindrnn, 5, 1, 1, &[6]);
        let mut params = build_model::<f64>(&spec, 7).unwrap();
        let x = random_input(2, 3, 8, 5);

        let mut solo = params.blocks[0].layers.clone();
        let (block_y, _) = dense_block_forward(
            &x,
            &mut params.blocks[0].layers,
            Activation::Relu,
            Activation::Relu,
            Mode::Train,
        )
        .unwrap();

        let (seq, _) = crate::layers::indrnn_forward(
            &x,
            &solo[0].indrnn,
            Activation::Relu,
            Activation::Relu,
        )
        .unwrap();
        let (expected, _) =
            crate::layers::batchnorm_apply(&seq, &mut solo[0].bn, Mode::Train).unwrap();
        assert_eq!(block_y, expected);
    }

    #[test]
    fn zero_input_zero_bias_block_stays_zero() {
        let spec = ModelSpec::uniform(Variant::Dindrnn, 4, 1, 3, &[5]);
        let mut params = build_model::<f64>(&spec, 11).unwrap();
        let x = Tensor::<f64>::zeros(vec![2, 6, 4]);
        let (y, _) = dense_block_forward(
            &x,
            &mut params.blocks[0].layers,
            Activation::Relu,
            Activation::Relu,
            Mode::Train,
        )
        .unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn severed_links_equal_sequential_composition() {
        // With the dense links zeroed, each component must act on just its
        // predecessor's output through the matching input-weight rows --
        // confirming the links are the only difference from a plain chain.
        let spec = ModelSpec::uniform(Variant::Dindrnn, 4, 1, 3, &[6]);
        let mut params = build_model::<f64>(&spec, 23).unwrap();
        let x = random_input(5, 2, 6, 4);

        let mut severed_params = params.blocks[0].layers.clone();
        let (severed_y, _) = dense_block_forward_severed(
            &x,
            &mut severed_params,
            Activation::Relu,
            Activation::Relu,
            Mode::Infer,
        )
        .unwrap();

        // Sequential composition: slice out the weight rows each component
        // applies to its immediate predecessor.
        let f0 = 4;
        let h = 6;
        let mut cur = x;
        for (i, layer) in params.blocks[0].layers.iter_mut().enumerate() {
            let sub_weights = if i == 0 {
                layer.indrnn.input_weights.clone()
            } else {
                let full = &layer.indrnn.input_weights;
                let offset = f0 + (i - 1) * h;
                let mut rows = Vec::with_capacity(h);
                for r in offset..offset + h {
                    rows.push(
                        (0..h).map(|c| full.at2(r, c)).collect::<Vec<f64>>(),
                    );
                }
                Tensor::from_rows(&rows)
            };
            let sub = crate::layers::IndRnnParams {
                input_weights: sub_weights,
                recurrent_weights: layer.indrnn.recurrent_weights.clone(),
                hidden_bias: layer.indrnn.hidden_bias.clone(),
                output_weights: layer.indrnn.output_weights.clone(),
                output_bias: layer.indrnn.output_bias.clone(),
            };
            let y = crate::layers::indrnn_infer(&cur, &sub, Activation::Relu, Activation::Relu)
                .unwrap();
            let (bn_out, _) =
                crate::layers::batchnorm_apply(&y, &mut layer.bn, Mode::Infer).unwrap();
            cur = bn_out;
        }
        assert_eq!(severed_y, cur);
    }

    #[test]
    fn forward_shapes_trace_small_model() {
        let spec = ModelSpec {
            fc_hidden: 10,
            ..ModelSpec::uniform(Variant::Adindrnn, 3, 2, 2, &[4, 6])
        };
        let mut params = build_model::<f64>(&spec, 5).unwrap();
        let x = random_input(2, 3, 16, 3);
        let out = model_forward(&mut params, &x, Mode::Infer).unwrap();
        assert_eq!(out.logits.shape(), &[3, 2]);
        let shapes: Vec<(&str, &[usize])> = out
            .trace
            .iter()
            .map(|s| (s.stage.as_str(), s.shape.as_slice()))
            .collect();
        assert_eq!(
            shapes,
            vec![
                ("input", &[3, 16, 3][..]),
                ("attention", &[3, 16, 3][..]),
                ("block0", &[3, 16, 4][..]),
                ("pool0", &[3, 8, 4][..]),
                ("block1", &[3, 8, 6][..]),
                ("pool1", &[3, 4, 6][..]),
                ("avgpool", &[3, 6][..]),
                ("fc1", &[3, 10][..]),
                ("fc2", &[3, 2][..]),
            ]
        );
    }

    #[test]
    fn smallest_legal_input_produces_logits() {
        let spec = ModelSpec {
            fc_hidden: 3,
            ..ModelSpec::uniform(Variant::Adindrnn, 2, 1, 1, &[2])
        };
        let mut params = build_model::<f64>(&spec, 2).unwrap();
        let x = random_input(9, 1, 2, 2);
        let out = model_forward(&mut params, &x, Mode::Infer).unwrap();
        assert_eq!(out.logits.shape(), &[1, 2]);
    }

    #[test]
    fn infer_is_pure_and_batch_independent() {
        let spec = ModelSpec {
            fc_hidden: 8,
            ..ModelSpec::uniform(Variant::Adindrnn, 3, 2, 2, &[4, 5])
        };
        let mut params = build_model::<f64>(&spec, 31).unwrap();
        let single = random_input(17, 1, 16, 3);
        // Batch of three identical samples.
        let mut data = Vec::new();
        for _ in 0..3 {
            data.extend_from_slice(single.data());
        }
        let batch = Tensor::new(vec![3, 16, 3], data).unwrap();

        let before = params.clone();
        let out1 = model_forward(&mut params, &batch, Mode::Infer).unwrap();
        let out2 = model_forward(&mut params, &batch, Mode::Infer).unwrap();
        assert_eq!(params, before, "inference must not mutate parameters");
        assert_eq!(out1.logits, out2.logits, "inference is deterministic");

        let rows = out1.logits.data().chunks_exact(2).collect::<Vec<_>>();
        assert_eq!(rows[0], rows[1]);
        assert_eq!(rows[1], rows[2]);
    }

    #[test]
    fn plain_variant_pools_after_every_layer() {
        let spec = ModelSpec {
            fc_hidden: 4,
            ..ModelSpec::uniform(Variant::Indrnn, 3, 1, 3, &[4])
        };
        let mut params = build_model::<f64>(&spec, 3).unwrap();
        let x = random_input(4, 2, 16, 3);
        let out = model_forward(&mut params, &x, Mode::Infer).unwrap();
        let pools: Vec<&StageShape> = out
            .trace
            .iter()
            .filter(|s| s.stage.ends_with(".pool"))
            .collect();
        assert_eq!(pools.len(), 3);
        assert_eq!(pools[0].shape, vec![2, 8, 4]);
        assert_eq!(pools[1].shape, vec![2, 4, 4]);
        assert_eq!(pools[2].shape, vec![2, 2, 4]);
    }

    #[test]
    fn rejects_channel_mismatch_and_short_sequences() {
        let spec = ModelSpec::uniform(Variant::Adindrnn, 3, 2, 2, &[4, 5]);
        let mut params = build_model::<f64>(&spec, 1).unwrap();
        let bad_channels = random_input(0, 1, 16, 4);
        assert!(matches!(
            model_forward(&mut params, &bad_channels, Mode::Infer),
            Err(ModelError::ChannelMismatch { input: 4, expected: 3 })
        ));
        let too_short = random_input(0, 1, 3, 3);
        assert!(matches!(
            model_forward(&mut params, &too_short, Mode::Infer),
            Err(ModelError::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn attention_weight_extraction() {
        let spec = ModelSpec::uniform(Variant::Adindrnn, 4, 1, 1, &[3]);
        let mut params = build_model::<f64>(&spec, 8).unwrap();
        // Zero kernel and bias: exactly uniform weights.
        params.attention = Some(crate::layers::AttentionParams {
            kernel: Tensor::zeros(vec![4, 4]),
            bias: Tensor::zeros(vec![4]),
        });
        let x = random_input(3, 3, 6, 4);
        let w = extract_attention_weights(&params, &x).unwrap();
        assert!(w.data().iter().all(|&v| v == 0.25));

        let plain = build_model::<f64>(
            &ModelSpec::uniform(Variant::Indrnn, 4, 1, 1, &[3]),
            8,
        )
        .unwrap();
        assert!(matches!(
            extract_attention_weights(&plain, &x),
            Err(ModelError::NoAttention)
        ));

        // Two different segments generally get different weight vectors.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let kernel_data: Vec<f64> = (0..16).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let mut params = params;
        params.attention = Some(crate::layers::AttentionParams {
            kernel: Tensor::new(vec![4, 4], kernel_data).unwrap(),
            bias: Tensor::zeros(vec![4]),
        });
        let w = extract_attention_weights(&params, &x).unwrap();
        let row0: Vec<f64> = (0..4).map(|c| w.at2(0, c)).collect();
        let row1: Vec<f64> = (0..4).map(|c| w.at2(1, c)).collect();
        assert_ne!(row0, row1);
        for s in 0..3 {
            let sum: f64 = (0..4).map(|c| w.at2(s, c)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
