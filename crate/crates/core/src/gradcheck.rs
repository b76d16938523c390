//! Central finite-difference validation of every analytic gradient. Each
//! check builds a small random instance, takes a scalar loss of the layer
//! output, and compares the backward pass against `(f(x+h) - f(x-h)) / 2h`
//! coordinate by coordinate. The probes only ever call the forward path, so
//! they stay independent of the gradient code they validate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::layers::{
    attention_backward, attention_forward, avgpool_backward, avgpool_time, batchnorm_apply,
    batchnorm_backward, fc_backward, fc_forward, indrnn_backward, indrnn_forward, maxpool_backward,
    maxpool_time, Activation, AttentionParams, BatchNormParams, FcParams, IndRnnParams, Mode,
};
use crate::model::{build_model, model_backward, model_forward, ModelParams, ModelSpec, Variant};
use crate::tensor::Tensor;
use crate::training::compute_loss;

pub const DEFAULT_TOLERANCE: f64 = 1e-5;
const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub name: String,
    pub seed: u64,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Worst relative error over every coordinate of one tensor, probing the
/// scalar loss with central differences.
fn probe<P: Clone>(
    base: &P,
    analytic: &Tensor<f64>,
    loss: &dyn Fn(&P) -> f64,
    write: &dyn Fn(&mut P, usize, f64),
) -> f64 {
    let mut worst = 0.0f64;
    for idx in 0..analytic.len() {
        let mut plus = base.clone();
        write(&mut plus, idx, FD_STEP);
        let mut minus = base.clone();
        write(&mut minus, idx, -FD_STEP);
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
        worst = worst.max(rel_error(analytic.data()[idx], numeric));
    }
    worst
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>, lo: f64, hi: f64) -> Tensor<f64> {
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::new(shape, data).expect("positive extents")
}

/// Weighted sum of the output tensor: a scalar loss whose output gradient is
/// exactly the weight tensor.
fn weighted_sum(y: &Tensor<f64>, w: &Tensor<f64>) -> f64 {
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

pub fn check_attention(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_sm, n_sp, n_ch) = (2, 3, 4);
    let x = random_tensor(&mut rng, vec![n_sm, n_sp, n_ch], -1.5, 1.5);
    let params = AttentionParams {
        kernel: random_tensor(&mut rng, vec![n_ch, n_ch], -0.5, 0.5),
        bias: random_tensor(&mut rng, vec![n_ch], -0.3, 0.3),
    };
    let w = random_tensor(&mut rng, vec![n_sm, n_sp, n_ch], -1.0, 1.0);

    type P = (Tensor<f64>, AttentionParams<f64>);
    let base: P = (x, params);
    let loss = {
        let w = w.clone();
        move |p: &P| {
            let (y, _, _) = attention_forward(&p.0, &p.1).unwrap();
            weighted_sum(&y, &w)
        }
    };
    let (_, _, cache) = attention_forward(&base.0, &base.1).unwrap();
    let (d_input, grads) = attention_backward(&cache, &base.1, &w).unwrap();

    let mut worst = probe(&base, &d_input, &loss, &|p, i, d| {
        p.0.data_mut()[i] += d;
    });
    worst = worst.max(probe(&base, &grads.kernel, &loss, &|p, i, d| {
        p.1.kernel.data_mut()[i] += d;
    }));
    worst = worst.max(probe(&base, &grads.bias, &loss, &|p, i, d| {
        p.1.bias.data_mut()[i] += d;
    }));
    GradCheckReport {
        name: "attention".into(),
        seed,
        max_rel_error: worst,
        tolerance,
    }
}

pub fn check_indrnn(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_sm, steps, n_fe, n_hid) = (2, 5, 3, 4);
    let x = random_tensor(&mut rng, vec![n_sm, steps, n_fe], -1.0, 1.0);
    let params = IndRnnParams {
        input_weights: random_tensor(&mut rng, vec![n_fe, n_hid], -0.7, 0.7),
        recurrent_weights: random_tensor(&mut rng, vec![n_hid], 0.0, 1.0),
        hidden_bias: random_tensor(&mut rng, vec![n_hid], -0.2, 0.2),
        output_weights: random_tensor(&mut rng, vec![n_hid, n_hid], -0.7, 0.7),
        output_bias: random_tensor(&mut rng, vec![n_hid], -0.2, 0.2),
    };
    let w = random_tensor(&mut rng, vec![n_sm, steps, n_hid], -1.0, 1.0);
    let (act_h, act_o) = (Activation::Relu, Activation::Relu);

    type P = (Tensor<f64>, IndRnnParams<f64>);
    let base: P = (x, params);
    let loss = {
        let w = w.clone();
        move |p: &P| {
            let (y, _) = indrnn_forward(&p.0, &p.1, act_h, act_o).unwrap();
            weighted_sum(&y, &w)
        }
    };
    let (_, cache) = indrnn_forward(&base.0, &base.1, act_h, act_o).unwrap();
    let (d_input, grads) = indrnn_backward(&cache, &base.1, &w).unwrap();

    let mut worst = probe(&base, &d_input, &loss, &|p, i, d| {
        p.0.data_mut()[i] += d;
    });
    let param_probes: [(&Tensor<f64>, &dyn Fn(&mut P, usize, f64)); 5] = [
        (&grads.input_weights, &|p, i, d| {
            p.1.input_weights.data_mut()[i] += d
        }),
        (&grads.recurrent_weights, &|p, i, d| {
            p.1.recurrent_weights.data_mut()[i] += d
        }),
        (&grads.hidden_bias, &|p, i, d| {
            p.1.hidden_bias.data_mut()[i] += d
        }),
        (&grads.output_weights, &|p, i, d| {
            p.1.output_weights.data_mut()[i] += d
        }),
        (&grads.output_bias, &|p, i, d| {
            p.1.output_bias.data_mut()[i] += d
        }),
    ];
    for (analytic, write) in param_probes {
        worst = worst.max(probe(&base, analytic, &loss, write));
    }
    GradCheckReport {
        name: "indrnn".into(),
        seed,
        max_rel_error: worst,
        tolerance,
    }
}

pub fn check_batchnorm(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_sm, steps, n_feat) = (3, 4, 3);
    let x = random_tensor(&mut rng, vec![n_sm, steps, n_feat], -2.0, 2.0);
    let mut params = BatchNormParams::<f64>::new(n_feat, 1e-5, 0.9);
    params.gamma = random_tensor(&mut rng, vec![n_feat], 0.5, 1.5);
    params.beta = random_tensor(&mut rng, vec![n_feat], -0.5, 0.5);
    let w = random_tensor(&mut rng, vec![n_sm, steps, n_feat], -1.0, 1.0);

    type P = (Tensor<f64>, BatchNormParams<f64>);
    let base: P = (x, params);
    let loss = {
        let w = w.clone();
        move |p: &P| {
            let mut bn = p.1.clone();
            let (y, _) = batchnorm_apply(&p.0, &mut bn, Mode::Train).unwrap();
            weighted_sum(&y, &w)
        }
    };
    let mut bn = base.1.clone();
    let (_, cache) = batchnorm_apply(&base.0, &mut bn, Mode::Train).unwrap();
    let (d_input, grads) = batchnorm_backward(&cache.unwrap(), &base.1, &w).unwrap();

    let mut worst = probe(&base, &d_input, &loss, &|p, i, d| {
        p.0.data_mut()[i] += d;
    });
    worst = worst.max(probe(&base, &grads.gamma, &loss, &|p, i, d| {
        p.1.gamma.data_mut()[i] += d;
    }));
    worst = worst.max(probe(&base, &grads.beta, &loss, &|p, i, d| {
        p.1.beta.data_mut()[i] += d;
    }));
    GradCheckReport {
        name: "batchnorm".into(),
        seed,
        max_rel_error: worst,
        tolerance,
    }
}

pub fn check_fc(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, n_in, n_out) = (3, 4, 5);
    let x = random_tensor(&mut rng, vec![n, n_in], -1.0, 1.0);
    let params = FcParams {
        weights: random_tensor(&mut rng, vec![n_in, n_out], -0.8, 0.8),
        bias: random_tensor(&mut rng, vec![n_out], -0.3, 0.3),
    };
    let w = random_tensor(&mut rng, vec![n, n_out], -1.0, 1.0);
    let act = Activation::Relu;

    type P = (Tensor<f64>, FcParams<f64>);
    let base: P = (x, params);
    let loss = {
        let w = w.clone();
        move |p: &P| {
            let (y, _) = fc_forward(&p.0, &p.1, act).unwrap();
            weighted_sum(&y, &w)
        }
    };
    let (_, cache) = fc_forward(&base.0, &base.1, act).unwrap();
    let (d_input, grads) = fc_backward(&cache, &base.1, &w).unwrap();

    let mut worst = probe(&base, &d_input, &loss, &|p, i, d| {
        p.0.data_mut()[i] += d;
    });
    worst = worst.max(probe(&base, &grads.weights, &loss, &|p, i, d| {
        p.1.weights.data_mut()[i] += d;
    }));
    worst = worst.max(probe(&base, &grads.bias, &loss, &|p, i, d| {
        p.1.bias.data_mut()[i] += d;
    }));
    GradCheckReport {
        name: "fc".into(),
        seed,
        max_rel_error: worst,
        tolerance,
    }
}

pub fn check_maxpool(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&mut rng, vec![2, 6, 3], -1.0, 1.0);
    let (y, cache) = maxpool_time(&x, 2, 2).unwrap();
    let w = random_tensor(&mut rng, vec![2, y.shape()[1], 3], -1.0, 1.0);
    let d_input = maxpool_backward(&cache, &w).unwrap();
    let loss = {
        let w = w.clone();
        move |x: &Tensor<f64>| {
            let (y, _) = maxpool_time(x, 2, 2).unwrap();
            weighted_sum(&y, &w)
        }
    };
    let worst = probe(&x, &d_input, &loss, &|x, i, d| {
        x.data_mut()[i] += d;
    });
    GradCheckReport {
        name: "maxpool".into(),
        seed,
        max_rel_error: worst,
        tolerance,
    }
}

pub fn check_avgpool(seed: u64, tolerance: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&mut rng, vec![2, 5, 3], -1.0, 1.0);
    let (_, cache) = avgpool_time(&x).unwrap();
    let w = random_tensor(&mut rng, vec![2, 3], -1.0, 1.0);
    let d_input = avgpool_backward(&cache, &w).unwrap();
    let loss = {
        let w = w.clone();
        move |x: &Tensor<f64>| {
            let (y, _) = avgpool_time(x).unwrap();
            weighted_sum(&y, &w)
        }
    };
    let worst = probe(&x, &d_input, &loss, &|x, i, d| {
        x.data_mut()[i] += d;
    });
    GradCheckReport {
        name: "avgpool".into(),
        seed,
        max_rel_error: worst,
        tolerance,
    }
}

/// Tiny two-block attention+dense model with the full training loss
/// (cross-entropy plus weight decay), checked end to end: every trainable
/// tensor and the input.
pub fn check_model(seed: u64, tolerance: f64) -> GradCheckReport {
    let spec = ModelSpec {
        fc_hidden: 6,
        ..ModelSpec::uniform(Variant::Adindrnn, 3, 2, 1, &[4, 4])
    };
    let mut params = build_model::<f64>(&spec, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    // The freshly built model sits exactly on ReLU kinks (zero biases, zero
    // initial hidden state), where the loss is not differentiable and
    // central differences average the one-sided slopes. Jitter every
    // trainable tensor to probe at a generic point.
    for (_, tensor) in params.trainable_mut() {
        for v in tensor.data_mut() {
            *v += rng.gen_range(-0.2..0.2);
        }
    }
    let x = random_tensor(&mut rng, vec![2, 8, 3], -1.0, 1.0);
    let labels = vec![0usize, 1];
    let wd = 0.01;

    let loss_of = {
        let x = x.clone();
        let labels = labels.clone();
        move |p: &ModelParams<f64>| {
            let mut p = p.clone();
            let out = model_forward(&mut p, &x, Mode::Train).unwrap();
            let (loss, _) = compute_loss(&out.logits, &labels, &p, wd).unwrap();
            loss
        }
    };

    let mut work = params.clone();
    let out = model_forward(&mut work, &x, Mode::Train).unwrap();
    let (_, d_logits) = compute_loss(&out.logits, &labels, &work, wd).unwrap();
    let caches = out.caches.expect("train mode");
    let (mut grads, d_input) = model_backward(&params, &caches, &d_logits).unwrap();
    grads.add_l2_term(&params, wd);

    let mut worst = 0.0f64;
    let analytic = grads.trainable();
    let n_tensors = analytic.len();
    for ti in 0..n_tensors {
        let (gname, gtensor) = &analytic[ti];
        debug_assert_eq!(*gname, params.trainable()[ti].0);
        worst = worst.max(probe(&params, gtensor, &loss_of, &|p, i, d| {
            p.trainable_mut()[ti].1.data_mut()[i] += d;
        }));
    }

    // Input gradient through the whole stack.
    type WithInput = (ModelParams<f64>, Tensor<f64>);
    let base: WithInput = (params, x);
    let loss_of_input = {
        let labels = labels.clone();
        move |p: &WithInput| {
            let mut m = p.0.clone();
            let out = model_forward(&mut m, &p.1, Mode::Train).unwrap();
            let (loss, _) = compute_loss(&out.logits, &labels, &m, wd).unwrap();
            loss
        }
    };
    worst = worst.max(probe(&base, &d_input, &loss_of_input, &|p, i, d| {
        p.1.data_mut()[i] += d;
    }));

    GradCheckReport {
        name: "model-2block".into(),
        seed,
        max_rel_error: worst,
        tolerance,
    }
}

/// Every layer check plus the end-to-end model check for one seed.
pub fn run_checks(seed: u64, tolerance: f64) -> Vec<GradCheckReport> {
    vec![
        check_attention(seed, tolerance),
        check_indrnn(seed, tolerance),
        check_batchnorm(seed, tolerance),
        check_fc(seed, tolerance),
        check_maxpool(seed, tolerance),
        check_avgpool(seed, tolerance),
        check_model(seed, tolerance),
    ]
}

/// The full suite across several seeds.
pub fn run_full_suite(seeds: &[u64], tolerance: f64) -> Vec<GradCheckReport> {
    seeds
        .iter()
        .flat_map(|&s| run_checks(s, tolerance))
        .collect()
}
