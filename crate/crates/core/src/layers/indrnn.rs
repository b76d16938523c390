//! Independently recurrent layer. Each hidden unit recurs only on itself
//! through a per-unit scalar weight (a Hadamard product with the previous
//! hidden state), never a full recurrent matrix, which is what lets these
//! layers stack deeply. A trained linear projection with its own activation
//! produces the per-step outputs.

use super::{add_bias_rows, column_sums, Activation, LayerError};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct IndRnnParams<T> {
    /// `[n_fe, n_hid]`
    pub input_weights: Tensor<T>,
    /// One recurrence scalar per hidden unit, `[n_hid]`.
    pub recurrent_weights: Tensor<T>,
    /// `[n_hid]`
    pub hidden_bias: Tensor<T>,
    /// `[n_hid, n_hid]`
    pub output_weights: Tensor<T>,
    /// `[n_hid]`
    pub output_bias: Tensor<T>,
}

impl<T: Scalar> IndRnnParams<T> {
    pub fn n_features(&self) -> usize {
        self.input_weights.shape()[0]
    }

    pub fn state_size(&self) -> usize {
        self.input_weights.shape()[1]
    }
}

#[derive(Clone, Debug)]
pub struct IndRnnCache<T> {
    input: Tensor<T>,
    hidden_pre: Tensor<T>,
    hidden: Tensor<T>,
    output_pre: Tensor<T>,
    act_hidden: Activation,
    act_out: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndRnnGrads<T> {
    pub input_weights: Tensor<T>,
    pub recurrent_weights: Tensor<T>,
    pub hidden_bias: Tensor<T>,
    pub output_weights: Tensor<T>,
    pub output_bias: Tensor<T>,
}

/// Runs the recurrence over a `[n_sm, steps, n_fe]` sequence with the hidden
/// state starting at zero:
///
/// ```text
/// h_t = act_hidden(x_t . W_in + h_{t-1} (*) u + b_hid)
/// y_t = act_out(h_t . W_out + b_out)
/// ```
pub fn indrnn_forward<T: Scalar>(
    x_seq: &Tensor<T>,
    p: &IndRnnParams<T>,
    act_hidden: Activation,
    act_out: Activation,
) -> Result<(Tensor<T>, IndRnnCache<T>), LayerError> {
    let (n_sm, steps, n_fe) = x_seq.dims3()?;
    if n_fe != p.n_features() {
        return Err(LayerError::FeatureMismatch {
            input: n_fe,
            expected: p.n_features(),
        });
    }
    let n_hid = p.state_size();
    let u = p.recurrent_weights.data();

    let mut hidden_pre = Tensor::zeros(vec![n_sm, steps, n_hid]);
    let mut hidden = Tensor::zeros(vec![n_sm, steps, n_hid]);
    let mut output_pre = Tensor::zeros(vec![n_sm, steps, n_hid]);
    let mut y_seq = Tensor::zeros(vec![n_sm, steps, n_hid]);

    let mut h_prev = Tensor::zeros(vec![n_sm, n_hid]);
    for t in 0..steps {
        let x_t = x_seq.time_slice(t)?;
        let mut pre = add_bias_rows(&x_t.matmul(&p.input_weights)?, &p.hidden_bias);
        for (row_pre, row_prev) in pre
            .data_mut()
            .chunks_exact_mut(n_hid)
            .zip(h_prev.data().chunks_exact(n_hid))
        {
            for ((v, &hp), &uw) in row_pre.iter_mut().zip(row_prev).zip(u) {
                *v = *v + hp * uw;
            }
        }
        let h_t = pre.map(|z| act_hidden.apply(z));
        let out_pre = add_bias_rows(&h_t.matmul(&p.output_weights)?, &p.output_bias);
        let y_t = out_pre.map(|z| act_out.apply(z));

        write_step(&mut hidden_pre, t, &pre);
        write_step(&mut hidden, t, &h_t);
        write_step(&mut output_pre, t, &out_pre);
        write_step(&mut y_seq, t, &y_t);
        h_prev = h_t;
    }

    let cache = IndRnnCache {
        input: x_seq.clone(),
        hidden_pre,
        hidden,
        output_pre,
        act_hidden,
        act_out,
    };
    Ok((y_seq, cache))
}

/// Cache-free forward pass for inference; keeps only the previous hidden
/// state in memory instead of the full per-step sequences.
pub fn indrnn_infer<T: Scalar>(
    x_seq: &Tensor<T>,
    p: &IndRnnParams<T>,
    act_hidden: Activation,
    act_out: Activation,
) -> Result<Tensor<T>, LayerError> {
    let (n_sm, steps, n_fe) = x_seq.dims3()?;
    if n_fe != p.n_features() {
        return Err(LayerError::FeatureMismatch {
            input: n_fe,
            expected: p.n_features(),
        });
    }
    let n_hid = p.state_size();
    let u = p.recurrent_weights.data();
    let mut y_seq = Tensor::zeros(vec![n_sm, steps, n_hid]);
    let mut h_prev = Tensor::zeros(vec![n_sm, n_hid]);
    for t in 0..steps {
        let x_t = x_seq.time_slice(t)?;
        let mut pre = add_bias_rows(&x_t.matmul(&p.input_weights)?, &p.hidden_bias);
        for (row_pre, row_prev) in pre
            .data_mut()
            .chunks_exact_mut(n_hid)
            .zip(h_prev.data().chunks_exact(n_hid))
        {
            for ((v, &hp), &uw) in row_pre.iter_mut().zip(row_prev).zip(u) {
                *v = *v + hp * uw;
            }
        }
        let h_t = pre.map(|z| act_hidden.apply(z));
        let out_pre = add_bias_rows(&h_t.matmul(&p.output_weights)?, &p.output_bias);
        let y_t = out_pre.map(|z| act_out.apply(z));
        write_step(&mut y_seq, t, &y_t);
        h_prev = h_t;
    }
    Ok(y_seq)
}

/// Backward pass; runs the recurrence in reverse time, carrying the hidden
/// gradient through the per-unit recurrent weights.
pub fn indrnn_backward<T: Scalar>(
    cache: &IndRnnCache<T>,
    p: &IndRnnParams<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, IndRnnGrads<T>), LayerError> {
    let (n_sm, steps, n_fe) = cache.input.dims3()?;
    let n_hid = p.state_size();
    if upstream.shape() != [n_sm, steps, n_hid] {
        return Err(LayerError::GradShapeMismatch {
            cached: vec![n_sm, steps, n_hid],
            upstream: upstream.shape().to_vec(),
        });
    }

    let mut d_input = Tensor::zeros(vec![n_sm, steps, n_fe]);
    let mut g = IndRnnGrads {
        input_weights: Tensor::zeros(vec![n_fe, n_hid]),
        recurrent_weights: Tensor::zeros(vec![n_hid]),
        hidden_bias: Tensor::zeros(vec![n_hid]),
        output_weights: Tensor::zeros(vec![n_hid, n_hid]),
        output_bias: Tensor::zeros(vec![n_hid]),
    };
    let w_in_t = p.input_weights.transpose()?;
    let w_out_t = p.output_weights.transpose()?;
    let u = p.recurrent_weights.data();

    // Gradient flowing into h_t from step t+1 via the recurrence.
    let mut carry = Tensor::<T>::zeros(vec![n_sm, n_hid]);
    for t in (0..steps).rev() {
        let d_y = upstream.time_slice(t)?;
        let out_pre = cache.output_pre.time_slice(t)?;
        let mut d_out_pre = d_y;
        for (v, &z) in d_out_pre.data_mut().iter_mut().zip(out_pre.data()) {
            *v = *v * cache.act_out.grad(z);
        }

        let h_t = cache.hidden.time_slice(t)?;
        g.output_weights
            .add_assign(&h_t.transpose()?.matmul(&d_out_pre)?);
        g.output_bias.add_assign(&column_sums(&d_out_pre));

        let mut d_h = d_out_pre.matmul(&w_out_t)?;
        d_h.add_assign(&carry);

        let hidden_pre = cache.hidden_pre.time_slice(t)?;
        let mut d_pre = d_h;
        for (v, &z) in d_pre.data_mut().iter_mut().zip(hidden_pre.data()) {
            *v = *v * cache.act_hidden.grad(z);
        }

        let x_t = cache.input.time_slice(t)?;
        g.input_weights
            .add_assign(&x_t.transpose()?.matmul(&d_pre)?);
        g.hidden_bias.add_assign(&column_sums(&d_pre));
        if t > 0 {
            let h_prev = cache.hidden.time_slice(t - 1)?;
            let du = g.recurrent_weights.data_mut();
            for (row_d, row_h) in d_pre
                .data()
                .chunks_exact(n_hid)
                .zip(h_prev.data().chunks_exact(n_hid))
            {
                for ((dv, &d), &h) in du.iter_mut().zip(row_d).zip(row_h) {
                    *dv = *dv + d * h;
                }
            }
        }

        // Route into the input and into the previous hidden state.
        let d_x = d_pre.matmul(&w_in_t)?;
        write_step(&mut d_input, t, &d_x);
        let mut next_carry = d_pre;
        for row in next_carry.data_mut().chunks_exact_mut(n_hid) {
            for (v, &uw) in row.iter_mut().zip(u) {
                *v = *v * uw;
            }
        }
        carry = next_carry;
    }

    Ok((d_input, g))
}

fn write_step<T: Scalar>(seq: &mut Tensor<T>, t: usize, step: &Tensor<T>) {
    let (n_sm, steps, f) = seq.dims3().expect("rank-3 sequence");
    debug_assert_eq!(step.shape(), &[n_sm, f]);
    for s in 0..n_sm {
        let base = (s * steps + t) * f;
        let src = &step.data()[s * f..(s + 1) * f];
        seq.data_mut()[base..base + f].copy_from_slice(src);
    }
}
