//! Backpropagation through time across all timesteps and layers, including
//! the dropout masks and the dense head.

use ndarray::Array1;

use super::cell::Gate;
use super::{ForwardCache, LstmStack, StackGradients};
use crate::error::{Error, Result};

fn accumulate_gate(grads: &mut Gate, dz: &Array1<f64>, h_prev: &Array1<f64>, x: &Array1<f64>) {
    let hn = h_prev.len();
    let xn = x.len();
    let w_h = grads.w_h.as_slice_mut().expect("standard layout");
    let w_x = grads.w_x.as_slice_mut().expect("standard layout");
    for (r, &dzr) in dz.iter().enumerate() {
        for (slot, &hv) in w_h[r * hn..(r + 1) * hn].iter_mut().zip(h_prev) {
            *slot += dzr * hv;
        }
        for (slot, &xv) in w_x[r * xn..(r + 1) * xn].iter_mut().zip(x) {
            *slot += dzr * xv;
        }
        grads.b[r] += dzr;
    }
}

/// `out += W^T . dz` without allocating.
fn add_transposed_matvec(w: &ndarray::Array2<f64>, dz: &Array1<f64>, out: &mut [f64]) {
    let cols = out.len();
    let w = w.as_slice().expect("standard layout");
    for (r, &dzr) in dz.iter().enumerate() {
        for (slot, &wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *slot += dzr * wv;
        }
    }
}

/// Gradients of the scalar prediction's loss with respect to every stack
/// parameter, given the cache of a matching forward pass and the loss
/// gradient `dL/dprediction`.
pub fn backward(stack: &LstmStack, cache: &ForwardCache, loss_grad: f64) -> Result<StackGradients> {
    if cache.layers.len() != stack.layers.len() {
        return Err(Error::DimensionMismatch(format!(
            "cache has {} layer traces, stack has {} layers",
            cache.layers.len(),
            stack.layers.len()
        )));
    }
    let steps = cache.layers[0].steps.len();
    for (layer, trace) in stack.layers.iter().zip(&cache.layers) {
        if trace.steps.len() != steps || trace.masks.len() != steps {
            return Err(Error::DimensionMismatch(
                "cache timestep counts disagree across layers".to_string(),
            ));
        }
        if trace.steps[0].f.len() != layer.units || trace.steps[0].x.len() != layer.input_size {
            return Err(Error::DimensionMismatch(
                "cache shapes disagree with stack parameters".to_string(),
            ));
        }
    }

    let mut grads = stack.zero_gradients();

    // dense head: prediction = dense_w . top_input + dense_b
    let top_input = cache
        .layers
        .last()
        .and_then(|trace| trace.dropped.last())
        .expect("nonempty cache");
    grads.dense_w = top_input * loss_grad;
    grads.dense_b = loss_grad;

    // gradient wrt each layer's post-dropout outputs; only the last
    // timestep of the top layer receives a contribution from the head
    let top_units = stack.layers.last().expect("nonempty stack").units;
    let mut d_dropped: Vec<Array1<f64>> = vec![Array1::zeros(top_units); steps];
    d_dropped[steps - 1] = &stack.dense_w * loss_grad;

    for idx in (0..stack.layers.len()).rev() {
        let layer = &stack.layers[idx];
        let trace = &cache.layers[idx];
        let layer_grads = &mut grads.layers[idx];

        let mut d_below: Vec<Array1<f64>> = if idx > 0 {
            vec![Array1::zeros(stack.layers[idx - 1].units); steps]
        } else {
            Vec::new()
        };

        let mut dh_carry: Array1<f64> = Array1::zeros(layer.units);
        let mut dc_carry: Array1<f64> = Array1::zeros(layer.units);
        for t in (0..steps).rev() {
            let step = &trace.steps[t];
            // post-dropout output = mask * h
            let dh = &d_dropped[t] * &trace.masks[t] + &dh_carry;

            let d_o = &dh * &step.tanh_c;
            let dc = &dc_carry + &(&dh * &step.o * &step.tanh_c.mapv(|v| 1.0 - v * v));
            let d_f = &dc * &step.c_prev;
            let d_i = &dc * &step.ctilde;
            let d_ctilde = &dc * &step.i;

            let dz_f = &d_f * &step.f.mapv(|v| v * (1.0 - v));
            let dz_i = &d_i * &step.i.mapv(|v| v * (1.0 - v));
            let dz_c = &d_ctilde * &step.ctilde.mapv(|v| 1.0 - v * v);
            let dz_o = &d_o * &step.o.mapv(|v| v * (1.0 - v));

            accumulate_gate(&mut layer_grads.forget, &dz_f, &step.h_prev, &step.x);
            accumulate_gate(&mut layer_grads.input, &dz_i, &step.h_prev, &step.x);
            accumulate_gate(&mut layer_grads.candidate, &dz_c, &step.h_prev, &step.x);
            accumulate_gate(&mut layer_grads.output, &dz_o, &step.h_prev, &step.x);

            dh_carry.fill(0.0);
            let carry = dh_carry.as_slice_mut().expect("standard layout");
            add_transposed_matvec(&layer.forget.w_h, &dz_f, carry);
            add_transposed_matvec(&layer.input.w_h, &dz_i, carry);
            add_transposed_matvec(&layer.candidate.w_h, &dz_c, carry);
            add_transposed_matvec(&layer.output.w_h, &dz_o, carry);
            dc_carry = &dc * &step.f;

            if idx > 0 {
                let below = d_below[t].as_slice_mut().expect("standard layout");
                add_transposed_matvec(&layer.forget.w_x, &dz_f, below);
                add_transposed_matvec(&layer.input.w_x, &dz_i, below);
                add_transposed_matvec(&layer.candidate.w_x, &dz_c, below);
                add_transposed_matvec(&layer.output.w_x, &dz_o, below);
            }
        }
        if idx > 0 {
            d_dropped = d_below;
        }
    }

    Ok(grads)
}
