//! Single LSTM cell with a forget gate.
//!
//! ```text
//! f_t = sigmoid(W_fh h_{t-1} + W_fx x_t + b_f)
//! i_t = sigmoid(W_ih h_{t-1} + W_ix x_t + b_i)
//! c~_t = tanh(W_ch h_{t-1} + W_cx x_t + b_c)
//! c_t = f_t * c_{t-1} + i_t * c~_t
//! o_t = sigmoid(W_oh h_{t-1} + W_ox x_t + b_o)
//! h_t = o_t * tanh(c_t)
//! ```

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One gate's weights: recurrent (units x units), input (units x input
/// size), and bias (units).
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub w_h: Array2<f64>,
    pub w_x: Array2<f64>,
    pub b: Array1<f64>,
}

impl Gate {
    pub(crate) fn zeros(units: usize, input_size: usize) -> Self {
        Self {
            w_h: Array2::zeros((units, units)),
            w_x: Array2::zeros((units, input_size)),
            b: Array1::zeros(units),
        }
    }

    fn affine_into(&self, h_prev: &[f64], x: &[f64], out: &mut [f64]) {
        let w_h = self.w_h.as_slice().expect("standard layout");
        let w_x = self.w_x.as_slice().expect("standard layout");
        let units = out.len();
        let hn = h_prev.len();
        let xn = x.len();
        for (r, slot) in out.iter_mut().enumerate() {
            let mut z = self.b[r];
            let row = &w_h[r * hn..(r + 1) * hn];
            for (w, h) in row.iter().zip(h_prev) {
                z += w * h;
            }
            let row = &w_x[r * xn..(r + 1) * xn];
            for (w, v) in row.iter().zip(x) {
                z += w * v;
            }
            *slot = z;
        }
        debug_assert_eq!(units, self.b.len());
    }
}

/// Weights for one LSTM layer: the four gates (forget, input, candidate,
/// output) described above.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub units: usize,
    pub input_size: usize,
    pub forget: Gate,
    pub input: Gate,
    pub candidate: Gate,
    pub output: Gate,
}

impl LstmLayerParams {
    pub fn zeros(units: usize, input_size: usize) -> Self {
        Self {
            units,
            input_size,
            forget: Gate::zeros(units, input_size),
            input: Gate::zeros(units, input_size),
            candidate: Gate::zeros(units, input_size),
            output: Gate::zeros(units, input_size),
        }
    }

    pub(crate) fn gates(&self) -> [&Gate; 4] {
        [&self.forget, &self.input, &self.candidate, &self.output]
    }

    /// Flat mutable views over every tensor, in a fixed order shared with
    /// the gradient and optimizer-state containers.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(12);
        for gate in [
            &mut self.forget,
            &mut self.input,
            &mut self.candidate,
            &mut self.output,
        ] {
            out.push(gate.w_h.as_slice_mut().expect("standard layout"));
            out.push(gate.w_x.as_slice_mut().expect("standard layout"));
            out.push(gate.b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Flat views over every tensor, in the same fixed order as
    /// [`LstmLayerParams::tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(12);
        for gate in self.gates() {
            out.push(gate.w_h.as_slice().expect("standard layout"));
            out.push(gate.w_x.as_slice().expect("standard layout"));
            out.push(gate.b.as_slice().expect("standard layout"));
        }
        out
    }

    fn check_dims(&self, x: &Array1<f64>, prev: &CellState) -> Result<()> {
        if x.len() != self.input_size {
            return Err(Error::DimensionMismatch(format!(
                "input length {} vs layer input size {}",
                x.len(),
                self.input_size
            )));
        }
        if prev.h.len() != self.units || prev.c.len() != self.units {
            return Err(Error::DimensionMismatch(format!(
                "state length {}/{} vs layer units {}",
                prev.h.len(),
                prev.c.len(),
                self.units
            )));
        }
        Ok(())
    }
}

/// Hidden and cell state carried between timesteps.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Array1<f64>,
    pub c: Array1<f64>,
}

impl CellState {
    pub fn zeros(units: usize) -> Self {
        Self {
            h: Array1::zeros(units),
            c: Array1::zeros(units),
        }
    }
}

/// Activations cached by the forward pass for backpropagation through time.
#[derive(Debug, Clone)]
pub struct GateCache {
    pub x: Array1<f64>,
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
    pub f: Array1<f64>,
    pub i: Array1<f64>,
    pub ctilde: Array1<f64>,
    pub o: Array1<f64>,
    pub tanh_c: Array1<f64>,
}

/// Advance the cell one timestep, returning the new state and the cached
/// gate activations.
pub fn cell_forward(
    params: &LstmLayerParams,
    x: &Array1<f64>,
    prev: &CellState,
) -> Result<(CellState, GateCache)> {
    params.check_dims(x, prev)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lstm cell input"));
    }

    let units = params.units;
    let h_prev = prev.h.as_slice().expect("standard layout");
    let x_in = x.as_slice().expect("standard layout");
    let mut f = Array1::zeros(units);
    let mut i = Array1::zeros(units);
    let mut ctilde = Array1::zeros(units);
    let mut o = Array1::zeros(units);
    params
        .forget
        .affine_into(h_prev, x_in, f.as_slice_mut().expect("standard layout"));
    params
        .input
        .affine_into(h_prev, x_in, i.as_slice_mut().expect("standard layout"));
    params.candidate.affine_into(
        h_prev,
        x_in,
        ctilde.as_slice_mut().expect("standard layout"),
    );
    params
        .output
        .affine_into(h_prev, x_in, o.as_slice_mut().expect("standard layout"));
    f.mapv_inplace(sigmoid);
    i.mapv_inplace(sigmoid);
    ctilde.mapv_inplace(f64::tanh);
    o.mapv_inplace(sigmoid);
    let c = &f * &prev.c + &i * &ctilde;
    let tanh_c = c.mapv(f64::tanh);
    let h = &o * &tanh_c;

    let cache = GateCache {
        x: x.clone(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        f,
        i,
        ctilde,
        o,
        tanh_c,
    };
    Ok((CellState { h, c }, cache))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;
    use rand::Rng;

    #[test]
    fn zero_weights_give_half_gates_and_zero_state() {
        let params = LstmLayerParams::zeros(3, 2);
        let prev = CellState::zeros(3);
        let (state, cache) = cell_forward(&params, &arr1(&[0.3, -0.8]), &prev).unwrap();
        for k in 0..3 {
            assert_eq!(cache.f[k], 0.5);
            assert_eq!(cache.i[k], 0.5);
            assert_eq!(cache.o[k], 0.5);
            assert_eq!(cache.ctilde[k], 0.0);
            assert_eq!(state.c[k], 0.0);
            assert_eq!(state.h[k], 0.0);
        }
    }

    #[test]
    fn saturated_forget_gate_retains_cell_state() {
        let mut params = LstmLayerParams::zeros(2, 1);
        params.forget.b.fill(20.0);
        let prev = CellState {
            h: Array1::zeros(2),
            c: arr1(&[1.5, -0.25]),
        };
        let (state, _) = cell_forward(&params, &arr1(&[0.0]), &prev).unwrap();
        assert!((state.c[0] - 1.5).abs() < 1e-8);
        assert!((state.c[1] + 0.25).abs() < 1e-8);
    }

    #[test]
    fn dimension_mismatch_and_nonfinite_are_errors() {
        let params = LstmLayerParams::zeros(3, 2);
        let prev = CellState::zeros(3);
        assert!(matches!(
            cell_forward(&params, &arr1(&[1.0]), &prev),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            cell_forward(&params, &arr1(&[1.0, f64::NAN]), &prev),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn matches_elementwise_scalar_recomputation() {
        // independent oracle: recompute every output coordinate with plain
        // scalar loops straight from the gate equations
        let units = 3;
        let input = 2;
        let mut rng = crate::sim::seeded_rng(99);
        let mut params = LstmLayerParams::zeros(units, input);
        for tensor in params.tensors_mut() {
            for v in tensor {
                *v = rng.random_range(-0.9..0.9);
            }
        }
        let x = arr1(&[0.4, -1.1]);
        let prev = CellState {
            h: arr1(&[0.2, -0.3, 0.7]),
            c: arr1(&[-0.5, 0.1, 0.9]),
        };
        let (state, cache) = cell_forward(&params, &x, &prev).unwrap();

        let scalar_gate = |gate: &Gate, row: usize, squash: fn(f64) -> f64| -> f64 {
            let mut z = gate.b[row];
            for j in 0..units {
                z += gate.w_h[[row, j]] * prev.h[j];
            }
            for j in 0..input {
                z += gate.w_x[[row, j]] * x[j];
            }
            squash(z)
        };
        for r in 0..units {
            let f = scalar_gate(&params.forget, r, sigmoid);
            let i = scalar_gate(&params.input, r, sigmoid);
            let ct = scalar_gate(&params.candidate, r, f64::tanh);
            let o = scalar_gate(&params.output, r, sigmoid);
            let c = f * prev.c[r] + i * ct;
            let h = o * c.tanh();
            assert!((cache.f[r] - f).abs() < 1e-12);
            assert!((cache.i[r] - i).abs() < 1e-12);
            assert!((cache.ctilde[r] - ct).abs() < 1e-12);
            assert!((cache.o[r] - o).abs() < 1e-12);
            assert!((state.c[r] - c).abs() < 1e-12);
            assert!((state.h[r] - h).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_outputs_stay_in_range_on_random_inputs() {
        let mut rng = crate::sim::seeded_rng(5);
        for _ in 0..50 {
            let mut params = LstmLayerParams::zeros(4, 3);
            for tensor in params.tensors_mut() {
                for v in tensor {
                    *v = rng.random_range(-1.5..1.5);
                }
            }
            let x = Array1::from_iter((0..3).map(|_| rng.random_range(-2.0..2.0)));
            let prev = CellState {
                h: Array1::from_iter((0..4).map(|_| rng.random_range(-0.99..0.99))),
                c: Array1::from_iter((0..4).map(|_| rng.random_range(-2.0..2.0))),
            };
            let (state, cache) = cell_forward(&params, &x, &prev).unwrap();
            for k in 0..4 {
                assert!(cache.f[k] > 0.0 && cache.f[k] < 1.0);
                assert!(cache.i[k] > 0.0 && cache.i[k] < 1.0);
                assert!(cache.o[k] > 0.0 && cache.o[k] < 1.0);
                assert!(cache.ctilde[k] > -1.0 && cache.ctilde[k] < 1.0);
                assert!(state.h[k] > -1.0 && state.h[k] < 1.0);
                assert!(state.c[k].is_finite());
            }
        }
    }
}
