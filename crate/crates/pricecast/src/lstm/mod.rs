//! From-scratch stacked LSTM regressor: forward pass, backpropagation
//! through time, inverted dropout, a dense head, and Adam training, all
//! seeded and deterministic.
//!
//! The default architecture is three LSTM layers with a dropout layer after
//! each and a single-output dense head. Training runs in double precision;
//! identical seeds give bit-identical initialization, dropout masks, shuffle
//! order, and final parameters.

mod adam;
mod backward;
mod cell;
mod checkpoint;
mod train;

pub use adam::{adam_step, AdamState};
pub use backward::backward;
pub use cell::{cell_forward, CellState, Gate, GateCache, LstmLayerParams};
pub use checkpoint::{checkpoint_from_text, checkpoint_to_text, LstmCheckpoint};
pub use train::{dataset_mse, mse_loss, train, EpochStats, TrainConfig};

use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim;

/// Whether dropout masks are sampled (training) or bypassed (inference).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Infer,
}

/// Stacked LSTM with per-layer dropout and a dense scalar head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStack {
    pub layers: Vec<LstmLayerParams>,
    pub dropout_rates: Vec<f64>,
    pub dense_w: Array1<f64>,
    pub dense_b: f64,
    pub seed: u64,
}

/// Gradient container shape-congruent with [`LstmStack`]; also reused for
/// the Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct StackGradients {
    pub layers: Vec<LstmLayerParams>,
    pub dense_w: Array1<f64>,
    pub dense_b: f64,
}

impl StackGradients {
    /// Flat views over every tensor: per layer (forget, input, candidate,
    /// output gates; each w_h, w_x, b), then the dense weights and bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.tensors());
        }
        out.push(self.dense_w.as_slice().expect("standard layout"));
        out.push(std::slice::from_ref(&self.dense_b));
        out
    }

    /// Mutable counterpart of [`StackGradients::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.tensors_mut());
        }
        out.push(self.dense_w.as_slice_mut().expect("standard layout"));
        out.push(std::slice::from_mut(&mut self.dense_b));
        out
    }
}

impl LstmStack {
    /// Build a seeded stack. Weight matrices draw from
    /// `U(-1/sqrt(units), +1/sqrt(units))`; biases start at zero except the
    /// forget-gate bias, which starts at 1.
    pub fn new(
        input_size: usize,
        layer_units: &[usize],
        dropout_rates: &[f64],
        seed: u64,
    ) -> Result<Self> {
        if layer_units.is_empty() || input_size == 0 {
            return Err(Error::Config(
                "stack needs at least one layer and a positive input size".to_string(),
            ));
        }
        if layer_units.len() != dropout_rates.len() {
            return Err(Error::Config(format!(
                "{} layers but {} dropout rates",
                layer_units.len(),
                dropout_rates.len()
            )));
        }
        if dropout_rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::Config("dropout rates must lie in [0, 1)".to_string()));
        }
        if layer_units.iter().any(|&u| u == 0) {
            return Err(Error::Config("layer units must be positive".to_string()));
        }

        let mut rng = sim::seeded_rng(sim::derive_seed(seed, 0));
        let mut layers = Vec::with_capacity(layer_units.len());
        let mut in_size = input_size;
        for &units in layer_units {
            let bound = 1.0 / (units as f64).sqrt();
            let mut layer = LstmLayerParams::zeros(units, in_size);
            for tensor in layer.tensors_mut() {
                for v in tensor.iter_mut() {
                    *v = rng.random_range(-bound..bound);
                }
            }
            layer.forget.b.fill(1.0);
            layer.input.b.fill(0.0);
            layer.candidate.b.fill(0.0);
            layer.output.b.fill(0.0);
            layers.push(layer);
            in_size = units;
        }
        let bound = 1.0 / (in_size as f64).sqrt();
        let dense_w = Array1::from_iter((0..in_size).map(|_| rng.random_range(-bound..bound)));
        Ok(Self {
            layers,
            dropout_rates: dropout_rates.to_vec(),
            dense_w,
            dense_b: 0.0,
            seed,
        })
    }

    /// Zero-valued gradient container with this stack's shapes.
    pub fn zero_gradients(&self) -> StackGradients {
        StackGradients {
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayerParams::zeros(l.units, l.input_size))
                .collect(),
            dense_w: Array1::zeros(self.dense_w.len()),
            dense_b: 0.0,
        }
    }

    /// Flat mutable views over every parameter tensor, in the same order
    /// as [`StackGradients::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.tensors_mut());
        }
        out.push(self.dense_w.as_slice_mut().expect("standard layout"));
        out.push(std::slice::from_mut(&mut self.dense_b));
        out
    }

    /// Inference-mode prediction for one window.
    pub fn predict(&self, window: &[f64]) -> Result<f64> {
        let (prediction, _) = stack_forward(self, window, DropoutMode::Infer, None)?;
        Ok(prediction)
    }
}

/// Inverted dropout. Inference mode is the identity; training mode zeroes
/// each component with probability `rate` and scales survivors by
/// `1/(1-rate)`, preserving the expectation.
pub fn dropout(
    values: &Array1<f64>,
    rate: f64,
    mode: DropoutMode,
    rng: &mut ChaCha8Rng,
) -> Array1<f64> {
    values * &dropout_mask(values.len(), rate, mode, Some(rng))
}

fn dropout_mask(
    len: usize,
    rate: f64,
    mode: DropoutMode,
    rng: Option<&mut ChaCha8Rng>,
) -> Array1<f64> {
    if mode == DropoutMode::Infer || rate == 0.0 {
        return Array1::ones(len);
    }
    let rng = rng.expect("train-mode dropout requires an rng");
    let keep_scale = 1.0 / (1.0 - rate);
    Array1::from_iter((0..len).map(|_| {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep_scale
        }
    }))
}

/// Per-layer activations recorded by [`stack_forward`].
pub struct LayerTrace {
    pub(crate) steps: Vec<GateCache>,
    pub(crate) masks: Vec<Array1<f64>>,
    pub(crate) dropped: Vec<Array1<f64>>,
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache {
    pub(crate) layers: Vec<LayerTrace>,
    pub prediction: f64,
}

/// Run a window through every layer left to right; layer outputs pass
/// through dropout (train mode only) before feeding the next layer, and the
/// final layer's last post-dropout hidden state feeds the dense head.
pub fn stack_forward(
    stack: &LstmStack,
    window: &[f64],
    mode: DropoutMode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, ForwardCache)> {
    if window.is_empty() {
        return Err(Error::Empty("input window"));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input window"));
    }
    if stack.layers[0].input_size != 1 {
        return Err(Error::DimensionMismatch(format!(
            "first layer expects input size {}, windows are univariate",
            stack.layers[0].input_size
        )));
    }
    if mode == DropoutMode::Train && rng.is_none() && stack.dropout_rates.iter().any(|&r| r > 0.0)
    {
        return Err(Error::Config(
            "train-mode forward requires an rng for dropout".to_string(),
        ));
    }

    let steps = window.len();
    let window_inputs: Vec<Array1<f64>> =
        window.iter().map(|&v| Array1::from_elem(1, v)).collect();
    let mut traces: Vec<LayerTrace> = Vec::with_capacity(stack.layers.len());

    for (idx, (layer, &rate)) in stack.layers.iter().zip(&stack.dropout_rates).enumerate() {
        let mut state = CellState::zeros(layer.units);
        let mut trace = LayerTrace {
            steps: Vec::with_capacity(steps),
            masks: Vec::with_capacity(steps),
            dropped: Vec::with_capacity(steps),
        };
        for t in 0..steps {
            let x = if idx == 0 {
                &window_inputs[t]
            } else {
                &traces[idx - 1].dropped[t]
            };
            let (next, cache) = cell_forward(layer, x, &state)?;
            let mask = dropout_mask(layer.units, rate, mode, rng.as_deref_mut());
            trace.dropped.push(&next.h * &mask);
            trace.masks.push(mask);
            trace.steps.push(cache);
            state = next;
        }
        traces.push(trace);
    }

    let top = traces
        .last()
        .and_then(|trace| trace.dropped.last())
        .expect("nonempty window");
    if top.len() != stack.dense_w.len() {
        return Err(Error::DimensionMismatch(format!(
            "dense head expects {}, got {}",
            stack.dense_w.len(),
            top.len()
        )));
    }
    let prediction = stack.dense_w.dot(top) + stack.dense_b;
    Ok((
        prediction,
        ForwardCache {
            layers: traces,
            prediction,
        },
    ))
}

/// Multi-sequence prediction: forecast one step from the current window,
/// emit it, then slide the window forward by appending the **actual**
/// observed value. Output length equals `actuals` length.
pub fn multi_sequence_predict(
    stack: &LstmStack,
    seed_window: &[f64],
    actuals: &[f64],
) -> Result<Vec<f64>> {
    if actuals.is_empty() {
        return Err(Error::Empty("actuals"));
    }
    let mut window = seed_window.to_vec();
    let mut predictions = Vec::with_capacity(actuals.len());
    for &actual in actuals {
        predictions.push(stack.predict(&window)?);
        window.remove(0);
        window.push(actual);
    }
    Ok(predictions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    fn tiny_stack(seed: u64) -> LstmStack {
        LstmStack::new(1, &[3, 2], &[0.2, 0.2], seed).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_forget_bias_is_one() {
        let a = tiny_stack(9);
        let b = tiny_stack(9);
        assert_eq!(a, b);
        assert_ne!(a, tiny_stack(10));
        assert!(a.layers[0].forget.b.iter().all(|&v| v == 1.0));
        assert!(a.layers[0].input.b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_zero_parameters_predict_dense_bias() {
        let mut stack = tiny_stack(1);
        for tensor in stack.tensors_mut() {
            for v in tensor {
                *v = 0.0;
            }
        }
        stack.dense_b = 0.37;
        let (pred, _) = stack_forward(&stack, &[0.1, 0.5, 0.9], DropoutMode::Infer, None).unwrap();
        assert_eq!(pred, 0.37);
    }

    #[test]
    fn infer_mode_ignores_dropout_rates() {
        let with_dropout = tiny_stack(4);
        let mut without = with_dropout.clone();
        without.dropout_rates = vec![0.0, 0.0];
        let window = [0.2, 0.4, 0.6, 0.8];
        let a = with_dropout.predict(&window).unwrap();
        let b = without.predict(&window).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_is_deterministic_per_seed() {
        let stack = tiny_stack(12);
        let window = [0.1, 0.2, 0.3, 0.4, 0.5];
        let mut rng1 = sim::seeded_rng(77);
        let mut rng2 = sim::seeded_rng(77);
        let (a, _) = stack_forward(&stack, &window, DropoutMode::Train, Some(&mut rng1)).unwrap();
        let (b, _) = stack_forward(&stack, &window, DropoutMode::Train, Some(&mut rng2)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn single_unit_stack_equals_manual_cell_composition() {
        let stack = LstmStack::new(1, &[1], &[0.0], 3).unwrap();
        let window = [0.3, -0.2, 0.8];
        let (pred, _) = stack_forward(&stack, &window, DropoutMode::Infer, None).unwrap();

        let mut state = CellState::zeros(1);
        for &v in &window {
            let (next, _) = cell_forward(&stack.layers[0], &arr1(&[v]), &state).unwrap();
            state = next;
        }
        let manual = stack.dense_w.dot(&state.h) + stack.dense_b;
        assert!((pred - manual).abs() < 1e-12);
    }

    #[test]
    fn dropout_rate_zero_and_infer_are_identity() {
        let v = arr1(&[1.0, 2.0, 3.0]);
        let mut rng = sim::seeded_rng(8);
        assert_eq!(dropout(&v, 0.0, DropoutMode::Train, &mut rng), v);
        assert_eq!(dropout(&v, 0.5, DropoutMode::Infer, &mut rng), v);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let n = 100_000;
        let v = Array1::ones(n);
        let mut rng = sim::seeded_rng(21);
        let dropped = dropout(&v, 0.1, DropoutMode::Train, &mut rng);
        let mean = dropped.sum() / n as f64;
        assert!((0.97..=1.03).contains(&mean), "mean {mean}");
    }

    #[test]
    fn multi_sequence_prediction_slides_on_actuals() {
        let stack = tiny_stack(31);
        let seed_window: Vec<f64> = (0..6).map(|i| i as f64 / 10.0).collect();
        let actuals = [0.7, 0.65, 0.72, 0.8];
        let preds = multi_sequence_predict(&stack, &seed_window, &actuals).unwrap();
        assert_eq!(preds.len(), actuals.len());

        // each prediction is recomputable from seed window + preceding
        // actuals alone; emitted predictions never enter the window
        for k in 0..actuals.len() {
            let mut window = seed_window.clone();
            window.extend_from_slice(&actuals[..k]);
            let window = &window[window.len() - 6..];
            let expect = stack.predict(window).unwrap();
            assert_eq!(preds[k].to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn stack_forward_rejects_bad_input() {
        let stack = tiny_stack(2);
        assert!(matches!(
            stack_forward(&stack, &[], DropoutMode::Infer, None),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            stack_forward(&stack, &[0.1, f64::INFINITY], DropoutMode::Infer, None),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            stack_forward(&stack, &[0.1, 0.2], DropoutMode::Train, None),
            Err(Error::Config(_))
        ));
    }
}
