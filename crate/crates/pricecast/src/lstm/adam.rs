//! Adam optimizer with bias-corrected first and second moments.

use super::train::TrainConfig;
use super::{LstmStack, StackGradients};
use crate::error::{Error, Result};

/// First and second moment estimates, shape-congruent with the stack.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: StackGradients,
    v: StackGradients,
}

impl AdamState {
    pub fn new(stack: &LstmStack) -> Self {
        Self {
            m: stack.zero_gradients(),
            v: stack.zero_gradients(),
        }
    }
}

/// One Adam update at step index `t` (1-based). The per-coordinate update
/// magnitude is bounded by roughly the learning rate.
pub fn adam_step(
    stack: &mut LstmStack,
    grads: &StackGradients,
    state: &mut AdamState,
    config: &TrainConfig,
    t: usize,
) -> Result<()> {
    if t == 0 {
        return Err(Error::Config("adam step index starts at 1".to_string()));
    }
    let beta1 = config.beta1;
    let beta2 = config.beta2;
    let bias1 = 1.0 - beta1.powi(t as i32);
    let bias2 = 1.0 - beta2.powi(t as i32);

    let mut params = stack.tensors_mut();
    let grad_tensors = grads.tensors();
    let mut m_tensors = state.m.tensors_mut();
    let mut v_tensors = state.v.tensors_mut();
    if params.len() != grad_tensors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameter tensors vs {} gradient tensors",
            params.len(),
            grad_tensors.len()
        )));
    }

    for (((param, grad), m), v) in params
        .iter_mut()
        .zip(&grad_tensors)
        .zip(m_tensors.iter_mut())
        .zip(v_tensors.iter_mut())
    {
        if param.len() != grad.len() {
            return Err(Error::DimensionMismatch(format!(
                "parameter tensor of {} values vs gradient of {}",
                param.len(),
                grad.len()
            )));
        }
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            param[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_stack() -> LstmStack {
        LstmStack::new(1, &[2], &[0.0], 3).unwrap()
    }

    fn config(lr: f64) -> TrainConfig {
        TrainConfig {
            learning_rate: lr,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut stack = small_stack();
        let before = stack.clone();
        let grads = stack.zero_gradients();
        let mut state = AdamState::new(&stack);
        adam_step(&mut stack, &grads, &mut state, &config(0.1), 1).unwrap();
        assert_eq!(stack, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient_sign() {
        let mut stack = small_stack();
        let before = stack.clone();
        let mut grads = stack.zero_gradients();
        for tensor in grads.tensors_mut() {
            for (i, v) in tensor.iter_mut().enumerate() {
                *v = if i % 2 == 0 { 3.0 } else { -0.7 };
            }
        }
        let lr = 0.05;
        let mut state = AdamState::new(&stack);
        adam_step(&mut stack, &grads, &mut state, &config(lr), 1).unwrap();

        let mut before = before;
        for ((after, before), grad) in stack
            .tensors_mut()
            .iter()
            .zip(before.tensors_mut())
            .zip(grads.tensors())
        {
            for i in 0..after.len() {
                let step = before[i] - after[i];
                let expected = lr * grad[i].signum();
                assert!(
                    (step - expected).abs() < lr * 1e-6,
                    "step {step} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn step_index_zero_is_rejected() {
        let mut stack = small_stack();
        let grads = stack.zero_gradients();
        let mut state = AdamState::new(&stack);
        assert!(matches!(
            adam_step(&mut stack, &grads, &mut state, &config(0.1), 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn minimizes_scalar_quadratic() {
        // drive w^2 toward zero through the dense bias coordinate
        let mut stack = small_stack();
        for tensor in stack.tensors_mut() {
            for v in tensor.iter_mut() {
                *v = 0.0;
            }
        }
        stack.dense_b = 5.0;
        let mut state = AdamState::new(&stack);
        let cfg = config(0.1);
        for t in 1..=500 {
            let mut grads = stack.zero_gradients();
            grads.dense_b = 2.0 * stack.dense_b;
            adam_step(&mut stack, &grads, &mut state, &cfg, t).unwrap();
        }
        assert!(stack.dense_b.abs() < 0.01, "w = {}", stack.dense_b);
    }
}
