//! Adam parameter updates for kernel sets.

use crate::error::{Error, Result};
use crate::wcnn::{GradientSet, KernelSet};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First/second moment estimates plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u32,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            epsilon: ADAM_EPSILON,
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self.epsilon = epsilon;
        self
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }
}

/// One bias-corrected Adam update; kernels and gradients walk the canonical
/// parameter order together.
pub fn adam_step(
    kernels: &mut KernelSet,
    grads: &GradientSet,
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    if kernels.channels() != grads.channels() || kernels.kernel_size() != grads.kernel_size() {
        return Err(Error::ShapeMismatch {
            expected: (kernels.channels(), kernels.kernel_size(), 0),
            got: (grads.channels(), grads.kernel_size(), 0),
        });
    }
    let n = kernels.param_count();
    if state.m.len() != n {
        return Err(Error::BadConfig(format!(
            "optimizer state sized for {} parameters, model has {n}",
            state.m.len()
        )));
    }

    state.step += 1;
    let bias1 = 1.0 - state.beta1.powi(state.step as i32);
    let bias2 = 1.0 - state.beta2.powi(state.step as i32);

    let g = grads.to_flat();
    let mut idx = 0;
    kernels.for_each_param_mut(|theta| {
        let grad = g[idx];
        state.m[idx] = state.beta1 * state.m[idx] + (1.0 - state.beta1) * grad;
        state.v[idx] = state.beta2 * state.v[idx] + (1.0 - state.beta2) * grad * grad;
        let m_hat = state.m[idx] / bias1;
        let v_hat = state.v[idx] / bias2;
        *theta -= learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        idx += 1;
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernels_with(value: f64) -> KernelSet {
        let mut set = KernelSet::zeros(1, 3).unwrap();
        set.for_each_param_mut(|v| *v = value);
        set
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut kernels = kernels_with(0.5);
        let before = kernels.to_flat();
        let grads = KernelSet::zeros(1, 3).unwrap();
        let mut state = AdamState::new(kernels.param_count());
        adam_step(&mut kernels, &grads, &mut state, 1e-2).unwrap();
        assert_eq!(kernels.to_flat(), before);
    }

    #[test]
    fn first_step_is_bounded_by_the_learning_rate() {
        for magnitude in [1e-6, 1.0, 1e6] {
            let mut kernels = kernels_with(0.0);
            let mut grads = KernelSet::zeros(1, 3).unwrap();
            grads.for_each_param_mut(|v| *v = magnitude);
            let mut state = AdamState::new(kernels.param_count());
            let lr = 1e-3;
            adam_step(&mut kernels, &grads, &mut state, lr).unwrap();
            for v in kernels.to_flat() {
                assert!(v < 0.0, "step moves against the gradient");
                assert!(v.abs() <= lr * (1.0 + 1e-6), "step {v} exceeds lr bound");
            }
        }
    }

    #[test]
    fn two_steps_match_a_hand_computed_trace() {
        // Scalar Adam with g = 1 both steps, lr = 0.1:
        // t=1: m=0.1, v=0.001, m̂=1, v̂=1, θ = -0.1/(1+1e-8)
        // t=2: m=0.19, v=0.001999, m̂=0.19/0.19=1, v̂=0.001999/0.001999=1,
        //      θ -= 0.1 again.
        let mut kernels = kernels_with(0.0);
        let mut grads = KernelSet::zeros(1, 3).unwrap();
        grads.for_each_param_mut(|v| *v = 1.0);
        let mut state = AdamState::new(kernels.param_count());
        let lr = 0.1;

        adam_step(&mut kernels, &grads, &mut state, lr).unwrap();
        let after_one = kernels.to_flat()[0];
        let expected_one = -lr * 1.0 / (1.0 + ADAM_EPSILON);
        assert!((after_one - expected_one).abs() < 1e-15);

        adam_step(&mut kernels, &grads, &mut state, lr).unwrap();
        let m2 = 0.9 * 0.1 + 0.1 * 1.0;
        let v2 = 0.999 * 0.001 + 0.001 * 1.0;
        let m_hat = m2 / (1.0 - 0.9f64.powi(2));
        let v_hat = v2 / (1.0 - 0.999f64.powi(2));
        let expected_two = expected_one - lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        assert!((kernels.to_flat()[0] - expected_two).abs() < 1e-15);
    }

    #[test]
    fn finite_gradients_never_produce_non_finite_parameters() {
        let mut kernels = kernels_with(1.0);
        let mut grads = KernelSet::zeros(1, 3).unwrap();
        let mut state = AdamState::new(kernels.param_count());
        for step in 0..50 {
            grads.for_each_param_mut(|v| *v = if step % 2 == 0 { 1e12 } else { -1e-12 });
            adam_step(&mut kernels, &grads, &mut state, 0.5).unwrap();
        }
        kernels.for_each_param(|v| assert!(v.is_finite()));
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut kernels = kernels_with(0.0);
        let grads = KernelSet::zeros(1, 5).unwrap();
        let mut state = AdamState::new(kernels.param_count());
        assert!(adam_step(&mut kernels, &grads, &mut state, 0.1).is_err());
    }
}
