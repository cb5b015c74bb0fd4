//! Adam optimizer with bias correction.

use super::layers::Stack;
use super::tensor::Tensor2;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamMoments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamMoments {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update on a flat parameter slice. `step` counts
/// from 1.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamMoments, lr: f64, step: u64) {
    debug_assert_eq!(params.len(), grads.len());
    let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

/// Optimizer driving several stacks; moment state is kept per parameter
/// tensor in visit order.
#[derive(Debug)]
pub struct Adam {
    pub lr: f64,
    step: u64,
    moments: Vec<AdamMoments>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update across the given stacks (in order). Lazily sizes the
    /// moment buffers on first use.
    pub fn step(&mut self, stacks: &mut [&mut Stack]) {
        self.step += 1;
        let step = self.step;
        let lr = self.lr;
        let mut idx = 0;
        let lazy_init = self.moments.is_empty();
        let moments = &mut self.moments;
        for stack in stacks {
            stack.visit_params(&mut |p: &mut Tensor2, g: &mut Tensor2| {
                if lazy_init && moments.len() == idx {
                    moments.push(AdamMoments::new(p.data().len()));
                }
                adam_step(p.data_mut(), g.data(), &mut moments[idx], lr, step);
                idx += 1;
            });
        }
    }
}
