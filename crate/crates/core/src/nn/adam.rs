//! Adam optimizer over named parameter tensors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MomentState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

/// Adam with per-tensor moment buffers and per-tensor step counts.
///
/// A tensor whose gradient is identically zero is skipped entirely (its
/// buffers and step count stay untouched), so a zero gradient never moves
/// a parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    state: BTreeMap<String, MomentState>,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            state: BTreeMap::new(),
        }
    }
}

impl Adam {
    pub fn new() -> Self {
        Self::default()
    }

    /// One update of `param` using `grad` at learning rate `lr`.
    pub fn update(&mut self, name: &str, param: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(param.len(), grad.len(), "grad length mismatch for {name}");
        if grad.iter().all(|&g| g == 0.0) {
            return;
        }
        let entry = self.state.entry(name.to_string()).or_insert_with(|| MomentState {
            m: vec![0.0; param.len()],
            v: vec![0.0; param.len()],
            t: 0,
        });
        entry.t += 1;
        let bc1 = 1.0 - self.beta1.powi(entry.t as i32);
        let bc2 = 1.0 - self.beta2.powi(entry.t as i32);
        for (i, (p, &g)) in param.iter_mut().zip(grad.iter()).enumerate() {
            let m = &mut entry.m[i];
            let v = &mut entry.v[i];
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_against_gradient_sign() {
        let mut opt = Adam::new();
        let mut p = [1.0, -1.0];
        opt.update("p", &mut p, &[0.5, -0.5], 0.1);
        assert!(p[0] < 1.0);
        assert!(p[1] > -1.0);
        // First Adam step magnitude is ~lr regardless of gradient scale.
        assert!((p[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_leaves_parameters_and_state_untouched() {
        let mut opt = Adam::new();
        let mut p = [1.0, 2.0];
        opt.update("p", &mut p, &[0.0, 0.0], 0.1);
        assert_eq!(p, [1.0, 2.0]);
        // Momentum from a previous real step must not leak into a
        // zero-gradient call either.
        opt.update("p", &mut p, &[1.0, 1.0], 0.1);
        let after_real = p;
        opt.update("p", &mut p, &[0.0, 0.0], 0.1);
        assert_eq!(p, after_real);
    }

    #[test]
    fn converges_on_a_quadratic() {
        let mut opt = Adam::new();
        let mut p = [5.0];
        for _ in 0..2000 {
            let g = [2.0 * p[0]];
            opt.update("p", &mut p, &g, 0.05);
        }
        assert!(p[0].abs() < 1e-3, "p = {}", p[0]);
    }
}
