//! Affine layer y = x·Wᵀ + b.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Fully-connected layer with weight (out, in) and bias (out).
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    /// Fan-in-scaled normal init (std = 1/√fan_in), zero bias.
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let std = 1.0 / (in_dim as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("std is finite");
        let w = Array2::from_shape_fn((out_dim, in_dim), |_| normal.sample(rng));
        Self {
            w,
            b: Array1::zeros(out_dim),
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            w: Array2::zeros((out_dim, in_dim)),
            b: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    /// Parameter gradients for upstream `dy`; `x` is the forward input.
    pub fn param_grads(&self, x: &Array2<f64>, dy: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
        (dy.t().dot(x), dy.sum_axis(ndarray::Axis(0)))
    }

    /// Gradient w.r.t. the input only.
    pub fn input_grad(&self, dy: &Array2<f64>) -> Array2<f64> {
        dy.dot(&self.w)
    }
}
