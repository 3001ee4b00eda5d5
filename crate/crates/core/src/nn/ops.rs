//! Elementwise activations and the row softmax.

use ndarray::{Array2, Array4};

pub fn tanh_forward(x: &Array4<f64>) -> Array4<f64> {
    x.mapv(f64::tanh)
}

/// Backward through tanh given the forward *output* y: dx = dy · (1 − y²).
pub fn tanh_backward(y: &Array4<f64>, dy: &Array4<f64>) -> Array4<f64> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(y).for_each(|d, &yv| *d *= 1.0 - yv * yv);
    dx
}

pub fn relu(x: &Array4<f64>) -> Array4<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Backward through relu given the forward *input* x.
pub fn relu_backward(x: &Array4<f64>, dy: &Array4<f64>) -> Array4<f64> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(x).for_each(|d, &xv| {
        if xv <= 0.0 {
            *d = 0.0;
        }
    });
    dx
}

/// Numerically stable softmax over each row.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}
