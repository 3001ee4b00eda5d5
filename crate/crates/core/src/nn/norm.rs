//! Per-channel batch normalization for NCHW tensors.

use ndarray::{Array1, Array4};

#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// Training-mode forward cache.
pub struct BnCache {
    x_hat: Array4<f64>,
    inv_std: Array1<f64>,
}

impl BatchNorm2d {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Array1::ones(channels),
            beta: Array1::zeros(channels),
            running_mean: Array1::zeros(channels),
            running_var: Array1::ones(channels),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    /// Normalize with batch statistics; updates running stats (biased batch
    /// variance for normalization, unbiased for the running estimate).
    pub fn forward_train(&mut self, x: &Array4<f64>) -> (Array4<f64>, BnCache) {
        let (b, c, h, w) = x.dim();
        let n = (b * h * w) as f64;
        let mut y = Array4::zeros((b, c, h, w));
        let mut x_hat = Array4::zeros((b, c, h, w));
        let mut inv_std = Array1::zeros(c);
        for ci in 0..c {
            let mut mean = 0.0;
            for bi in 0..b {
                for iy in 0..h {
                    for ix in 0..w {
                        mean += x[[bi, ci, iy, ix]];
                    }
                }
            }
            mean /= n;
            let mut var = 0.0;
            for bi in 0..b {
                for iy in 0..h {
                    for ix in 0..w {
                        let d = x[[bi, ci, iy, ix]] - mean;
                        var += d * d;
                    }
                }
            }
            var /= n;
            let istd = 1.0 / (var + self.eps).sqrt();
            inv_std[ci] = istd;
            let (g, be) = (self.gamma[ci], self.beta[ci]);
            for bi in 0..b {
                for iy in 0..h {
                    for ix in 0..w {
                        let xh = (x[[bi, ci, iy, ix]] - mean) * istd;
                        x_hat[[bi, ci, iy, ix]] = xh;
                        y[[bi, ci, iy, ix]] = g * xh + be;
                    }
                }
            }
            let unbiased = if n > 1.0 { var * n / (n - 1.0) } else { var };
            self.running_mean[ci] = (1.0 - self.momentum) * self.running_mean[ci] + self.momentum * mean;
            self.running_var[ci] = (1.0 - self.momentum) * self.running_var[ci] + self.momentum * unbiased;
        }
        (y, BnCache { x_hat, inv_std })
    }

    /// Normalize with the running statistics (inference path).
    pub fn forward_eval(&self, x: &Array4<f64>) -> Array4<f64> {
        let (b, c, h, w) = x.dim();
        let mut y = Array4::zeros((b, c, h, w));
        for ci in 0..c {
            let istd = 1.0 / (self.running_var[ci] + self.eps).sqrt();
            let (g, be, m) = (self.gamma[ci], self.beta[ci], self.running_mean[ci]);
            for bi in 0..b {
                for iy in 0..h {
                    for ix in 0..w {
                        y[[bi, ci, iy, ix]] = g * (x[[bi, ci, iy, ix]] - m) * istd + be;
                    }
                }
            }
        }
        y
    }

    /// Returns (dgamma, dbeta, dx) for a training-mode forward.
    pub fn backward(&self, cache: &BnCache, dy: &Array4<f64>) -> (Array1<f64>, Array1<f64>, Array4<f64>) {
        let (b, c, h, w) = dy.dim();
        let n = (b * h * w) as f64;
        let mut dgamma = Array1::zeros(c);
        let mut dbeta = Array1::zeros(c);
        let mut dx = Array4::zeros((b, c, h, w));
        for ci in 0..c {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for bi in 0..b {
                for iy in 0..h {
                    for ix in 0..w {
                        let g = dy[[bi, ci, iy, ix]];
                        sum_dy += g;
                        sum_dy_xhat += g * cache.x_hat[[bi, ci, iy, ix]];
                    }
                }
            }
            dgamma[ci] = sum_dy_xhat;
            dbeta[ci] = sum_dy;
            let scale = self.gamma[ci] * cache.inv_std[ci];
            for bi in 0..b {
                for iy in 0..h {
                    for ix in 0..w {
                        let g = dy[[bi, ci, iy, ix]];
                        let xh = cache.x_hat[[bi, ci, iy, ix]];
                        dx[[bi, ci, iy, ix]] = scale * (g - sum_dy / n - xh * sum_dy_xhat / n);
                    }
                }
            }
        }
        (dgamma, dbeta, dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use rand::Rng;

    #[test]
    fn train_forward_standardizes_channels() {
        let mut rng = derive_rng(4, "bn-test");
        let x = Array4::from_shape_fn((4, 3, 5, 5), |_| rng.gen_range(-2.0..2.0));
        let mut bn = BatchNorm2d::new(3);
        let (y, _) = bn.forward_train(&x);
        for ci in 0..3 {
            let mut mean = 0.0;
            let mut count = 0.0;
            for bi in 0..4 {
                for iy in 0..5 {
                    for ix in 0..5 {
                        mean += y[[bi, ci, iy, ix]];
                        count += 1.0;
                    }
                }
            }
            assert!((mean / count).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_channel_stays_finite() {
        let x = Array4::from_elem((2, 1, 3, 3), 5.0);
        let mut bn = BatchNorm2d::new(1);
        let (y, _) = bn.forward_train(&x);
        assert!(y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn eval_uses_running_stats() {
        let mut rng = derive_rng(5, "bn-test");
        let x = Array4::from_shape_fn((4, 2, 3, 3), |_| rng.gen_range(0.0..4.0));
        let mut bn = BatchNorm2d::new(2);
        let (y_train, _) = bn.forward_train(&x);
        let y_eval = bn.forward_eval(&x);
        // One momentum update is not enough for running stats to equal
        // batch stats, so the two paths must differ.
        assert!(y_train.iter().zip(y_eval.iter()).any(|(a, b)| (a - b).abs() > 1e-6));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = derive_rng(6, "bn-test");
        let x = Array4::from_shape_fn((3, 2, 2, 2), |_| rng.gen_range(-1.0..1.0));
        let loss = |bn: &BatchNorm2d, x: &Array4<f64>| {
            let mut bn = bn.clone();
            let (y, _) = bn.forward_train(x);
            y.mapv(|v| v * v).sum()
        };
        let mut bn = BatchNorm2d::new(2);
        bn.gamma[0] = 1.3;
        bn.beta[1] = -0.4;
        let (y, cache) = bn.clone().forward_train(&x);
        let dy = y.mapv(|v| 2.0 * v);
        let (dgamma, dbeta, dx) = bn.backward(&cache, &dy);

        let h = 1e-6;
        for ci in 0..2 {
            let mut b2 = bn.clone();
            b2.gamma[ci] += h;
            let up = loss(&b2, &x);
            b2.gamma[ci] -= 2.0 * h;
            let down = loss(&b2, &x);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - dgamma[ci]).abs() < 1e-5, "dgamma {fd} vs {}", dgamma[ci]);

            let mut b3 = bn.clone();
            b3.beta[ci] += h;
            let up = loss(&b3, &x);
            b3.beta[ci] -= 2.0 * h;
            let down = loss(&b3, &x);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - dbeta[ci]).abs() < 1e-5);
        }
        for &idx in &[[0usize, 0usize, 0usize, 0usize], [2, 1, 1, 1], [1, 0, 1, 0]] {
            let mut x2 = x.clone();
            x2[idx] += h;
            let up = loss(&bn, &x2);
            x2[idx] -= 2.0 * h;
            let down = loss(&bn, &x2);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - dx[idx]).abs() < 1e-4, "dx {fd} vs {}", dx[idx]);
        }
    }
}
