//! 2-D convolution over NCHW batches via im2col + matmul.

use ndarray::{Array1, Array2, Array4, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Convolution layer; weight (out_ch, in_ch, k, k), bias (out_ch).
/// Convolutions feeding a batch-norm layer run bias-free (a constant
/// shift would be cancelled by the normalization anyway).
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub w: Array4<f64>,
    pub b: Array1<f64>,
    pub stride: usize,
    pub pad: usize,
    pub has_bias: bool,
}

/// Forward cache: the im2col matrices (one per image) plus shape info.
pub struct Conv2dCache {
    cols: Vec<Array2<f64>>,
    in_shape: (usize, usize, usize, usize),
    out_hw: (usize, usize),
}

impl Conv2d {
    /// Fan-in-scaled normal init (std = 1/√(in_ch·k²)), zero bias.
    pub fn new<R: Rng>(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize, rng: &mut R) -> Self {
        let fan_in = (in_ch * kernel * kernel) as f64;
        let normal = Normal::new(0.0, 1.0 / fan_in.sqrt()).expect("std is finite");
        let w = Array4::from_shape_fn((out_ch, in_ch, kernel, kernel), |_| normal.sample(rng));
        Self {
            w,
            b: Array1::zeros(out_ch),
            stride,
            pad,
            has_bias: true,
        }
    }

    /// Bias-free variant, for convolutions followed by batch norm.
    pub fn new_no_bias<R: Rng>(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize, rng: &mut R) -> Self {
        Self {
            has_bias: false,
            ..Self::new(in_ch, out_ch, kernel, stride, pad, rng)
        }
    }

    pub fn kernel(&self) -> usize {
        self.w.shape()[2]
    }

    pub fn out_side(&self, in_side: usize) -> usize {
        (in_side + 2 * self.pad - self.kernel()) / self.stride + 1
    }

    pub fn forward(&self, x: &Array4<f64>) -> (Array4<f64>, Conv2dCache) {
        let (batch, in_ch, h, w) = x.dim();
        let k = self.kernel();
        let (oh, ow) = (self.out_side(h), self.out_side(w));
        let out_ch = self.w.shape()[0];
        let w_mat = self.weight_matrix();

        let mut y = Array4::zeros((batch, out_ch, oh, ow));
        let mut cols = Vec::with_capacity(batch);
        for bi in 0..batch {
            let col = im2col(&x.index_axis(Axis(0), bi).to_owned(), k, self.stride, self.pad, oh, ow);
            let out = col.dot(&w_mat.t()); // (P, out_ch)
            for oc in 0..out_ch {
                let bias = self.b[oc];
                for p in 0..oh * ow {
                    y[[bi, oc, p / ow, p % ow]] = out[[p, oc]] + bias;
                }
            }
            cols.push(col);
        }
        (
            y,
            Conv2dCache {
                cols,
                in_shape: (batch, in_ch, h, w),
                out_hw: (oh, ow),
            },
        )
    }

    /// Backward pass. Returns (dW, db, dx).
    pub fn backward(&self, cache: &Conv2dCache, dy: &Array4<f64>) -> (Array4<f64>, Array1<f64>, Array4<f64>) {
        let (batch, in_ch, h, w) = cache.in_shape;
        let (oh, ow) = cache.out_hw;
        let k = self.kernel();
        let out_ch = self.w.shape()[0];
        let w_mat = self.weight_matrix();

        let mut dw_mat = Array2::zeros((out_ch, in_ch * k * k));
        let mut db = Array1::zeros(out_ch);
        let mut dx = Array4::zeros((batch, in_ch, h, w));
        for bi in 0..batch {
            let mut dy_mat = Array2::zeros((oh * ow, out_ch));
            for oc in 0..out_ch {
                for p in 0..oh * ow {
                    let g = dy[[bi, oc, p / ow, p % ow]];
                    dy_mat[[p, oc]] = g;
                    db[oc] += g;
                }
            }
            dw_mat += &dy_mat.t().dot(&cache.cols[bi]);
            let dcol = dy_mat.dot(&w_mat); // (P, in_ch*k*k)
            col2im_accumulate(
                &dcol,
                &mut dx.index_axis_mut(Axis(0), bi),
                k,
                self.stride,
                self.pad,
                oh,
                ow,
            );
        }
        let dw = dw_mat
            .into_shape_with_order((out_ch, in_ch, k, k))
            .expect("dw shape matches weight");
        (dw, db, dx)
    }

    fn weight_matrix(&self) -> Array2<f64> {
        let (out_ch, in_ch, k, _) = self.w.dim();
        self.w
            .to_owned()
            .into_shape_with_order((out_ch, in_ch * k * k))
            .expect("contiguous weight")
    }
}

/// Unfold one image (C, H, W) into (out_h·out_w, C·k·k) patch rows.
/// Out-of-bounds (padded) positions read as zero.
fn im2col(x: &ndarray::Array3<f64>, k: usize, stride: usize, pad: usize, oh: usize, ow: usize) -> Array2<f64> {
    let (c, h, w) = x.dim();
    let mut col = Array2::zeros((oh * ow, c * k * k));
    for oy in 0..oh {
        for ox in 0..ow {
            let p = oy * ow + ox;
            let mut f = 0;
            for ci in 0..c {
                for ky in 0..k {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    for kx in 0..k {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                            col[[p, f]] = x[[ci, iy as usize, ix as usize]];
                        }
                        f += 1;
                    }
                }
            }
        }
    }
    col
}

fn col2im_accumulate(
    dcol: &Array2<f64>,
    dx: &mut ndarray::ArrayViewMut3<f64>,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) {
    let (c, h, w) = dx.dim();
    for oy in 0..oh {
        for ox in 0..ow {
            let p = oy * ow + ox;
            let mut f = 0;
            for ci in 0..c {
                for ky in 0..k {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    for kx in 0..k {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                            dx[[ci, iy as usize, ix as usize]] += dcol[[p, f]];
                        }
                        f += 1;
                    }
                }
            }
        }
    }
}
