//! Pooling layers: 2×2 average pool, general max pool, global average pool.

use ndarray::{Array2, Array4};

/// 2×2 stride-2 average pool; trailing odd rows/columns are dropped.
pub fn avg_pool2(x: &Array4<f64>) -> Array4<f64> {
    let (b, c, h, w) = x.dim();
    let (oh, ow) = (h / 2, w / 2);
    let mut y = Array4::zeros((b, c, oh, ow));
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let (iy, ix) = (oy * 2, ox * 2);
                    y[[bi, ci, oy, ox]] = (x[[bi, ci, iy, ix]]
                        + x[[bi, ci, iy, ix + 1]]
                        + x[[bi, ci, iy + 1, ix]]
                        + x[[bi, ci, iy + 1, ix + 1]])
                        / 4.0;
                }
            }
        }
    }
    y
}

pub fn avg_pool2_backward(dy: &Array4<f64>, in_h: usize, in_w: usize) -> Array4<f64> {
    let (b, c, oh, ow) = dy.dim();
    let mut dx = Array4::zeros((b, c, in_h, in_w));
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let g = dy[[bi, ci, oy, ox]] / 4.0;
                    let (iy, ix) = (oy * 2, ox * 2);
                    dx[[bi, ci, iy, ix]] += g;
                    dx[[bi, ci, iy, ix + 1]] += g;
                    dx[[bi, ci, iy + 1, ix]] += g;
                    dx[[bi, ci, iy + 1, ix + 1]] += g;
                }
            }
        }
    }
    dx
}

/// Argmax positions (flattened input index per output cell) for max-pool
/// backward routing. Ties go to the first (row-major) element.
pub struct MaxPoolCache {
    pub argmax: Vec<usize>,
    pub in_shape: (usize, usize, usize, usize),
    pub out_hw: (usize, usize),
}

/// Max pool with kernel `k`, stride `s` and zero padding `pad` (padded
/// cells are treated as -inf, so they never win).
pub fn max_pool(x: &Array4<f64>, k: usize, s: usize, pad: usize) -> (Array4<f64>, MaxPoolCache) {
    let (b, c, h, w) = x.dim();
    let oh = (h + 2 * pad - k) / s + 1;
    let ow = (w + 2 * pad - k) / s + 1;
    let mut y = Array4::zeros((b, c, oh, ow));
    let mut argmax = vec![0usize; b * c * oh * ow];
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for ky in 0..k {
                        let iy = (oy * s + ky) as isize - pad as isize;
                        if iy < 0 || iy as usize >= h {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * s + kx) as isize - pad as isize;
                            if ix < 0 || ix as usize >= w {
                                continue;
                            }
                            let v = x[[bi, ci, iy as usize, ix as usize]];
                            if v > best {
                                best = v;
                                best_idx = iy as usize * w + ix as usize;
                            }
                        }
                    }
                    y[[bi, ci, oy, ox]] = best;
                    argmax[((bi * c + ci) * oh + oy) * ow + ox] = best_idx;
                }
            }
        }
    }
    (
        y,
        MaxPoolCache {
            argmax,
            in_shape: (b, c, h, w),
            out_hw: (oh, ow),
        },
    )
}

pub fn max_pool_backward(cache: &MaxPoolCache, dy: &Array4<f64>) -> Array4<f64> {
    let (b, c, h, w) = cache.in_shape;
    let (oh, ow) = cache.out_hw;
    let mut dx = Array4::zeros((b, c, h, w));
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let idx = cache.argmax[((bi * c + ci) * oh + oy) * ow + ox];
                    dx[[bi, ci, idx / w, idx % w]] += dy[[bi, ci, oy, ox]];
                }
            }
        }
    }
    dx
}

/// Mean over the spatial dimensions: (B, C, H, W) → (B, C).
pub fn global_avg_pool(x: &Array4<f64>) -> Array2<f64> {
    let (b, c, h, w) = x.dim();
    let scale = 1.0 / (h * w) as f64;
    let mut y = Array2::zeros((b, c));
    for bi in 0..b {
        for ci in 0..c {
            let mut acc = 0.0;
            for iy in 0..h {
                for ix in 0..w {
                    acc += x[[bi, ci, iy, ix]];
                }
            }
            y[[bi, ci]] = acc * scale;
        }
    }
    y
}

pub fn global_avg_pool_backward(dy: &Array2<f64>, h: usize, w: usize) -> Array4<f64> {
    let (b, c) = dy.dim();
    let scale = 1.0 / (h * w) as f64;
    let mut dx = Array4::zeros((b, c, h, w));
    for bi in 0..b {
        for ci in 0..c {
            let g = dy[[bi, ci]] * scale;
            for iy in 0..h {
                for ix in 0..w {
                    dx[[bi, ci, iy, ix]] = g;
                }
            }
        }
    }
    dx
}
