//! Train-time augmentation: random crop/rotate/mirror (strategy one),
//! per-channel histogram equalization (strategy two), and their pixel-wise
//! weighted blend. All randomness comes from a caller-supplied RNG, so a
//! fixed seed gives byte-identical outputs.

use ndarray::Array3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::ImageTensor;

/// Parameters for the augmentation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub enabled: bool,
    /// Output side; must not exceed the input side.
    pub crop_size: usize,
    /// Rotation range in degrees, symmetric about 0 by default.
    pub rotation_range_degrees: (f64, f64),
    pub mirror_probability: f64,
    /// Blend weight w: output = w·geom + (1−w)·equalized(geom).
    pub blend_weight: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            crop_size: 96,
            rotation_range_degrees: (-15.0, 15.0),
            mirror_probability: 0.5,
            blend_weight: 0.5,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self, input_side: usize) -> Result<()> {
        if self.crop_size == 0 || self.crop_size > input_side {
            return Err(Error::validation(format!(
                "crop_size {} invalid for input side {}",
                self.crop_size, input_side
            )));
        }
        if !(0.0..=1.0).contains(&self.mirror_probability) {
            return Err(Error::validation("mirror_probability must be in [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.blend_weight) {
            return Err(Error::validation("blend_weight must be in [0,1]"));
        }
        if self.rotation_range_degrees.0 > self.rotation_range_degrees.1 {
            return Err(Error::validation("rotation range must be ordered (min, max)"));
        }
        Ok(())
    }
}

/// Geometric parameters drawn for one application of strategy one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomParams {
    /// Crop offset (row, col) of the top-left corner.
    pub offset: (usize, usize),
    pub angle_degrees: f64,
    pub mirror: bool,
}

impl GeomParams {
    pub fn identity() -> Self {
        Self {
            offset: (0, 0),
            angle_degrees: 0.0,
            mirror: false,
        }
    }
}

/// Draw crop offset, rotation angle and mirror flag, in that fixed order.
pub fn draw_geom_params<R: Rng>(rng: &mut R, input_side: usize, cfg: &AugmentConfig) -> GeomParams {
    let margin = input_side - cfg.crop_size;
    let row = if margin == 0 { 0 } else { rng.gen_range(0..=margin) };
    let col = if margin == 0 { 0 } else { rng.gen_range(0..=margin) };
    let (lo, hi) = cfg.rotation_range_degrees;
    let angle = if lo == hi { lo } else { rng.gen_range(lo..hi) };
    let mirror = rng.gen_bool(cfg.mirror_probability);
    GeomParams {
        offset: (row, col),
        angle_degrees: angle,
        mirror,
    }
}

/// Crop, then rotate about the crop center (bilinear, edge-replicated),
/// then mirror horizontally. Values are clamped to [0,1].
pub fn apply_geom(image: &ImageTensor, params: &GeomParams, crop_size: usize) -> Result<ImageTensor> {
    let (h, w, _) = image.dim();
    let (r0, c0) = params.offset;
    if crop_size == 0 || r0 + crop_size > h || c0 + crop_size > w {
        return Err(Error::validation(format!(
            "crop {}+{} exceeds input {}x{}",
            r0.max(c0),
            crop_size,
            h,
            w
        )));
    }

    let cropped = image
        .slice(ndarray::s![r0..r0 + crop_size, c0..c0 + crop_size, ..])
        .to_owned();

    let rotated = if params.angle_degrees == 0.0 {
        cropped
    } else {
        rotate_bilinear(&cropped, params.angle_degrees)
    };

    let mut out = if params.mirror {
        let mut flipped = Array3::zeros(rotated.dim());
        let n = crop_size;
        for r in 0..n {
            for c in 0..n {
                for ch in 0..3 {
                    flipped[[r, c, ch]] = rotated[[r, n - 1 - c, ch]];
                }
            }
        }
        flipped
    } else {
        rotated
    };

    out.mapv_inplace(|v| v.clamp(0.0, 1.0));
    Ok(out)
}

/// Inverse-map rotation with bilinear interpolation; out-of-bounds source
/// coordinates are clamped to the edge (edge replication).
fn rotate_bilinear(image: &ImageTensor, angle_degrees: f64) -> ImageTensor {
    let n = image.shape()[0];
    let theta = angle_degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let center = (n as f64 - 1.0) / 2.0;
    let mut out = Array3::zeros(image.raw_dim());
    for r in 0..n {
        for c in 0..n {
            let dy = r as f64 - center;
            let dx = c as f64 - center;
            // Inverse rotation: source = R(-theta) * dest
            let sy = center + dy * cos - dx * sin;
            let sx = center + dy * sin + dx * cos;
            let sy = sy.clamp(0.0, (n - 1) as f64);
            let sx = sx.clamp(0.0, (n - 1) as f64);
            let y0 = sy.floor() as usize;
            let x0 = sx.floor() as usize;
            let y1 = (y0 + 1).min(n - 1);
            let x1 = (x0 + 1).min(n - 1);
            let fy = sy - y0 as f64;
            let fx = sx - x0 as f64;
            for ch in 0..3 {
                let v00 = image[[y0, x0, ch]];
                let v01 = image[[y0, x1, ch]];
                let v10 = image[[y1, x0, ch]];
                let v11 = image[[y1, x1, ch]];
                out[[r, c, ch]] = v00 * (1.0 - fy) * (1.0 - fx)
                    + v01 * (1.0 - fy) * fx
                    + v10 * fy * (1.0 - fx)
                    + v11 * fy * fx;
            }
        }
    }
    out
}

/// Strategy one: random crop to `cfg.crop_size`, small random rotation,
/// random horizontal mirror.
pub fn strategy_one<R: Rng>(image: &ImageTensor, rng: &mut R, cfg: &AugmentConfig) -> Result<ImageTensor> {
    let side = image.shape()[0];
    cfg.validate(side)?;
    let params = draw_geom_params(rng, side, cfg);
    apply_geom(image, &params, cfg.crop_size)
}

/// Strategy two: per-channel histogram equalization over 256 levels.
///
/// Pixels are quantized to v ∈ {0..255}; each occupied level maps to
/// round((cdf(v) − cdf_min) / (N − cdf_min) · 255) / 255 where N is the
/// pixel count and cdf_min is the cdf at the lowest occupied level.
/// Constant channels are returned unchanged.
pub fn strategy_two(image: &ImageTensor) -> ImageTensor {
    let (h, w, _) = image.dim();
    let n = h * w;
    let mut out = image.clone();
    for ch in 0..3 {
        let mut hist = [0usize; 256];
        for r in 0..h {
            for c in 0..w {
                hist[quantize(image[[r, c, ch]])] += 1;
            }
        }
        let mut cdf = [0usize; 256];
        let mut acc = 0;
        for v in 0..256 {
            acc += hist[v];
            cdf[v] = acc;
        }
        let cdf_min = match hist.iter().position(|&count| count > 0) {
            Some(first) => cdf[first],
            None => continue,
        };
        if cdf_min == n {
            continue; // constant channel: the map degenerates
        }
        let denom = (n - cdf_min) as f64;
        let mut lut = [0.0f64; 256];
        for v in 0..256 {
            lut[v] = ((cdf[v] - cdf_min.min(cdf[v])) as f64 / denom * 255.0).round() / 255.0;
        }
        for r in 0..h {
            for c in 0..w {
                out[[r, c, ch]] = lut[quantize(image[[r, c, ch]])];
            }
        }
    }
    out
}

fn quantize(v: f64) -> usize {
    (v.clamp(0.0, 1.0) * 255.0).round() as usize
}

/// Full train-time pipeline: geometric augmentation blended with its
/// equalized version, out = w·A1 + (1−w)·equalize(A1).
///
/// With `enabled = false` this is a deterministic center crop, the same
/// path evaluation uses.
pub fn augment<R: Rng>(image: &ImageTensor, rng: &mut R, cfg: &AugmentConfig) -> Result<ImageTensor> {
    if !cfg.enabled {
        return center_crop(image, cfg.crop_size);
    }
    let a1 = strategy_one(image, rng, cfg)?;
    let a2 = strategy_two(&a1);
    let w = cfg.blend_weight;
    // Exact at both endpoints: 1·a + 0·b = a and 0·a + 1·b = b in IEEE754.
    Ok(&a1 * w + &a2 * (1.0 - w))
}

/// Deterministic center crop used by the evaluation path.
pub fn center_crop(image: &ImageTensor, crop_size: usize) -> Result<ImageTensor> {
    let side = image.shape()[0];
    if crop_size == 0 || crop_size > side {
        return Err(Error::validation(format!(
            "crop_size {} invalid for input side {}",
            crop_size, side
        )));
    }
    let off = (side - crop_size) / 2;
    let params = GeomParams {
        offset: (off, off),
        angle_degrees: 0.0,
        mirror: false,
    };
    apply_geom(image, &params, crop_size)
}
