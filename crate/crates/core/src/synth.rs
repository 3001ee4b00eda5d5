//! Synthetic biased-dataset generator.
//!
//! Each image carries two visually separable cues in disjoint regions: a
//! class-indexed geometric pattern in a central box, and one horizontal
//! tint band per attribute group whose color encodes the category. With
//! probability ρ a biased group's category equals the class-linked
//! category (class index modulo group size); otherwise it is drawn from
//! the group's marginal distribution. Because the regions are disjoint,
//! perfect unbiased classification remains possible at every ρ, so any
//! fairness gap measured on this data is attributable to shortcut
//! learning.
//!
//! Images are quantized to the 8-bit grid in memory and written as
//! lossless PNG, so the on-disk dataset round-trips exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng_indexed;
use crate::schema::{AttributeSchema, ImageTensor, Sample};

/// Category tint palette; caps group size at 8 categories.
const PALETTE: [[f64; 3]; 8] = [
    [0.90, 0.10, 0.10],
    [0.10, 0.20, 0.90],
    [0.10, 0.80, 0.20],
    [0.90, 0.85, 0.10],
    [0.85, 0.10, 0.85],
    [0.10, 0.85, 0.85],
    [0.95, 0.55, 0.10],
    [0.50, 0.15, 0.80],
];

/// Number of distinct class patterns available.
pub const MAX_CLASSES: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub image_side: usize,
    pub k: usize,
    pub schema: AttributeSchema,
    /// Per-group probability that the attribute equals the class-linked
    /// category; groups absent from the map are unbiased (ρ = 0).
    pub rho: BTreeMap<String, f64>,
    /// Per-group category marginals used for the non-linked draws.
    pub marginals: BTreeMap<String, Vec<f64>>,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// RAF-style defaults: the three-group schema with the test-set
    /// marginals (race 77.4/7.1/15.5, gender 43.7/56.3, age
    /// 5.5/16.4/57.5/17.4/3.2) and seven classes.
    pub fn raf_default(n_samples: usize, seed: u64) -> Self {
        let schema = AttributeSchema::raf_default();
        let mut marginals = BTreeMap::new();
        marginals.insert("race".to_string(), vec![0.774, 0.071, 0.155]);
        marginals.insert("gender".to_string(), vec![0.437, 0.563]);
        marginals.insert("age".to_string(), vec![0.055, 0.164, 0.575, 0.174, 0.032]);
        Self {
            n_samples,
            image_side: 100,
            k: 7,
            schema,
            rho: BTreeMap::new(),
            marginals,
            noise_std: 0.08,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be positive"));
        }
        if self.image_side < 16 {
            return Err(Error::validation("image_side must be at least 16"));
        }
        if self.k == 0 || self.k > MAX_CLASSES {
            return Err(Error::validation(format!(
                "k must be in [1, {MAX_CLASSES}], got {}",
                self.k
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::validation("noise_std must be nonnegative"));
        }
        for (group, rho) in &self.rho {
            if self.schema.group(group).is_none() {
                return Err(Error::validation(format!("rho.{group}: unknown group")));
            }
            if !(0.0..=1.0).contains(rho) {
                return Err(Error::validation(format!("rho.{group} must be in [0,1], got {rho}")));
            }
        }
        for g in self.schema.groups() {
            if g.categories.len() > PALETTE.len() {
                return Err(Error::validation(format!(
                    "group {:?} has {} categories; the renderer supports up to {}",
                    g.name,
                    g.categories.len(),
                    PALETTE.len()
                )));
            }
            let m = self.marginals.get(&g.name).ok_or_else(|| {
                Error::validation(format!("marginals.{}: missing for group", g.name))
            })?;
            if m.len() != g.categories.len() {
                return Err(Error::validation(format!(
                    "marginals.{}: expected {} entries, got {}",
                    g.name,
                    g.categories.len(),
                    m.len()
                )));
            }
            if m.iter().any(|&p| p < 0.0) {
                return Err(Error::validation(format!("marginals.{}: negative entry", g.name)));
            }
            let sum: f64 = m.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "marginals.{}: must sum to 1, got {sum}",
                    g.name
                )));
            }
        }
        if self.schema.groups().len() > 3 {
            return Err(Error::validation("the renderer lays out at most 3 attribute bands"));
        }
        Ok(())
    }

    /// The class-linked category for a biased group: class index modulo
    /// the group's category count.
    pub fn linked_category(&self, group_size: usize, class: usize) -> usize {
        class % group_size
    }
}

fn draw_from(marginals: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, &p) in marginals.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    marginals.len() - 1
}

/// Layout in relative coordinates: attribute band rows for group j, and
/// the class-pattern box. Everything sits in the central region so that
/// moderate crops keep both cues visible.
fn band_rows(side: usize, group_index: usize) -> (usize, usize) {
    let start = 0.14 + 0.09 * group_index as f64;
    let r0 = (start * side as f64).round() as usize;
    let r1 = ((start + 0.06) * side as f64).round() as usize;
    (r0, r1.max(r0 + 1))
}

fn band_cols(side: usize) -> (usize, usize) {
    let c0 = (0.25 * side as f64).round() as usize;
    let c1 = (0.80 * side as f64).round() as usize;
    (c0, c1.max(c0 + 1))
}

fn pattern_box(side: usize) -> (usize, usize, usize, usize) {
    let r0 = (0.45 * side as f64).round() as usize;
    let r1 = (0.88 * side as f64).round() as usize;
    let c0 = (0.28 * side as f64).round() as usize;
    let c1 = (0.85 * side as f64).round() as usize;
    (r0, r1.max(r0 + 2), c0, c1.max(c0 + 2))
}

/// Whether the pattern for `class` covers normalized box coordinates
/// (u, v) with u = column fraction, v = row fraction.
fn pattern_hit(class: usize, u: f64, v: f64) -> bool {
    match class {
        0 => (0.15..=0.85).contains(&u) && (0.15..=0.85).contains(&v),
        1 => {
            let (du, dv) = (u - 0.5, v - 0.5);
            du * du + dv * dv <= 0.38 * 0.38
        }
        2 => (u - 0.5).abs() < 0.16 || (v - 0.5).abs() < 0.16,
        3 => (u - v).abs() < 0.16 || (u + v - 1.0).abs() < 0.16,
        4 => v >= 0.15 && v <= 0.9 && (u - 0.5).abs() <= 0.55 * (v - 0.15) / 0.75,
        5 => ((v * 4.0).floor() as i64) % 2 == 0,
        6 => {
            let in_outer = (0.1..=0.9).contains(&u) && (0.1..=0.9).contains(&v);
            let in_inner = (0.32..=0.68).contains(&u) && (0.32..=0.68).contains(&v);
            in_outer && !in_inner
        }
        7 => ((u * 4.0).floor() as i64) % 2 == 0,
        _ => false,
    }
}

const BACKGROUND: f64 = 0.25;
const PATTERN_VALUE: f64 = 0.95;

fn quantize_to_u8_grid(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

fn render(cfg: &SynthConfig, class: usize, attributes: &[usize], rng: &mut impl Rng) -> ImageTensor {
    let side = cfg.image_side;
    let mut img = Array3::from_elem((side, side, 3), BACKGROUND);

    for (j, (&a, group)) in attributes.iter().zip(cfg.schema.groups()).enumerate() {
        debug_assert!(a < group.categories.len());
        let (r0, r1) = band_rows(side, j);
        let (c0, c1) = band_cols(side);
        let color = PALETTE[a];
        for r in r0..r1.min(side) {
            for c in c0..c1.min(side) {
                for ch in 0..3 {
                    img[[r, c, ch]] = color[ch];
                }
            }
        }
    }

    let (r0, r1, c0, c1) = pattern_box(side);
    for r in r0..r1.min(side) {
        for c in c0..c1.min(side) {
            let v = (r - r0) as f64 / (r1 - r0 - 1).max(1) as f64;
            let u = (c - c0) as f64 / (c1 - c0 - 1).max(1) as f64;
            if pattern_hit(class, u, v) {
                for ch in 0..3 {
                    img[[r, c, ch]] = PATTERN_VALUE;
                }
            }
        }
    }

    if cfg.noise_std > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_std).expect("finite std");
        img.mapv_inplace(|v| v + normal.sample(rng));
    }
    img.mapv_inplace(quantize_to_u8_grid);
    img
}

/// Generate the dataset in memory: class round-robin over [0, K), one
/// attribute draw per group, rendered image. Deterministic per seed; each
/// sample uses its own RNG stream derived from (seed, index).
pub fn generate(cfg: &SynthConfig) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let mut samples = Vec::with_capacity(cfg.n_samples);
    for i in 0..cfg.n_samples {
        let mut rng = derive_rng_indexed(cfg.seed, "synth-sample", i as u64);
        let class = i % cfg.k;
        let mut attributes = Vec::with_capacity(cfg.schema.groups().len());
        for group in cfg.schema.groups() {
            let size = group.categories.len();
            let marginals = &cfg.marginals[&group.name];
            let rho = cfg.rho.get(&group.name).copied().unwrap_or(0.0);
            let linked: f64 = rng.gen_range(0.0..1.0);
            let a = if linked < rho {
                cfg.linked_category(size, class)
            } else {
                draw_from(marginals, &mut rng)
            };
            attributes.push(a);
        }
        let image = render(cfg, class, &attributes, &mut rng);
        samples.push(Sample {
            id: format!("synth-{i:06}"),
            image,
            expression: class,
            attributes,
        });
    }
    Ok(samples)
}

/// Write PNG images plus a manifest CSV (`id,path,expression,<groups>`),
/// returning the samples and the manifest path.
pub fn write_dataset(
    cfg: &SynthConfig,
    vocab_labels: &[String],
    out_dir: &Path,
) -> Result<(Vec<Sample>, PathBuf)> {
    if vocab_labels.len() != cfg.k {
        return Err(Error::validation(format!(
            "expression vocabulary has {} labels, config k = {}",
            vocab_labels.len(),
            cfg.k
        )));
    }
    let samples = generate(cfg)?;
    let images_dir = out_dir.join("images");
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;

    for sample in &samples {
        let side = cfg.image_side as u32;
        let mut buf = image::RgbImage::new(side, side);
        for (x, y, pixel) in buf.enumerate_pixels_mut() {
            for ch in 0..3 {
                pixel.0[ch] =
                    (sample.image[[y as usize, x as usize, ch]] * 255.0).round() as u8;
            }
        }
        let path = images_dir.join(format!("{}.png", sample.id));
        buf.save(&path)?;
    }

    let manifest_path = out_dir.join("manifest.csv");
    let mut writer = csv::Writer::from_path(&manifest_path)?;
    let mut header = vec!["id".to_string(), "path".to_string(), "expression".to_string()];
    header.extend(cfg.schema.groups().iter().map(|g| g.name.clone()));
    writer.write_record(&header)?;
    for sample in &samples {
        let mut row = vec![
            sample.id.clone(),
            format!("images/{}.png", sample.id),
            vocab_labels[sample.expression].clone(),
        ];
        for (&a, group) in sample.attributes.iter().zip(cfg.schema.groups()) {
            row.push(group.categories[a].clone());
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(&manifest_path, e))?;
    Ok((samples, manifest_path))
}

/// Per-group contingency table: classes × categories, exact counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub group: String,
    pub categories: Vec<String>,
    /// counts[class][category]
    pub counts: Vec<Vec<usize>>,
    /// Column sums as fractions of the total, Table-style marginals row.
    pub marginals: Vec<f64>,
}

impl ContingencyTable {
    pub fn total(&self) -> usize {
        self.counts.iter().map(|row| row.iter().sum::<usize>()).sum()
    }

    pub fn to_markdown(&self, class_names: &[String]) -> String {
        let mut out = String::new();
        out.push_str(&format!("| class | {} |\n", self.categories.join(" | ")));
        out.push_str(&format!("|---{}|\n", "|---".repeat(self.categories.len())));
        for (class, row) in self.counts.iter().enumerate() {
            let label = class_names.get(class).cloned().unwrap_or_else(|| format!("class {class}"));
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("| {label} | {} |\n", cells.join(" | ")));
        }
        let pct: Vec<String> = self.marginals.iter().map(|m| format!("{:.1}%", m * 100.0)).collect();
        out.push_str(&format!("| pct. | {} |\n", pct.join(" | ")));
        out
    }
}

/// Exact class × category counts for every group.
pub fn bias_audit(samples: &[Sample], schema: &AttributeSchema, k: usize) -> Result<Vec<ContingencyTable>> {
    if samples.is_empty() {
        return Err(Error::validation("bias_audit on empty sample set"));
    }
    let mut tables = Vec::with_capacity(schema.groups().len());
    for (j, group) in schema.groups().iter().enumerate() {
        let mut counts = vec![vec![0usize; group.categories.len()]; k];
        for s in samples {
            counts[s.expression][s.attributes[j]] += 1;
        }
        let total: usize = samples.len();
        let marginals: Vec<f64> = (0..group.categories.len())
            .map(|c| counts.iter().map(|row| row[c]).sum::<usize>() as f64 / total as f64)
            .collect();
        tables.push(ContingencyTable {
            group: group.name.clone(),
            categories: group.categories.clone(),
            counts,
            marginals,
        });
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_cfg(n: usize, rho: f64, seed: u64) -> SynthConfig {
        let schema = AttributeSchema::from_pairs(&[("gender", &["A", "B"])]).unwrap();
        let mut rho_map = BTreeMap::new();
        rho_map.insert("gender".to_string(), rho);
        let mut marginals = BTreeMap::new();
        marginals.insert("gender".to_string(), vec![0.8, 0.2]);
        SynthConfig {
            n_samples: n,
            image_side: 48,
            k: 4,
            schema,
            rho: rho_map,
            marginals,
            noise_std: 0.05,
            seed,
        }
    }

    #[test]
    fn rho_one_links_attribute_to_class_exactly() {
        let mut cfg = binary_cfg(400, 1.0, 3);
        cfg.noise_std = 0.0;
        let samples = generate(&cfg).unwrap();
        for s in &samples {
            assert_eq!(s.attributes[0], s.expression % 2);
        }
    }

    #[test]
    fn rho_zero_attribute_independent_of_class() {
        let cfg = binary_cfg(10_000, 0.0, 5);
        let samples = generate(&cfg).unwrap();
        // Count-based mutual information estimate, in nats.
        let mut joint = [[0usize; 2]; 4];
        for s in &samples {
            joint[s.expression][s.attributes[0]] += 1;
        }
        let n = samples.len() as f64;
        let mut mi = 0.0;
        for c in 0..4 {
            for a in 0..2 {
                let pxy = joint[c][a] as f64 / n;
                if pxy == 0.0 {
                    continue;
                }
                let px = joint[c].iter().sum::<usize>() as f64 / n;
                let py = (0..4).map(|cc| joint[cc][a]).sum::<usize>() as f64 / n;
                mi += pxy * (pxy / (px * py)).ln();
            }
        }
        assert!(mi < 2e-3, "mutual information {mi} too high for independent draws");
        // Marginals should be near (0.8, 0.2).
        let a0 = samples.iter().filter(|s| s.attributes[0] == 0).count() as f64 / n;
        assert!((a0 - 0.8).abs() < 0.02, "marginal {a0}");
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = binary_cfg(20, 0.7, 9);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.expression, y.expression);
            assert_eq!(x.attributes, y.attributes);
            assert_eq!(x.image, y.image);
        }
    }

    #[test]
    fn images_are_quantized_and_in_range() {
        let cfg = binary_cfg(8, 0.5, 11);
        for s in generate(&cfg).unwrap() {
            for &v in s.image.iter() {
                assert!((0.0..=1.0).contains(&v));
                let scaled = v * 255.0;
                assert!((scaled - scaled.round()).abs() < 1e-9, "value {v} off the 8-bit grid");
            }
        }
    }

    #[test]
    fn distinct_classes_render_distinct_patterns() {
        let mut cfg = binary_cfg(8, 0.0, 13);
        cfg.noise_std = 0.0;
        cfg.k = 8;
        let samples = generate(&cfg).unwrap();
        for i in 0..8 {
            for j in (i + 1)..8 {
                // Compare only the pattern boxes; attributes may coincide.
                let diff = (&samples[i].image - &samples[j].image)
                    .mapv(f64::abs)
                    .sum();
                assert!(diff > 1.0, "classes {i} and {j} render identically");
            }
        }
    }

    #[test]
    fn audit_counts_sum_and_concentrate_at_rho_one() {
        let mut cfg = binary_cfg(400, 1.0, 15);
        cfg.noise_std = 0.0;
        let samples = generate(&cfg).unwrap();
        let tables = bias_audit(&samples, &cfg.schema, cfg.k).unwrap();
        assert_eq!(tables.len(), 1);
        let t = &tables[0];
        assert_eq!(t.total(), 400);
        for (class, row) in t.counts.iter().enumerate() {
            for (cat, &count) in row.iter().enumerate() {
                if cat == class % 2 {
                    assert!(count > 0);
                } else {
                    assert_eq!(count, 0, "off-linked cell ({class},{cat}) must be empty");
                }
            }
        }
    }

    #[test]
    fn audit_matches_naive_recount() {
        let cfg = binary_cfg(300, 0.6, 17);
        let samples = generate(&cfg).unwrap();
        let tables = bias_audit(&samples, &cfg.schema, cfg.k).unwrap();
        // Independent pass over the samples.
        for (class, row) in tables[0].counts.iter().enumerate() {
            for (cat, &count) in row.iter().enumerate() {
                let expect = samples
                    .iter()
                    .filter(|s| s.expression == class && s.attributes[0] == cat)
                    .count();
                assert_eq!(count, expect);
            }
        }
    }

    #[test]
    fn invalid_marginals_are_rejected() {
        let mut cfg = binary_cfg(10, 0.5, 19);
        cfg.marginals.insert("gender".to_string(), vec![0.9, 0.2]);
        assert!(cfg.validate().is_err());
        let mut cfg = binary_cfg(10, 1.5, 19);
        assert!(cfg.validate().is_err());
        cfg = binary_cfg(10, 0.5, 19);
        cfg.k = 9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn raf_default_marginals_mirror_the_reference_distribution() {
        let cfg = SynthConfig::raf_default(100, 1);
        cfg.validate().unwrap();
        assert_eq!(cfg.marginals["race"], vec![0.774, 0.071, 0.155]);
        assert_eq!(cfg.marginals["gender"], vec![0.437, 0.563]);
    }
}
