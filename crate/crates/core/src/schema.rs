//! Data model and ingestion: attribute schemas, samples, manifest loading,
//! one-hot attribute encoding and deterministic splits.
//!
//! The manifest is a UTF-8 CSV with header
//! `id,path,expression,<group1>,...,<groupN>[,split]`; image paths are
//! resolved relative to the manifest's directory.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array1, Array3};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// One sensitive attribute and its category labels (e.g. gender: Male/Female).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeGroup {
    pub name: String,
    pub categories: Vec<String>,
}

/// Ordered collection of sensitive-attribute groups.
///
/// Group names are unique, category names are unique within a group, and
/// every group has at least two categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AttributeGroup>", into = "Vec<AttributeGroup>")]
pub struct AttributeSchema {
    groups: Vec<AttributeGroup>,
}

impl TryFrom<Vec<AttributeGroup>> for AttributeSchema {
    type Error = Error;
    fn try_from(groups: Vec<AttributeGroup>) -> Result<Self> {
        AttributeSchema::new(groups)
    }
}

impl From<AttributeSchema> for Vec<AttributeGroup> {
    fn from(schema: AttributeSchema) -> Self {
        schema.groups
    }
}

impl AttributeSchema {
    pub fn new(groups: Vec<AttributeGroup>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::validation("schema needs at least one group"));
        }
        let mut names = BTreeSet::new();
        for g in &groups {
            if !names.insert(g.name.clone()) {
                return Err(Error::validation(format!("duplicate group name {:?}", g.name)));
            }
            if g.categories.len() < 2 {
                return Err(Error::validation(format!(
                    "group {:?} needs at least 2 categories, got {}",
                    g.name,
                    g.categories.len()
                )));
            }
            let mut cats = BTreeSet::new();
            for c in &g.categories {
                if !cats.insert(c.clone()) {
                    return Err(Error::validation(format!(
                        "duplicate category {:?} in group {:?}",
                        c, g.name
                    )));
                }
            }
        }
        Ok(Self { groups })
    }

    /// Convenience constructor from `(name, [categories])` pairs.
    pub fn from_pairs(pairs: &[(&str, &[&str])]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(name, cats)| AttributeGroup {
                    name: name.to_string(),
                    categories: cats.iter().map(|c| c.to_string()).collect(),
                })
                .collect(),
        )
    }

    /// The schema used throughout the RAF-style experiments: race (3),
    /// gender (2) and age (5).
    pub fn raf_default() -> Self {
        Self::from_pairs(&[
            ("race", &["Caucasian", "African-American", "Asian"]),
            ("gender", &["Male", "Female"]),
            ("age", &["0-3", "4-19", "20-39", "40-69", "70+"]),
        ])
        .expect("built-in schema is valid")
    }

    pub fn groups(&self) -> &[AttributeGroup] {
        &self.groups
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    pub fn group(&self, name: &str) -> Option<&AttributeGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Total one-hot width Σ_j |S_j|.
    pub fn one_hot_width(&self) -> usize {
        self.groups.iter().map(|g| g.categories.len()).sum()
    }

    /// Category counts per group, in schema order.
    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.categories.len()).collect()
    }

    /// Check one per-group attribute index vector against the schema.
    pub fn validate_attributes(&self, attributes: &[usize]) -> Result<()> {
        if attributes.len() != self.groups.len() {
            return Err(Error::validation(format!(
                "expected {} attribute indices, got {}",
                self.groups.len(),
                attributes.len()
            )));
        }
        for (g, &a) in self.groups.iter().zip(attributes) {
            if a >= g.categories.len() {
                return Err(Error::validation(format!(
                    "attribute index {} out of range for group {:?} (|S|={})",
                    a,
                    g.name,
                    g.categories.len()
                )));
            }
        }
        Ok(())
    }
}

/// Ordered expression class labels; index = class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressionVocab(Vec<String>);

impl ExpressionVocab {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::validation("expression vocabulary is empty"));
        }
        let unique: BTreeSet<_> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::validation("duplicate expression label"));
        }
        Ok(Self(labels))
    }

    pub fn from_labels(labels: &[&str]) -> Result<Self> {
        Self::new(labels.iter().map(|s| s.to_string()).collect())
    }

    /// The seven basic expression categories in RAF order.
    pub fn raf_default() -> Self {
        Self::from_labels(&["Surprise", "Fear", "Disgust", "Happy", "Sad", "Anger", "Neutral"])
            .expect("built-in vocabulary is valid")
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.0.get(index).map(|s| s.as_str())
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    /// Number of classes K.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// H×W×3 image with values in [0,1].
pub type ImageTensor = Array3<f64>;

/// One labelled image: expression class plus one category index per
/// attribute group.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub image: ImageTensor,
    pub expression: usize,
    pub attributes: Vec<usize>,
}

impl Sample {
    pub fn side(&self) -> usize {
        self.image.shape()[0]
    }
}

/// Which split a manifest row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn parse(text: &str) -> Option<Split> {
        match text {
            "train" => Some(Split::Train),
            "val" | "validation" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Ingestion options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Target side after bilinear resize (images are normalized squares).
    pub resize_to: usize,
    /// Rows whose raw text for this group equals this label are dropped
    /// before label resolution.
    pub exclude: Vec<(String, String)>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            resize_to: 100,
            exclude: vec![("gender".to_string(), "Unsure".to_string())],
        }
    }
}

/// A sample together with its manifest split tag, if any.
#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub sample: Sample,
    pub split: Option<Split>,
}

/// Load a manifest CSV, decoding and resizing every referenced image.
///
/// Rows appear in file order. Rows whose excluded-group text matches the
/// configured exclusion label are dropped. Any unknown label or unreadable
/// image aborts the load with the offending row number.
pub fn load_manifest(
    path: &Path,
    schema: &AttributeSchema,
    vocab: &ExpressionVocab,
    opts: &LoadOptions,
) -> Result<Vec<ManifestEntry>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();

    let expected: Vec<String> = ["id", "path", "expression"]
        .iter()
        .map(|s| s.to_string())
        .chain(schema.groups().iter().map(|g| g.name.clone()))
        .collect();
    let actual: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    let has_split = actual.len() == expected.len() + 1 && actual.last().map(String::as_str) == Some("split");
    let body = if has_split { &actual[..expected.len()] } else { &actual[..] };
    if body != expected.as_slice() {
        return Err(Error::validation(format!(
            "manifest header mismatch: expected {:?} (+ optional split), got {:?}",
            expected, actual
        )));
    }

    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record?;
        let id = record[0].to_string();
        let image_path = base.join(&record[1]);
        let expression_text = &record[2];

        let mut excluded = false;
        let mut attributes = Vec::with_capacity(schema.groups().len());
        for (j, group) in schema.groups().iter().enumerate() {
            let text = &record[3 + j];
            if opts
                .exclude
                .iter()
                .any(|(g, label)| g == &group.name && label == text)
            {
                excluded = true;
                break;
            }
            match group.categories.iter().position(|c| c == text) {
                Some(idx) => attributes.push(idx),
                None => {
                    return Err(Error::Row {
                        row,
                        message: format!("unknown {} label {:?}", group.name, text),
                    })
                }
            }
        }
        if excluded {
            continue;
        }

        let expression = vocab.index_of(expression_text).ok_or_else(|| Error::Row {
            row,
            message: format!("unknown expression label {:?}", expression_text),
        })?;

        let split = if has_split {
            let text = &record[3 + schema.groups().len()];
            if text.is_empty() {
                None
            } else {
                Some(Split::parse(text).ok_or_else(|| Error::Row {
                    row,
                    message: format!("unknown split tag {:?}", text),
                })?)
            }
        } else {
            None
        };

        let image = decode_image(&image_path, opts.resize_to).map_err(|e| Error::Row {
            row,
            message: format!("unreadable image {}: {}", image_path.display(), e),
        })?;

        entries.push(ManifestEntry {
            sample: Sample {
                id,
                image,
                expression,
                attributes,
            },
            split,
        });
    }
    Ok(entries)
}

fn decode_image(path: &Path, resize_to: usize) -> Result<ImageTensor> {
    let img = image::open(path)?.into_rgb8();
    let resized = if (img.width() as usize, img.height() as usize) == (resize_to, resize_to) {
        img
    } else {
        image::imageops::resize(
            &img,
            resize_to as u32,
            resize_to as u32,
            image::imageops::FilterType::Triangle,
        )
    };
    let mut out = Array3::zeros((resize_to, resize_to, 3));
    for (x, y, pixel) in resized.enumerate_pixels() {
        for c in 0..3 {
            out[[y as usize, x as usize, c]] = pixel.0[c] as f64 / 255.0;
        }
    }
    Ok(out)
}

/// Concatenated one-hot encoding of a sample's attributes, in schema group
/// order; exactly one entry per group equals 1.
pub fn encode_attributes(sample: &Sample, schema: &AttributeSchema) -> Result<Array1<f64>> {
    schema.validate_attributes(&sample.attributes)?;
    let mut out = Array1::zeros(schema.one_hot_width());
    let mut offset = 0;
    for (group, &a) in schema.groups().iter().zip(&sample.attributes) {
        out[offset + a] = 1.0;
        offset += group.categories.len();
    }
    Ok(out)
}

/// Deterministically partition samples into train/val/test.
///
/// The partition depends only on (ids, fractions, seed): samples are
/// ordered by id, shuffled with a seeded RNG and cut by counts. Sizes use
/// floor for train and val; the remainder goes to test.
pub fn split_deterministic(
    samples: Vec<Sample>,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<Sample>, Vec<Sample>, Vec<Sample>)> {
    let (ft, fv, fe) = fractions;
    if ft < 0.0 || fv < 0.0 || fe < 0.0 {
        return Err(Error::validation("split fractions must be nonnegative"));
    }
    if (ft + fv + fe - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "split fractions must sum to 1, got {}",
            ft + fv + fe
        )));
    }
    let mut samples = samples;
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut derive_rng(seed, "split"));

    let n_train = (ft * n as f64).floor() as usize;
    let n_val = (fv * n as f64).floor() as usize;

    let mut by_slot: Vec<Option<Sample>> = samples.into_iter().map(Some).collect();
    let take = |slots: &mut Vec<Option<Sample>>, idx: &[usize]| -> Vec<Sample> {
        idx.iter().map(|&i| slots[i].take().expect("one slot per index")).collect()
    };
    let train = take(&mut by_slot, &order[..n_train]);
    let val = take(&mut by_slot, &order[n_train..n_train + n_val]);
    let test = take(&mut by_slot, &order[n_train + n_val..]);
    Ok((train, val, test))
}
