//! Checkpoints: a raw little-endian f64 parameter blob plus a JSON sidecar
//! describing the architecture, training position and RNG state.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamVisit;
use crate::rng::derive_rng;
use crate::schema::AttributeSchema;

use super::{BackboneVariant, HeadKind, ModelBundle};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub len: usize,
}

/// Sidecar contents; `tensors` and `buffers` describe the blob layout in
/// order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub variant: BackboneVariant,
    pub input_side: usize,
    pub feature_dim: usize,
    pub head_kind: HeadKind,
    pub k: usize,
    pub schema: Option<AttributeSchema>,
    pub alpha: f64,
    pub step: u64,
    pub epoch: u64,
    /// Base seed of the run; together with `epoch` this pins the data-order
    /// and augmentation RNG streams.
    pub base_seed: u64,
    pub tensors: Vec<TensorInfo>,
    pub buffers: Vec<TensorInfo>,
}

fn blob_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

fn sidecar_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

/// Write `<stem>.bin` and `<stem>.json`.
pub fn save_checkpoint(
    bundle: &ModelBundle,
    stem: &Path,
    step: u64,
    epoch: u64,
    base_seed: u64,
) -> Result<()> {
    let mut tensors = Vec::new();
    let mut blob: Vec<u8> = Vec::new();
    bundle.visit("", &mut |name, values| {
        tensors.push(TensorInfo {
            name: name.to_string(),
            len: values.len(),
        });
        for v in values {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    });
    let mut buffers = Vec::new();
    bundle.visit_buffers("", &mut |name, values| {
        buffers.push(TensorInfo {
            name: name.to_string(),
            len: values.len(),
        });
        for v in values {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    });

    let meta = CheckpointMeta {
        variant: bundle.backbone.variant,
        input_side: bundle.backbone.input_side,
        feature_dim: bundle.backbone.feature_dim,
        head_kind: bundle.head.kind,
        k: bundle.head.k,
        schema: bundle.head.schema.clone(),
        alpha: bundle.head.alpha,
        step,
        epoch,
        base_seed,
        tensors,
        buffers,
    };

    if let Some(parent) = stem.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let bin = blob_path(stem);
    std::fs::File::create(&bin)
        .and_then(|mut f| f.write_all(&blob))
        .map_err(|e| Error::io(&bin, e))?;
    let json = sidecar_path(stem);
    let text = serde_json::to_string_pretty(&meta)?;
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(())
}

/// Rebuild a bundle from `<stem>.bin` + `<stem>.json`. The gradient policy
/// is the default for the head kind; callers with a custom policy set it
/// afterwards.
pub fn load_checkpoint(stem: &Path) -> Result<(ModelBundle, CheckpointMeta)> {
    let json = sidecar_path(stem);
    let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;

    let bin = blob_path(stem);
    let mut blob = Vec::new();
    std::fs::File::open(&bin)
        .and_then(|mut f| f.read_to_end(&mut blob))
        .map_err(|e| Error::io(&bin, e))?;

    let mut rng = derive_rng(0, "checkpoint-skeleton");
    let mut bundle = ModelBundle::build(
        meta.variant,
        meta.input_side,
        meta.feature_dim,
        meta.head_kind,
        meta.k,
        meta.schema.clone(),
        meta.alpha.max(0.0),
        &mut rng,
    )?;

    let expected: usize = meta.tensors.iter().chain(&meta.buffers).map(|t| t.len).sum();
    if blob.len() != expected * 8 {
        return Err(Error::validation(format!(
            "checkpoint blob holds {} bytes, sidecar describes {}",
            blob.len(),
            expected * 8
        )));
    }

    let mut cursor = 0usize;
    let mut layout = meta.tensors.iter();
    let mut mismatch: Option<String> = None;
    bundle.visit_mut("", &mut |name, values| {
        if mismatch.is_some() {
            return;
        }
        match layout.next() {
            Some(info) if info.name == name && info.len == values.len() => {
                for v in values.iter_mut() {
                    let bytes: [u8; 8] = blob[cursor..cursor + 8].try_into().expect("length checked");
                    *v = f64::from_le_bytes(bytes);
                    cursor += 8;
                }
            }
            other => {
                mismatch = Some(format!(
                    "tensor layout mismatch at {name:?} (sidecar has {other:?})"
                ));
            }
        }
    });
    if mismatch.is_none() {
        let mut layout = meta.buffers.iter();
        bundle.visit_buffers_mut("", &mut |name, values| {
            if mismatch.is_some() {
                return;
            }
            match layout.next() {
                Some(info) if info.name == name && info.len == values.len() => {
                    for v in values.iter_mut() {
                        let bytes: [u8; 8] =
                            blob[cursor..cursor + 8].try_into().expect("length checked");
                        *v = f64::from_le_bytes(bytes);
                        cursor += 8;
                    }
                }
                other => {
                    mismatch = Some(format!(
                        "buffer layout mismatch at {name:?} (sidecar has {other:?})"
                    ));
                }
            }
        });
    }
    if let Some(message) = mismatch {
        return Err(Error::validation(message));
    }
    Ok((bundle, meta))
}
