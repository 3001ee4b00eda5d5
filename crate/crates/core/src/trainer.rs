//! Optimization loop: Adam with step-decayed learning rate, early stopping
//! on mean class-wise validation accuracy, per-approach loss wiring routed
//! through the bundle's gradient policy, and checkpointing. Fully seeded:
//! the same (seed, data, config) yields byte-identical logs and
//! checkpoints.

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array4};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::{augment, center_crop, AugmentConfig};
use crate::error::{Error, Result};
use crate::model::{
    all_components, apply_all_gradients, compute_gradients, forward_expression, save_checkpoint,
    BatchTargets, HeadKind, ModelBundle,
};
use crate::nn::{softmax_rows, Adam, Linear};
use crate::records::{argmax_lowest, PredictionRecord};
use crate::rng::{derive_rng, derive_rng_indexed};
use crate::schema::{encode_attributes, AttributeSchema, ImageTensor, Sample};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub initial_lr: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every_epochs: usize,
    pub max_epochs: usize,
    pub early_stop_patience_epochs: usize,
    pub seed: u64,
    pub approach: HeadKind,
    pub alpha: f64,
    pub augment: AugmentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            initial_lr: 0.001,
            lr_decay_factor: 0.1,
            lr_decay_every_epochs: 40,
            max_epochs: 200,
            early_stop_patience_epochs: 30,
            seed: 0,
            approach: HeadKind::Baseline,
            alpha: 1.0,
            augment: AugmentConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be positive"));
        }
        if self.initial_lr <= 0.0 || self.lr_decay_factor <= 0.0 {
            return Err(Error::validation("learning rates must be positive"));
        }
        if self.lr_decay_every_epochs == 0 || self.max_epochs == 0 {
            return Err(Error::validation("epoch counts must be positive"));
        }
        if self.early_stop_patience_epochs > self.max_epochs {
            return Err(Error::validation("patience must not exceed max_epochs"));
        }
        Ok(())
    }

    /// Step decay: lr = initial · factor^floor(epoch / every).
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        self.initial_lr
            * self
                .lr_decay_factor
                .powi((epoch / self.lr_decay_every_epochs) as i32)
    }
}

/// Early-stopping bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainState {
    pub epoch: usize,
    pub step: u64,
    pub current_lr: f64,
    pub best_monitor_value: f64,
    pub epochs_since_improvement: usize,
}

impl TrainState {
    pub fn new() -> Self {
        Self {
            epoch: 0,
            step: 0,
            current_lr: 0.0,
            best_monitor_value: f64::NEG_INFINITY,
            epochs_since_improvement: 0,
        }
    }

    /// Record an epoch's monitor value. Returns true when the value
    /// improved (strictly).
    pub fn observe(&mut self, monitor: f64) -> bool {
        if monitor > self.best_monitor_value {
            self.best_monitor_value = monitor;
            self.epochs_since_improvement = 0;
            true
        } else {
            self.epochs_since_improvement += 1;
            false
        }
    }

    pub fn should_stop(&self, patience: usize) -> bool {
        self.epochs_since_improvement >= patience
    }
}

impl Default for TrainState {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    /// Stem of the best-by-monitor checkpoint (`<stem>.bin` + `<stem>.json`).
    pub best_checkpoint: PathBuf,
    pub epochs_run: usize,
    pub best_monitor: f64,
    pub steps: u64,
}

fn to_chw(image: &ImageTensor) -> ndarray::Array3<f64> {
    let (h, w, _) = image.dim();
    ndarray::Array3::from_shape_fn((3, h, w), |(c, y, x)| image[[y, x, c]])
}

fn stack_images(images: &[ndarray::Array3<f64>]) -> Array4<f64> {
    let (c, h, w) = images[0].dim();
    let mut out = Array4::zeros((images.len(), c, h, w));
    for (i, img) in images.iter().enumerate() {
        out.index_axis_mut(ndarray::Axis(0), i).assign(img);
    }
    out
}

fn attribute_matrix(samples: &[&Sample], schema: &AttributeSchema) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((samples.len(), schema.one_hot_width()));
    for (i, sample) in samples.iter().enumerate() {
        let v = encode_attributes(sample, schema)?;
        out.row_mut(i).assign(&v);
    }
    Ok(out)
}

/// Train a bundle on `train_set`, monitoring mean class-wise accuracy on
/// `val_set`. Writes `train_log.csv` (per step), `epoch_log.csv` and the
/// best/final checkpoints under `out_dir`.
pub fn train(
    mut bundle: ModelBundle,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if bundle.head.kind != cfg.approach {
        return Err(Error::validation(format!(
            "bundle head {:?} does not match configured approach {:?}",
            bundle.head.kind, cfg.approach
        )));
    }
    let side = train_set[0].side();
    cfg.augment.validate(side)?;
    if bundle.backbone.input_side != cfg.augment.crop_size {
        return Err(Error::validation(format!(
            "backbone expects side {}, augment crop is {}",
            bundle.backbone.input_side, cfg.augment.crop_size
        )));
    }
    if let Some(schema) = &bundle.head.schema {
        for s in train_set.iter().chain(val_set) {
            schema.validate_attributes(&s.attributes)?;
        }
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let train_log_path = out_dir.join("train_log.csv");
    let epoch_log_path = out_dir.join("epoch_log.csv");
    let mut train_log = std::fs::File::create(&train_log_path).map_err(|e| Error::io(&train_log_path, e))?;
    let mut epoch_log = std::fs::File::create(&epoch_log_path).map_err(|e| Error::io(&epoch_log_path, e))?;
    writeln!(train_log, "step,exp,s,conf,total,alpha").map_err(|e| Error::io(&train_log_path, e))?;
    writeln!(epoch_log, "epoch,val_monitor,lr").map_err(|e| Error::io(&epoch_log_path, e))?;

    let best_stem = out_dir.join("best");
    let mut opt = Adam::new();
    let mut state = TrainState::new();
    let components = all_components(cfg.approach);
    let mut best_saved = false;

    let log_io = |e: std::io::Error, p: &Path| Error::io(p, e);

    'epochs: for epoch in 0..cfg.max_epochs {
        state.epoch = epoch;
        state.current_lr = cfg.lr_at_epoch(epoch);

        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut derive_rng_indexed(cfg.seed, "epoch-order", epoch as u64));

        for chunk in order.chunks(cfg.batch_size) {
            let samples: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let mut images = Vec::with_capacity(samples.len());
            for s in &samples {
                let mut rng = derive_rng_indexed(cfg.seed, &format!("augment:{}", s.id), epoch as u64);
                let img = augment(&s.image, &mut rng, &cfg.augment)?;
                images.push(to_chw(&img));
            }
            let batch = stack_images(&images);
            let targets = BatchTargets {
                expressions: samples.iter().map(|s| s.expression).collect(),
                attributes: samples.iter().map(|s| s.attributes.clone()).collect(),
            };
            let attrs = match cfg.approach {
                HeadKind::AttributeAware => {
                    let schema = bundle.head.schema.as_ref().expect("attribute_aware has schema");
                    Some(attribute_matrix(&samples, schema)?)
                }
                _ => None,
            };
            let step_result =
                compute_gradients(&mut bundle, &batch, &targets, attrs.as_ref(), components);
            let (breakdown, grads) = match step_result {
                Ok(x) => x,
                Err(e) => {
                    return Err(Error::Training {
                        message: format!("step {} failed: {e}", state.step),
                        last_good_checkpoint: best_saved.then(|| best_stem.clone()),
                    })
                }
            };
            if !breakdown.total.is_finite() {
                return Err(Error::Training {
                    message: format!("non-finite loss at step {}", state.step),
                    last_good_checkpoint: best_saved.then(|| best_stem.clone()),
                });
            }
            apply_all_gradients(&mut bundle, &grads, &mut opt, state.current_lr);
            writeln!(
                train_log,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                state.step, breakdown.exp, breakdown.s, breakdown.conf, breakdown.total, breakdown.alpha
            )
            .map_err(|e| log_io(e, &train_log_path))?;
            state.step += 1;
        }

        let monitor = if val_set.is_empty() {
            // No validation data: treat every epoch as an improvement and
            // keep the latest model as best.
            state.best_monitor_value.max(0.0) + 1.0
        } else {
            mean_classwise_accuracy(&evaluate(&bundle, val_set)?)
        };
        writeln!(epoch_log, "{},{:.17e},{:.17e}", epoch, monitor, state.current_lr)
            .map_err(|e| log_io(e, &epoch_log_path))?;

        if state.observe(monitor) {
            save_checkpoint(&bundle, &best_stem, state.step, epoch as u64, cfg.seed)?;
            best_saved = true;
        }
        if state.should_stop(cfg.early_stop_patience_epochs) {
            state.epoch = epoch + 1;
            break 'epochs;
        }
        state.epoch = epoch + 1;
    }

    if !best_saved {
        save_checkpoint(&bundle, &best_stem, state.step, state.epoch as u64, cfg.seed)?;
    }
    save_checkpoint(&bundle, &out_dir.join("final"), state.step, state.epoch as u64, cfg.seed)?;
    train_log.flush().map_err(|e| log_io(e, &train_log_path))?;
    epoch_log.flush().map_err(|e| log_io(e, &epoch_log_path))?;

    Ok(TrainOutcome {
        bundle,
        best_checkpoint: best_stem,
        epochs_run: state.epoch,
        best_monitor: state.best_monitor_value,
        steps: state.step,
    })
}

/// Mean of per-class recalls — the early-stopping monitor.
pub fn mean_classwise_accuracy(records: &[PredictionRecord]) -> f64 {
    let mut total: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut correct: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for r in records {
        *total.entry(r.true_class).or_default() += 1;
        if r.is_correct() {
            *correct.entry(r.true_class).or_default() += 1;
        }
    }
    if total.is_empty() {
        return 0.0;
    }
    let sum: f64 = total
        .iter()
        .map(|(c, &n)| correct.get(c).copied().unwrap_or(0) as f64 / n as f64)
        .sum();
    sum / total.len() as f64
}

/// Deterministic evaluation: center crop, forward in inference mode, one
/// record per sample in input order; argmax ties go to the lowest index.
pub fn evaluate(bundle: &ModelBundle, eval_set: &[Sample]) -> Result<Vec<PredictionRecord>> {
    let side = bundle.backbone.input_side;
    if let Some(schema) = &bundle.head.schema {
        for s in eval_set {
            schema.validate_attributes(&s.attributes)?;
        }
    }
    let mut records = Vec::with_capacity(eval_set.len());
    for chunk in eval_set.chunks(64) {
        let images: Vec<ndarray::Array3<f64>> = chunk
            .iter()
            .map(|s| center_crop(&s.image, side).map(|img| to_chw(&img)))
            .collect::<Result<_>>()?;
        let batch = stack_images(&images);
        let attrs = match bundle.head.kind {
            HeadKind::AttributeAware => {
                let schema = bundle.head.schema.as_ref().expect("attribute_aware has schema");
                let refs: Vec<&Sample> = chunk.iter().collect();
                Some(attribute_matrix(&refs, schema)?)
            }
            _ => None,
        };
        let probs = forward_expression(bundle, &batch, attrs.as_ref())?;
        for (i, sample) in chunk.iter().enumerate() {
            let row: Vec<f64> = probs.row(i).to_vec();
            records.push(PredictionRecord {
                id: sample.id.clone(),
                true_class: sample.expression,
                predicted: argmax_lowest(&row),
                probs: row,
                attributes: sample.attributes.clone(),
            });
        }
    }
    Ok(records)
}

/// Fit an affine+softmax probe on frozen features to predict one attribute
/// group; returns plain accuracy on the probe test set. Measures how much
/// attribute information survives in φ.
pub fn probe_attributes(
    bundle: &ModelBundle,
    schema: &AttributeSchema,
    probe_train: &[Sample],
    probe_test: &[Sample],
    group: &str,
) -> Result<f64> {
    let gi = schema
        .group_index(group)
        .ok_or_else(|| Error::validation(format!("unknown group {group:?}")))?;
    let width = schema.groups()[gi].categories.len();
    if probe_train.is_empty() || probe_test.is_empty() {
        return Err(Error::validation("probe sets must be nonempty"));
    }

    let features = |set: &[Sample]| -> Result<(Array2<f64>, Vec<usize>)> {
        let side = bundle.backbone.input_side;
        let mut feats: Option<Array2<f64>> = None;
        let mut labels = Vec::with_capacity(set.len());
        let mut row = 0usize;
        for chunk in set.chunks(64) {
            let images: Vec<ndarray::Array3<f64>> = chunk
                .iter()
                .map(|s| center_crop(&s.image, side).map(|img| to_chw(&img)))
                .collect::<Result<_>>()?;
            let batch = stack_images(&images);
            let f = bundle.backbone.forward_eval(&batch)?;
            let all = feats.get_or_insert_with(|| Array2::zeros((set.len(), f.dim().1)));
            for i in 0..chunk.len() {
                all.row_mut(row).assign(&f.row(i));
                labels.push(chunk[i].attributes[gi]);
                row += 1;
            }
        }
        Ok((feats.expect("nonempty set"), labels))
    };

    let (x_train, y_train) = features(probe_train)?;
    let (x_test, y_test) = features(probe_test)?;

    let mut probe = Linear::new(bundle.backbone.feature_dim, width, &mut derive_rng(0x70b3, "probe-init"));
    let mut opt = Adam::new();
    let n = x_train.dim().0 as f64;
    for _ in 0..300 {
        let probs = softmax_rows(&probe.forward(&x_train));
        let mut dlogits = probs;
        for (i, &y) in y_train.iter().enumerate() {
            dlogits[[i, y]] -= 1.0;
        }
        dlogits /= n;
        let (dw, db) = probe.param_grads(&x_train, &dlogits);
        opt.update("probe.weight", probe.w.as_slice_mut().expect("owned"), dw.as_slice().expect("owned"), 0.05);
        opt.update("probe.bias", probe.b.as_slice_mut().expect("owned"), db.as_slice().expect("owned"), 0.05);
    }

    let probs = softmax_rows(&probe.forward(&x_test));
    let mut correct = 0usize;
    for (i, &y) in y_test.iter().enumerate() {
        if argmax_lowest(&probs.row(i).to_vec()) == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / y_test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BackboneVariant, ModelBundle};
    use ndarray::Array3;

    #[test]
    fn lr_schedule_follows_step_decay() {
        let cfg = TrainConfig {
            lr_decay_every_epochs: 40,
            ..TrainConfig::default()
        };
        assert!((cfg.lr_at_epoch(0) - 0.001).abs() < 1e-15);
        assert!((cfg.lr_at_epoch(39) - 0.001).abs() < 1e-15);
        assert!((cfg.lr_at_epoch(40) - 0.0001).abs() < 1e-15);
        assert!((cfg.lr_at_epoch(80) - 0.00001).abs() < 1e-15);
    }

    #[test]
    fn lr_schedule_closed_form_over_random_epochs() {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(1, "lr");
        for _ in 0..200 {
            let every = rng.gen_range(1..50usize);
            let epoch = rng.gen_range(0..500usize);
            let cfg = TrainConfig {
                lr_decay_every_epochs: every,
                ..TrainConfig::default()
            };
            let expect = 0.001 * 0.1f64.powi((epoch / every) as i32);
            assert!((cfg.lr_at_epoch(epoch) - expect).abs() <= 1e-18 + 1e-12 * expect);
        }
    }

    #[test]
    fn flat_monitor_stops_after_patience_epochs() {
        let mut state = TrainState::new();
        assert!(state.observe(0.5)); // first epoch always improves
        let patience = 30;
        let mut stopped_at = None;
        for epoch in 1..100 {
            state.observe(0.5); // flat
            if state.should_stop(patience) {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(30));
    }

    #[test]
    fn improvement_resets_patience() {
        let mut state = TrainState::new();
        state.observe(0.1);
        state.observe(0.1);
        state.observe(0.1);
        assert_eq!(state.epochs_since_improvement, 2);
        assert!(state.observe(0.2));
        assert_eq!(state.epochs_since_improvement, 0);
    }

    fn toy_samples(n: usize, side: usize, k: usize, seed: u64) -> Vec<Sample> {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(seed, "toy");
        (0..n)
            .map(|i| {
                let class = i % k;
                // Class-dependent brightness makes the task learnable.
                let base = 0.15 + 0.7 * class as f64 / (k - 1).max(1) as f64;
                let image = Array3::from_shape_fn((side, side, 3), |_| {
                    (base + rng.gen_range(-0.05..0.05f64)).clamp(0.0, 1.0)
                });
                Sample {
                    id: format!("t{i:03}"),
                    image,
                    expression: class,
                    attributes: vec![i % 2],
                }
            })
            .collect()
    }

    fn tiny_cfg(approach: HeadKind, seed: u64, epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 8,
            initial_lr: 0.02,
            max_epochs: epochs,
            early_stop_patience_epochs: epochs,
            seed,
            approach,
            alpha: 1.0,
            augment: AugmentConfig {
                enabled: false,
                crop_size: 16,
                ..AugmentConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    fn build(approach: HeadKind, seed: u64) -> ModelBundle {
        let schema = AttributeSchema::from_pairs(&[("g", &["a", "b"])]).unwrap();
        ModelBundle::build(
            BackboneVariant::Tiny,
            16,
            16,
            approach,
            2,
            (approach != HeadKind::Baseline).then_some(schema),
            1.0,
            &mut crate::rng::derive_rng(seed, "bundle"),
        )
        .unwrap()
    }

    #[test]
    fn training_is_deterministic() {
        let samples = toy_samples(24, 16, 2, 5);
        let (train_s, val_s) = samples.split_at(16);
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(HeadKind::Disentangled, 7, 2);
        train(build(HeadKind::Disentangled, 7), train_s, val_s, &cfg, dir1.path()).unwrap();
        train(build(HeadKind::Disentangled, 7), train_s, val_s, &cfg, dir2.path()).unwrap();
        for file in ["train_log.csv", "epoch_log.csv", "best.bin", "best.json"] {
            let a = std::fs::read(dir1.path().join(file)).unwrap();
            let b = std::fs::read(dir2.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn empty_train_set_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(HeadKind::Baseline, 1, 1);
        let err = train(build(HeadKind::Baseline, 1), &[], &[], &cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn nan_alpha_aborts_with_training_error() {
        let samples = toy_samples(8, 16, 2, 9);
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(HeadKind::Disentangled, 9, 1);
        cfg.alpha = f64::NAN;
        let mut bundle = build(HeadKind::Disentangled, 9);
        bundle.head.alpha = f64::NAN;
        let err = train(bundle, &samples, &[], &cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Training { .. }), "{err}");
    }

    #[test]
    fn evaluate_produces_one_record_per_sample_and_is_pure() {
        let samples = toy_samples(10, 16, 2, 11);
        let bundle = build(HeadKind::Baseline, 11);
        let r1 = evaluate(&bundle, &samples).unwrap();
        let r2 = evaluate(&bundle, &samples).unwrap();
        assert_eq!(r1.len(), 10);
        assert_eq!(r1, r2);
        assert_eq!(r1[3].id, samples[3].id);
    }

    #[test]
    fn uniform_model_argmax_is_class_zero() {
        let samples = toy_samples(4, 16, 2, 13);
        let mut bundle = build(HeadKind::Baseline, 13);
        bundle.head.primary.w.fill(0.0);
        bundle.head.primary.b.fill(0.0);
        let records = evaluate(&bundle, &samples).unwrap();
        assert!(records.iter().all(|r| r.predicted == 0));
    }

    #[test]
    fn training_learns_a_separable_toy_task() {
        let samples = toy_samples(60, 16, 2, 15);
        let (train_s, rest) = samples.split_at(40);
        let (val_s, test_s) = rest.split_at(10);
        let cfg = tiny_cfg(HeadKind::Baseline, 15, 12);
        let outcome = train(build(HeadKind::Baseline, 15), train_s, val_s, &cfg, tempfile::tempdir().unwrap().path()).unwrap();
        let records = evaluate(&outcome.bundle, test_s).unwrap();
        let correct = records.iter().filter(|r| r.is_correct()).count();
        assert!(correct as f64 / records.len() as f64 >= 0.9, "{correct}/10");
    }

    #[test]
    fn probe_on_constant_features_is_chance_and_on_attribute_features_is_perfect() {
        let schema = AttributeSchema::from_pairs(&[("g", &["a", "b"])]).unwrap();
        let make = |n: usize, informative: bool, seed: u64| -> Vec<Sample> {
            use rand::Rng;
            let mut rng = crate::rng::derive_rng(seed, "probe-data");
            (0..n)
                .map(|i| {
                    let attr = i % 2;
                    let image = if informative {
                        // The attribute is literally painted into the image.
                        Array3::from_elem((16, 16, 3), if attr == 0 { 0.2 } else { 0.8 })
                    } else {
                        Array3::from_elem((16, 16, 3), 0.5)
                    } + Array3::from_shape_fn((16, 16, 3), |_| rng.gen_range(-0.01..0.01f64));
                    Sample {
                        id: format!("p{i}"),
                        image: image.mapv(|v| v.clamp(0.0, 1.0)),
                        expression: 0,
                        attributes: vec![attr],
                    }
                })
                .collect()
        };
        let bundle = build(HeadKind::Baseline, 17);

        let informative = make(60, true, 21);
        let (tr, te) = informative.split_at(40);
        let acc = probe_attributes(&bundle, &schema, tr, te, "g").unwrap();
        assert!(acc >= 0.95, "informative probe accuracy {acc}");

        let constant = make(60, false, 23);
        let (tr, te) = constant.split_at(40);
        let acc = probe_attributes(&bundle, &schema, tr, te, "g").unwrap();
        assert!((0.25..=0.75).contains(&acc), "uninformative probe accuracy {acc}");
    }

    #[test]
    fn probe_rejects_unknown_group() {
        let schema = AttributeSchema::from_pairs(&[("g", &["a", "b"])]).unwrap();
        let samples = toy_samples(8, 16, 2, 19);
        let bundle = build(HeadKind::Baseline, 19);
        assert!(probe_attributes(&bundle, &schema, &samples, &samples, "nope").is_err());
    }
}
