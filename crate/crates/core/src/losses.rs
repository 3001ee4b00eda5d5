//! Training objectives: expression cross-entropy, the confusion loss that
//! pushes attribute branches toward uniform output, its adversarial
//! attribute cross-entropy, and the weighted total.
//!
//! All losses take probability rows (not logits), reduce by the batch
//! mean, and clamp probabilities at 1e-12 before the log.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::AttributeSchema;

/// Floor applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Per-component loss values for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub exp: f64,
    pub s: f64,
    pub conf: f64,
    pub alpha: f64,
    /// exp + s + alpha·conf
    pub total: f64,
}

fn checked_prob_rows(probs: &Array2<f64>, what: &str) -> Result<()> {
    for row in probs.rows() {
        let sum: f64 = row.sum();
        if (sum - 1.0).abs() > 1e-6 || row.iter().any(|&p| p < 0.0) {
            return Err(Error::validation(format!(
                "{what}: rows must be probability distributions (sum {sum})"
            )));
        }
    }
    Ok(())
}

fn neg_log(p: f64) -> f64 {
    -p.max(PROB_CLAMP).ln()
}

/// Mean over the batch of −log p_{y_i}.
pub fn expression_loss(probs: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    let (batch, k) = probs.dim();
    if labels.len() != batch {
        return Err(Error::validation(format!(
            "expected {batch} labels, got {}",
            labels.len()
        )));
    }
    if batch == 0 {
        return Err(Error::validation("expression_loss on empty batch"));
    }
    checked_prob_rows(probs, "expression_loss")?;
    let mut acc = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::validation(format!("label {y} out of range [0,{k})")));
        }
        acc += neg_log(probs[[i, y]]);
    }
    Ok(acc / batch as f64)
}

/// Mean over the batch of Σ_j Σ_{s∈S_j} −(1/|S_j|)·log p_s — the
/// cross-entropy of each attribute branch against the uniform target.
pub fn confusion_loss(group_probs: &[Array2<f64>], schema: &AttributeSchema) -> Result<f64> {
    if group_probs.len() != schema.groups().len() {
        return Err(Error::validation(format!(
            "expected {} attribute groups, got {}",
            schema.groups().len(),
            group_probs.len()
        )));
    }
    let mut total = 0.0;
    let mut batch = None;
    for (probs, group) in group_probs.iter().zip(schema.groups()) {
        let (b, width) = probs.dim();
        if width != group.categories.len() {
            return Err(Error::validation(format!(
                "group {:?}: expected width {}, got {width}",
                group.name,
                group.categories.len()
            )));
        }
        match batch {
            None => batch = Some(b),
            Some(prev) if prev != b => {
                return Err(Error::validation("inconsistent batch sizes across groups"))
            }
            _ => {}
        }
        if b == 0 {
            return Err(Error::validation("confusion_loss on empty batch"));
        }
        checked_prob_rows(probs, "confusion_loss")?;
        let uniform = 1.0 / width as f64;
        let mut acc = 0.0;
        for row in probs.rows() {
            for &p in row {
                acc += uniform * neg_log(p);
            }
        }
        total += acc / b as f64;
    }
    Ok(total)
}

/// Mean over the batch of Σ_j −log p_{y_{s,j}} — the attribute-predictive
/// cross-entropy that keeps the branches honest adversaries.
pub fn attribute_loss(group_probs: &[Array2<f64>], group_labels: &[Vec<usize>]) -> Result<f64> {
    if group_probs.len() != group_labels.len() {
        return Err(Error::validation(format!(
            "expected {} label vectors, got {}",
            group_probs.len(),
            group_labels.len()
        )));
    }
    let mut total = 0.0;
    for (probs, labels) in group_probs.iter().zip(group_labels) {
        let (b, width) = probs.dim();
        if labels.len() != b {
            return Err(Error::validation(format!(
                "expected {b} labels for a group, got {}",
                labels.len()
            )));
        }
        if b == 0 {
            return Err(Error::validation("attribute_loss on empty batch"));
        }
        checked_prob_rows(probs, "attribute_loss")?;
        let mut acc = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            if y >= width {
                return Err(Error::validation(format!(
                    "attribute label {y} out of range [0,{width})"
                )));
            }
            acc += neg_log(probs[[i, y]]);
        }
        total += acc / b as f64;
    }
    Ok(total)
}

/// Combine components: total = exp + s + alpha·conf.
pub fn total_loss(exp: f64, s: f64, conf: f64, alpha: f64) -> Result<LossBreakdown> {
    for (name, v) in [("exp", exp), ("s", s), ("conf", conf), ("alpha", alpha)] {
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss component {name} = {v}")));
        }
    }
    Ok(LossBreakdown {
        exp,
        s,
        conf,
        alpha,
        total: exp + s + alpha * conf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};

    fn schema2() -> AttributeSchema {
        AttributeSchema::from_pairs(&[("g", &["a", "b"])]).unwrap()
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let probs = arr2(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(expression_loss(&probs, &[0, 2]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn uniform_seven_way_is_ln_seven() {
        let probs = Array2::from_elem((1, 7), 1.0 / 7.0);
        let l = expression_loss(&probs, &[3]).unwrap();
        assert!((l - 7.0f64.ln()).abs() < 1e-9);
        assert!((l - 1.9459).abs() < 1e-4);
    }

    #[test]
    fn expression_loss_batch_mean() {
        let probs = arr2(&[[0.5, 0.5], [0.25, 0.75]]);
        let l = expression_loss(&probs, &[0, 0]).unwrap();
        let expect = (2.0f64.ln() + 4.0f64.ln()) / 2.0;
        assert!((l - expect).abs() < 1e-9);
        assert!((l - 1.0397).abs() < 1e-4);
    }

    #[test]
    fn expression_loss_rejects_bad_labels_and_rows() {
        let probs = arr2(&[[0.5, 0.5]]);
        assert!(expression_loss(&probs, &[2]).is_err());
        let not_probs = arr2(&[[0.5, 0.2]]);
        assert!(expression_loss(&not_probs, &[0]).is_err());
    }

    #[test]
    fn confusion_loss_of_uniform_is_ln_group_size() {
        let probs = vec![arr2(&[[0.5, 0.5]])];
        let l = confusion_loss(&probs, &schema2()).unwrap();
        assert!((l - 2.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn confusion_loss_skewed_rows() {
        let probs = vec![arr2(&[[0.9, 0.1]])];
        let l = confusion_loss(&probs, &schema2()).unwrap();
        let expect = -(0.5 * 0.9f64.ln() + 0.5 * 0.1f64.ln());
        assert!((l - expect).abs() < 1e-9);
        assert!((l - 1.2040).abs() < 1e-4);
    }

    #[test]
    fn confusion_loss_adds_over_groups() {
        let schema = AttributeSchema::from_pairs(&[("g2", &["a", "b"]), ("g3", &["x", "y", "z"])]).unwrap();
        let probs = vec![arr2(&[[0.5, 0.5]]), Array2::from_elem((1, 3), 1.0 / 3.0)];
        let l = confusion_loss(&probs, &schema).unwrap();
        assert!((l - (2.0f64.ln() + 3.0f64.ln())).abs() < 1e-9);
        assert!((l - 1.7918).abs() < 1e-4);
    }

    #[test]
    fn confusion_loss_rejects_width_mismatch() {
        let probs = vec![Array2::from_elem((1, 3), 1.0 / 3.0)];
        assert!(confusion_loss(&probs, &schema2()).is_err());
    }

    #[test]
    fn attribute_loss_zero_when_true_class_certain() {
        let probs = vec![arr2(&[[1.0, 0.0]]), arr2(&[[0.0, 1.0, 0.0]])];
        let l = attribute_loss(&probs, &[vec![0], vec![1]]).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn attribute_loss_uniform_groups_sum_logs() {
        let probs = vec![
            Array2::from_elem((1, 2), 0.5),
            Array2::from_elem((1, 3), 1.0 / 3.0),
            Array2::from_elem((1, 5), 0.2),
        ];
        let l = attribute_loss(&probs, &[vec![0], vec![2], vec![4]]).unwrap();
        let expect = 2.0f64.ln() + 3.0f64.ln() + 5.0f64.ln();
        assert!((l - expect).abs() < 1e-9);
        assert!((l - 3.4012).abs() < 1e-4);
    }

    #[test]
    fn attribute_loss_quarter_prob_is_ln_four() {
        let probs = vec![arr2(&[[0.25, 0.75]])];
        let l = attribute_loss(&probs, &[vec![0]]).unwrap();
        assert!((l - 4.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn total_loss_weights_confusion_by_alpha() {
        let b = total_loss(0.5, 0.3, 0.7, 1.0).unwrap();
        assert!((b.total - 1.5).abs() < 1e-12);
        let b = total_loss(1.0, 1.0, 2.0, 0.5).unwrap();
        assert!((b.total - 3.0).abs() < 1e-12);
        let b = total_loss(0.4, 0.2, 9.0, 0.0).unwrap();
        assert!((b.total - 0.6).abs() < 1e-12);
    }

    #[test]
    fn total_loss_rejects_nan_with_component_name() {
        let err = total_loss(f64::NAN, 0.0, 0.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("exp"));
    }

    #[test]
    fn losses_are_permutation_invariant() {
        let probs = arr2(&[[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]]);
        let labels = [0usize, 1, 2];
        let l1 = expression_loss(&probs, &labels).unwrap();
        let perm = arr2(&[[0.3, 0.3, 0.4], [0.7, 0.2, 0.1], [0.1, 0.8, 0.1]]);
        let l2 = expression_loss(&perm, &[2, 0, 1]).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
    }

    // Gibbs: cross-entropy against the uniform target is at least the
    // uniform entropy, with equality exactly at uniform rows.
    #[test]
    fn confusion_loss_lower_bound_attained_only_at_uniform() {
        use rand::Rng;
        let schema =
            AttributeSchema::from_pairs(&[("g2", &["a", "b"]), ("g5", &["p", "q", "r", "s", "t"])]).unwrap();
        let bound = 2.0f64.ln() + 5.0f64.ln();
        let mut rng = crate::rng::derive_rng(11, "gibbs");
        let sample = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
            let raw: Vec<f64> = (0..n).map(|_| -(rng.gen_range(1e-9..1.0f64)).ln()).collect();
            let sum: f64 = raw.iter().sum();
            Array2::from_shape_vec((1, n), raw.into_iter().map(|v| v / sum).collect()).unwrap()
        };
        for _ in 0..200 {
            let probs = vec![sample(&mut rng, 2), sample(&mut rng, 5)];
            let l = confusion_loss(&probs, &schema).unwrap();
            assert!(l >= bound - 1e-9, "loss {l} below bound {bound}");
        }
        let uniform = vec![Array2::from_elem((3, 2), 0.5), Array2::from_elem((3, 5), 0.2)];
        let l = confusion_loss(&uniform, &schema).unwrap();
        assert!((l - bound).abs() < 1e-9);
    }
}
