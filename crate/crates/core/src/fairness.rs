//! Subgroup evaluation: overall and class-wise accuracy, per-subgroup
//! class-wise recall breakdowns (including joint subgroups such as
//! gender×race), and the equal-opportunity fairness ratio.
//!
//! Fairness of a grouping: let each subgroup's score be the sum of its
//! per-class recalls. The dominant subgroup d has the highest score; F is
//! the minimum over other subgroups of score_g / score_d, so F ∈ (0,1]
//! and F = 1 means all subgroups score equally. When two subgroups do not
//! share the same set of supported classes, their comparison restricts to
//! the common classes, and the restriction is recorded in the report.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::PredictionRecord;
use crate::schema::AttributeSchema;

/// One subgroup: a single (group, category) pair, or a joint tuple of
/// pairs across distinct groups.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgroupKey {
    pub pairs: Vec<(String, String)>,
}

impl SubgroupKey {
    pub fn single(group: &str, category: &str) -> Self {
        Self {
            pairs: vec![(group.to_string(), category.to_string())],
        }
    }

    pub fn joint(pairs: &[(&str, &str)]) -> Self {
        Self {
            pairs: pairs.iter().map(|(g, c)| (g.to_string(), c.to_string())).collect(),
        }
    }

    /// Human-readable label, e.g. `Male` or `Male-Caucasian`.
    pub fn label(&self) -> String {
        self.pairs
            .iter()
            .map(|(_, c)| c.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// True when the record's attributes match every pair in the key.
    pub fn matches(&self, record: &PredictionRecord, schema: &AttributeSchema) -> Result<bool> {
        for (group, category) in &self.pairs {
            let gi = schema
                .group_index(group)
                .ok_or_else(|| Error::validation(format!("unknown group {group:?}")))?;
            let ci = schema.groups()[gi]
                .categories
                .iter()
                .position(|c| c == category)
                .ok_or_else(|| Error::validation(format!("unknown category {category:?} in {group:?}")))?;
            if record.attributes.get(gi) != Some(&ci) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for SubgroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Per-class recall over records, optionally restricted to one subgroup.
/// Classes with no support are omitted from the map entirely.
pub fn per_class_recall(
    records: &[PredictionRecord],
    filter: Option<&SubgroupKey>,
    schema: &AttributeSchema,
) -> Result<BTreeMap<usize, f64>> {
    let mut total: BTreeMap<usize, usize> = BTreeMap::new();
    let mut correct: BTreeMap<usize, usize> = BTreeMap::new();
    let mut kept = 0usize;
    for r in records {
        if let Some(key) = filter {
            if !key.matches(r, schema)? {
                continue;
            }
        }
        kept += 1;
        *total.entry(r.true_class).or_default() += 1;
        if r.is_correct() {
            *correct.entry(r.true_class).or_default() += 1;
        }
    }
    if kept == 0 {
        return Err(Error::validation(match filter {
            Some(key) => format!("no support: no records match subgroup {key}"),
            None => "no support: empty record set".to_string(),
        }));
    }
    Ok(total
        .into_iter()
        .map(|(class, n)| {
            let c = correct.get(&class).copied().unwrap_or(0);
            (class, c as f64 / n as f64)
        })
        .collect())
}

/// Macro mean of per-class recalls (each class weighted equally).
pub fn mean_recall(recalls: &BTreeMap<usize, f64>) -> f64 {
    if recalls.is_empty() {
        return 0.0;
    }
    recalls.values().sum::<f64>() / recalls.len() as f64
}

/// Binary fairness: min of the two ratios of recall sums.
pub fn fairness_binary(sum0: f64, sum1: f64) -> Result<f64> {
    if sum0 <= 0.0 || sum1 <= 0.0 {
        return Err(Error::validation(format!(
            "fairness undefined: recall sums must be positive (got {sum0}, {sum1})"
        )));
    }
    Ok((sum0 / sum1).min(sum1 / sum0))
}

/// Multi-group fairness over precomputed recall sums:
/// d = argmax (earliest wins ties), F = min over g ≠ d of sum_g / sum_d.
pub fn fairness_multi(sums: &[(SubgroupKey, f64)]) -> Result<(f64, SubgroupKey)> {
    let positive: Vec<&(SubgroupKey, f64)> = sums.iter().filter(|(_, s)| *s > 0.0).collect();
    if positive.len() < 2 {
        return Err(Error::validation(format!(
            "fairness needs at least 2 subgroups with positive sums, got {}",
            positive.len()
        )));
    }
    let mut dominant = 0usize;
    for (i, (_, s)) in positive.iter().enumerate().skip(1) {
        if *s > positive[dominant].1 {
            dominant = i;
        }
    }
    let d_sum = positive[dominant].1;
    let mut f = f64::INFINITY;
    for (i, (_, s)) in positive.iter().enumerate() {
        if i != dominant {
            f = f.min(*s / d_sum);
        }
    }
    Ok((f, positive[dominant].0.clone()))
}

/// Statistics for one subgroup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupStats {
    pub key: SubgroupKey,
    pub label: String,
    /// class → recall; classes absent from the subgroup are omitted.
    pub recalls: BTreeMap<usize, f64>,
    pub mean_recall: f64,
    pub support: usize,
    pub per_class_support: BTreeMap<usize, usize>,
    /// Support below the configured threshold; results flagged unstable.
    pub low_support: bool,
}

/// One subgroup's ratio against the dominant subgroup, with the class set
/// the comparison was restricted to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairnessRatio {
    pub label: String,
    pub ratio: f64,
    pub classes_compared: Vec<usize>,
}

/// Fairness outcome for one grouping (single or joint).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupingFairness {
    pub grouping: String,
    /// None when fewer than two subgroups have support.
    pub fairness: Option<f64>,
    pub dominant: Option<String>,
    pub ratios: Vec<FairnessRatio>,
    /// Subgroups excluded for having no records.
    pub excluded: Vec<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairnessReport {
    pub overall_accuracy: f64,
    pub mean_classwise_accuracy: f64,
    pub per_class_recall: BTreeMap<usize, f64>,
    pub per_subgroup: Vec<SubgroupStats>,
    pub fairness: Vec<GroupingFairness>,
    pub warnings: Vec<String>,
}

impl FairnessReport {
    pub fn fairness_for(&self, grouping: &str) -> Option<&GroupingFairness> {
        self.fairness.iter().find(|g| g.grouping == grouping)
    }
}

/// Joint grouping label, e.g. `gender×race`.
pub fn grouping_label(groups: &[String]) -> String {
    groups.join("×")
}

/// Enumerate the subgroup keys of a grouping: single-group categories, or
/// the cartesian product of categories for a joint grouping.
fn subgroup_keys(schema: &AttributeSchema, groups: &[String]) -> Result<Vec<SubgroupKey>> {
    let mut keys: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for group in groups {
        let g = schema
            .group(group)
            .ok_or_else(|| Error::validation(format!("unknown group {group:?} in grouping")))?;
        let mut next = Vec::with_capacity(keys.len() * g.categories.len());
        for prefix in &keys {
            for category in &g.categories {
                let mut pairs = prefix.clone();
                pairs.push((group.clone(), category.clone()));
                next.push(pairs);
            }
        }
        keys = next;
    }
    Ok(keys.into_iter().map(|pairs| SubgroupKey { pairs }).collect())
}

/// Build the full report: class-wise accuracy, per-subgroup breakdowns for
/// every single group and every requested joint grouping, and one fairness
/// value per grouping.
pub fn build_report(
    records: &[PredictionRecord],
    schema: &AttributeSchema,
    joint_groupings: &[Vec<String>],
    min_support: usize,
) -> Result<FairnessReport> {
    if records.is_empty() {
        return Err(Error::validation("cannot report on an empty record set"));
    }
    for r in records {
        if r.attributes.len() != schema.groups().len() {
            return Err(Error::validation(format!(
                "record {:?} carries {} attributes, schema has {} groups",
                r.id,
                r.attributes.len(),
                schema.groups().len()
            )));
        }
    }
    for grouping in joint_groupings {
        let mut seen = std::collections::BTreeSet::new();
        for g in grouping {
            if !seen.insert(g) {
                return Err(Error::validation(format!("grouping repeats group {g:?}")));
            }
        }
    }

    let overall_accuracy =
        records.iter().filter(|r| r.is_correct()).count() as f64 / records.len() as f64;
    let per_class = per_class_recall(records, None, schema)?;
    let mean_classwise_accuracy = mean_recall(&per_class);

    let mut groupings: Vec<Vec<String>> = schema.groups().iter().map(|g| vec![g.name.clone()]).collect();
    groupings.extend(joint_groupings.iter().cloned());

    let mut per_subgroup = Vec::new();
    let mut fairness = Vec::new();
    let mut warnings = Vec::new();

    for grouping in &groupings {
        let label = grouping_label(grouping);
        let mut stats: Vec<SubgroupStats> = Vec::new();
        let mut excluded = Vec::new();
        for key in subgroup_keys(schema, grouping)? {
            let mut total: BTreeMap<usize, usize> = BTreeMap::new();
            let mut correct: BTreeMap<usize, usize> = BTreeMap::new();
            let mut support = 0usize;
            for r in records {
                if key.matches(r, schema)? {
                    support += 1;
                    *total.entry(r.true_class).or_default() += 1;
                    if r.is_correct() {
                        *correct.entry(r.true_class).or_default() += 1;
                    }
                }
            }
            if support == 0 {
                excluded.push(key.label());
                warnings.push(format!("subgroup {} has no records; excluded from {label}", key.label()));
                continue;
            }
            let recalls: BTreeMap<usize, f64> = total
                .iter()
                .map(|(&class, &n)| {
                    (class, correct.get(&class).copied().unwrap_or(0) as f64 / n as f64)
                })
                .collect();
            let low_support = support < min_support;
            if low_support {
                warnings.push(format!(
                    "subgroup {} has support {support} < {min_support}; results may be unstable",
                    key.label()
                ));
            }
            stats.push(SubgroupStats {
                label: key.label(),
                key,
                mean_recall: mean_recall(&recalls),
                recalls,
                support,
                per_class_support: total,
                low_support,
            });
        }

        let entry = if stats.len() < 2 {
            GroupingFairness {
                grouping: label.clone(),
                fairness: None,
                dominant: None,
                ratios: Vec::new(),
                excluded,
                note: Some("fairness omitted: fewer than two subgroups with support".to_string()),
            }
        } else {
            // Dominance by each subgroup's own recall sum; pairwise
            // comparisons restrict to classes both subgroups support.
            let sums: Vec<f64> = stats.iter().map(|s| s.recalls.values().sum()).collect();
            let mut dominant = 0usize;
            for (i, &s) in sums.iter().enumerate().skip(1) {
                if s > sums[dominant] {
                    dominant = i;
                }
            }
            let mut ratios = Vec::new();
            let mut f: Option<f64> = None;
            let mut note = None;
            for (i, s) in stats.iter().enumerate() {
                if i == dominant {
                    continue;
                }
                let common: Vec<usize> = s
                    .recalls
                    .keys()
                    .filter(|c| stats[dominant].recalls.contains_key(c))
                    .copied()
                    .collect();
                if common.is_empty() {
                    warnings.push(format!(
                        "subgroups {} and {} share no classes; ratio skipped",
                        s.label, stats[dominant].label
                    ));
                    continue;
                }
                let num: f64 = common.iter().map(|c| s.recalls[c]).sum();
                let den: f64 = common.iter().map(|c| stats[dominant].recalls[c]).sum();
                if den <= 0.0 || num <= 0.0 {
                    warnings.push(format!(
                        "subgroup {} vs {}: nonpositive recall sum; ratio skipped",
                        s.label, stats[dominant].label
                    ));
                    continue;
                }
                // The restriction can push a ratio above 1 when the
                // dominant group is weak on the shared classes; cap at the
                // binary form so F stays in (0,1].
                let ratio = (num / den).min(den / num);
                ratios.push(FairnessRatio {
                    label: s.label.clone(),
                    ratio,
                    classes_compared: common,
                });
                f = Some(f.map_or(ratio, |prev: f64| prev.min(ratio)));
            }
            if f.is_none() {
                note = Some("fairness omitted: no comparable subgroup pairs".to_string());
            }
            GroupingFairness {
                grouping: label.clone(),
                fairness: f,
                dominant: Some(stats[dominant].label.clone()),
                ratios,
                excluded,
                note,
            }
        };
        fairness.push(entry);
        per_subgroup.extend(stats);
    }

    Ok(FairnessReport {
        overall_accuracy,
        mean_classwise_accuracy,
        per_class_recall: per_class,
        per_subgroup,
        fairness,
        warnings,
    })
}

/// Render the report as aligned markdown tables.
pub fn render_markdown(report: &FairnessReport, class_names: &[String]) -> String {
    let mut out = String::new();
    let name = |c: usize| -> String {
        class_names
            .get(c)
            .cloned()
            .unwrap_or_else(|| format!("class {c}"))
    };

    out.push_str("## Class-wise accuracy\n\n");
    out.push_str("| Class | Recall |\n|---|---|\n");
    out.push_str(&format!(
        "| Mean | {:.4} |\n",
        report.mean_classwise_accuracy
    ));
    for (&c, &r) in &report.per_class_recall {
        out.push_str(&format!("| {} | {:.4} |\n", name(c), r));
    }
    out.push_str(&format!(
        "\nOverall accuracy: {:.4}\n",
        report.overall_accuracy
    ));

    out.push_str("\n## Subgroup breakdown\n\n");
    out.push_str("| Subgroup | Mean recall | Support |\n|---|---|---|\n");
    for s in &report.per_subgroup {
        let flag = if s.low_support { " (low support)" } else { "" };
        out.push_str(&format!(
            "| {} | {:.4} | {}{} |\n",
            s.label, s.mean_recall, s.support, flag
        ));
    }

    out.push_str("\n## Fairness\n\n");
    out.push_str("| Grouping | F | Dominant |\n|---|---|---|\n");
    for g in &report.fairness {
        match (g.fairness, &g.dominant) {
            (Some(f), Some(d)) => {
                out.push_str(&format!("| {} | {:.4} | {} |\n", g.grouping, f, d))
            }
            _ => out.push_str(&format!(
                "| {} | n/a | {} |\n",
                g.grouping,
                g.note.as_deref().unwrap_or("-")
            )),
        }
    }
    if !report.warnings.is_empty() {
        out.push_str("\nNotes:\n");
        for w in &report.warnings {
            out.push_str(&format!("- {w}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> AttributeSchema {
        AttributeSchema::from_pairs(&[("gender", &["M", "F"]), ("race", &["Cau", "AA", "Asian"])]).unwrap()
    }

    fn record(id: &str, t: usize, p: usize, attrs: &[usize]) -> PredictionRecord {
        PredictionRecord {
            id: id.to_string(),
            true_class: t,
            predicted: p,
            probs: vec![0.0; 3],
            attributes: attrs.to_vec(),
        }
    }

    #[test]
    fn per_class_recall_counts() {
        // class 0: 3 of 4 correct; class 1: 1 of 2 correct.
        let records = vec![
            record("a", 0, 0, &[0, 0]),
            record("b", 0, 0, &[0, 0]),
            record("c", 0, 0, &[0, 0]),
            record("d", 0, 1, &[0, 0]),
            record("e", 1, 1, &[0, 0]),
            record("f", 1, 0, &[0, 0]),
        ];
        let map = per_class_recall(&records, None, &schema()).unwrap();
        assert_eq!(map[&0], 0.75);
        assert_eq!(map[&1], 0.5);
        assert_eq!(mean_recall(&map), 0.625);
    }

    #[test]
    fn all_correct_gives_unit_recalls() {
        let records = vec![record("a", 0, 0, &[0, 0]), record("b", 2, 2, &[1, 1])];
        let map = per_class_recall(&records, None, &schema()).unwrap();
        assert!(map.values().all(|&r| r == 1.0));
    }

    #[test]
    fn absent_class_is_omitted_from_map() {
        let records = vec![
            record("a", 0, 0, &[0, 0]),
            record("b", 1, 1, &[1, 0]),
        ];
        let key = SubgroupKey::single("gender", "M");
        let map = per_class_recall(&records, Some(&key), &schema()).unwrap();
        assert!(map.contains_key(&0));
        assert!(!map.contains_key(&1));
    }

    #[test]
    fn empty_filter_is_no_support_not_zero() {
        let records = vec![record("a", 0, 0, &[0, 0])];
        let key = SubgroupKey::single("gender", "F");
        let err = per_class_recall(&records, Some(&key), &schema()).unwrap_err();
        assert!(err.to_string().contains("no support"), "{err}");
    }

    #[test]
    fn fairness_binary_examples() {
        assert!((fairness_binary(6.3, 6.3).unwrap() - 1.0).abs() < 1e-12);
        let f = fairness_binary(6.3, 6.0).unwrap();
        assert!((f - 6.0 / 6.3).abs() < 1e-12);
        assert!((f - 0.9524).abs() < 1e-4);
        assert!(fairness_binary(0.0, 1.0).is_err());
    }

    #[test]
    fn fairness_binary_is_symmetric() {
        let mut rng = crate::rng::derive_rng(3, "fb");
        use rand::Rng;
        for _ in 0..100 {
            let a = rng.gen_range(0.01..10.0);
            let b = rng.gen_range(0.01..10.0);
            let ab = fairness_binary(a, b).unwrap();
            let ba = fairness_binary(b, a).unwrap();
            assert!((ab - ba).abs() < 1e-15);
            assert!(ab > 0.0 && ab <= 1.0);
        }
    }

    #[test]
    fn fairness_multi_example_from_sums() {
        let sums = vec![
            (SubgroupKey::single("g", "A"), 6.3),
            (SubgroupKey::single("g", "B"), 5.0),
            (SubgroupKey::single("g", "C"), 6.0),
        ];
        let (f, d) = fairness_multi(&sums).unwrap();
        assert_eq!(d.label(), "A");
        assert!((f - 5.0 / 6.3).abs() < 1e-12);
        assert!((f - 0.7937).abs() < 1e-4);
    }

    #[test]
    fn fairness_multi_equal_sums_unit_f_first_dominant() {
        let sums = vec![
            (SubgroupKey::single("g", "X"), 2.5),
            (SubgroupKey::single("g", "Y"), 2.5),
            (SubgroupKey::single("g", "Z"), 2.5),
        ];
        let (f, d) = fairness_multi(&sums).unwrap();
        assert_eq!(f, 1.0);
        assert_eq!(d.label(), "X");
    }

    #[test]
    fn fairness_multi_agrees_with_binary_on_pairs() {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(5, "fm");
        for _ in 0..200 {
            let a = rng.gen_range(0.01..10.0);
            let b = rng.gen_range(0.01..10.0);
            let sums = vec![
                (SubgroupKey::single("g", "A"), a),
                (SubgroupKey::single("g", "B"), b),
            ];
            let (f, _) = fairness_multi(&sums).unwrap();
            assert!((f - fairness_binary(a, b).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn fairness_scale_invariance() {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(6, "scale");
        for _ in 0..100 {
            let sums: Vec<(SubgroupKey, f64)> = (0..4)
                .map(|i| (SubgroupKey::single("g", &format!("c{i}")), rng.gen_range(0.1..5.0)))
                .collect();
            let c = rng.gen_range(0.1..10.0);
            let scaled: Vec<(SubgroupKey, f64)> =
                sums.iter().map(|(k, s)| (k.clone(), s * c)).collect();
            let (f1, d1) = fairness_multi(&sums).unwrap();
            let (f2, d2) = fairness_multi(&scaled).unwrap();
            assert!((f1 - f2).abs() < 1e-12);
            assert_eq!(d1, d2);
        }
    }

    #[test]
    fn report_on_balanced_identical_subgroups_is_fully_fair() {
        // Two gender subgroups with identical confusion patterns.
        let mut records = Vec::new();
        for (g, tag) in [(0usize, "m"), (1usize, "f")] {
            for i in 0..4 {
                records.push(record(&format!("{tag}{i}"), 0, 0, &[g, 0]));
            }
            records.push(record(&format!("{tag}x"), 1, 1, &[g, 0]));
            records.push(record(&format!("{tag}y"), 1, 0, &[g, 0]));
        }
        let report = build_report(&records, &schema(), &[], 1).unwrap();
        let gf = report.fairness_for("gender").unwrap();
        assert_eq!(gf.fairness, Some(1.0));
    }

    #[test]
    fn raf_style_groupings_present() {
        let schema = AttributeSchema::raf_default();
        let mut records = Vec::new();
        let mut i = 0;
        for race in 0..3 {
            for gender in 0..2 {
                for age in 0..5 {
                    for class in 0..3 {
                        records.push(PredictionRecord {
                            id: format!("r{i}"),
                            true_class: class,
                            predicted: if i % 4 == 0 { (class + 1) % 3 } else { class },
                            probs: vec![0.0; 7],
                            attributes: vec![race, gender, age],
                        });
                        i += 1;
                    }
                }
            }
        }
        let joint = vec![vec!["gender".to_string(), "race".to_string()]];
        let report = build_report(&records, &schema, &joint, 1).unwrap();
        let labels: Vec<&str> = report.fairness.iter().map(|g| g.grouping.as_str()).collect();
        assert_eq!(labels, vec!["race", "gender", "age", "gender×race"]);
        assert!(report.fairness_for("gender×race").unwrap().fairness.is_some());
        // Joint subgroups appear with hyphenated labels.
        assert!(report.per_subgroup.iter().any(|s| s.label == "Male-Caucasian"));
    }

    #[test]
    fn report_is_pure() {
        let records = vec![
            record("a", 0, 0, &[0, 0]),
            record("b", 1, 0, &[1, 1]),
            record("c", 1, 1, &[0, 2]),
            record("d", 2, 2, &[1, 0]),
        ];
        let r1 = build_report(&records, &schema(), &[], 1).unwrap();
        let r2 = build_report(&records, &schema(), &[], 1).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }

    #[test]
    fn unknown_group_in_joint_tuple_is_error() {
        let records = vec![record("a", 0, 0, &[0, 0])];
        let joint = vec![vec!["gender".to_string(), "planet".to_string()]];
        assert!(build_report(&records, &schema(), &joint, 1).is_err());
    }

    #[test]
    fn relabeling_subgroups_preserves_f_and_dominant() {
        // Swap category declaration order; F and the dominant's identity
        // must not change (only ties are order-dependent).
        let schema_a = AttributeSchema::from_pairs(&[("g", &["p", "q", "r"])]).unwrap();
        let schema_b = AttributeSchema::from_pairs(&[("g", &["r", "q", "p"])]).unwrap();
        let remap = |a: usize| 2 - a;
        let mut records_a = Vec::new();
        let mut records_b = Vec::new();
        let mut rng = crate::rng::derive_rng(8, "relabel");
        use rand::Rng;
        for i in 0..120 {
            let attr = rng.gen_range(0..3usize);
            let t = rng.gen_range(0..3usize);
            // Category-dependent error rate creates a real gap.
            let wrong = rng.gen_range(0..10) < 2 + 2 * attr;
            let p = if wrong { (t + 1) % 3 } else { t };
            records_a.push(PredictionRecord {
                id: format!("x{i}"),
                true_class: t,
                predicted: p,
                probs: vec![0.0; 3],
                attributes: vec![attr],
            });
            records_b.push(PredictionRecord {
                id: format!("x{i}"),
                true_class: t,
                predicted: p,
                probs: vec![0.0; 3],
                attributes: vec![remap(attr)],
            });
        }
        let ra = build_report(&records_a, &schema_a, &[], 1).unwrap();
        let rb = build_report(&records_b, &schema_b, &[], 1).unwrap();
        let fa = ra.fairness_for("g").unwrap();
        let fb = rb.fairness_for("g").unwrap();
        assert!((fa.fairness.unwrap() - fb.fairness.unwrap()).abs() < 1e-12);
        assert_eq!(fa.dominant, fb.dominant);
    }
}
