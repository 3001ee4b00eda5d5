//! Prediction records: per-sample ground truth, predicted distribution and
//! attribute labels — the unit all evaluation and fairness reporting
//! consumes. Serialized as CSV `id,true,pred,p_0..p_{K-1},<group names>`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::AttributeSchema;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub true_class: usize,
    pub predicted: usize,
    pub probs: Vec<f64>,
    /// Category index per attribute group, in schema order.
    pub attributes: Vec<usize>,
}

impl PredictionRecord {
    pub fn is_correct(&self) -> bool {
        self.true_class == self.predicted
    }
}

/// Lowest index wins ties, so a uniform distribution yields class 0.
pub fn argmax_lowest(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

pub fn write_records(path: &Path, records: &[PredictionRecord], schema: &AttributeSchema, k: usize) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string(), "true".to_string(), "pred".to_string()];
    header.extend((0..k).map(|i| format!("p_{i}")));
    header.extend(schema.groups().iter().map(|g| g.name.clone()));
    writer.write_record(&header)?;
    for r in records {
        let mut row = vec![r.id.clone(), r.true_class.to_string(), r.predicted.to_string()];
        row.extend(r.probs.iter().map(|p| format!("{p:.17e}")));
        row.extend(r.attributes.iter().map(|a| a.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_records(path: &Path, schema: &AttributeSchema) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let k = headers.iter().filter(|h| h.starts_with("p_")).count();
    let expected_cols = 3 + k + schema.groups().len();
    if headers.len() != expected_cols {
        return Err(Error::validation(format!(
            "prediction file has {} columns, expected {expected_cols}",
            headers.len()
        )));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row?;
        let parse_usize = |field: &str, what: &str| -> Result<usize> {
            field.parse().map_err(|_| Error::Row {
                row: line,
                message: format!("bad {what} value {field:?}"),
            })
        };
        let mut probs = Vec::with_capacity(k);
        for j in 0..k {
            let field = &row[3 + j];
            let p: f64 = field.parse().map_err(|_| Error::Row {
                row: line,
                message: format!("bad probability {field:?}"),
            })?;
            probs.push(p);
        }
        let mut attributes = Vec::with_capacity(schema.groups().len());
        for (j, group) in schema.groups().iter().enumerate() {
            let a = parse_usize(&row[3 + k + j], &group.name)?;
            if a >= group.categories.len() {
                return Err(Error::Row {
                    row: line,
                    message: format!("{} index {a} out of range", group.name),
                });
            }
            attributes.push(a);
        }
        records.push(PredictionRecord {
            id: row[0].to_string(),
            true_class: parse_usize(&row[1], "true")?,
            predicted: parse_usize(&row[2], "pred")?,
            probs,
            attributes,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_lowest_breaks_ties_low() {
        assert_eq!(argmax_lowest(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax_lowest(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax_lowest(&[0.0, 0.2, 0.8]), 2);
    }

    #[test]
    fn csv_round_trip() {
        let schema = AttributeSchema::from_pairs(&[("gender", &["m", "f"]), ("age", &["y", "o"])]).unwrap();
        let records = vec![
            PredictionRecord {
                id: "a".into(),
                true_class: 2,
                predicted: 0,
                probs: vec![0.5, 0.25, 0.25],
                attributes: vec![1, 0],
            },
            PredictionRecord {
                id: "b".into(),
                true_class: 1,
                predicted: 1,
                probs: vec![0.1, 0.8, 0.1],
                attributes: vec![0, 1],
            },
        ];
        let dir = std::env::temp_dir().join(format!("fairexpr-rec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("records.csv");
        write_records(&path, &records, &schema, 3).unwrap();
        let loaded = read_records(&path, &schema).unwrap();
        assert_eq!(records, loaded);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let schema = AttributeSchema::from_pairs(&[("gender", &["m", "f"])]).unwrap();
        let dir = std::env::temp_dir().join(format!("fairexpr-badrec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "id,true,pred,p_0,p_1,gender\nx,0,zero,0.5,0.5,0\n").unwrap();
        let err = read_records(&path, &schema).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        std::fs::remove_dir_all(&dir).ok();
    }
}
