//! Tabular dataset ingestion, min-max scaling and per-feature resolution.
//!
//! Every downstream stage works on features scaled to `[0, 1]`. The scaler is
//! kept alongside the rows so thresholds can be reported in original units.

mod folds;
pub mod synthetic;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FccaError, Result};

pub use folds::{make_folds, FoldPlan};

/// Per-feature `(min, max)` in original units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, feature: usize, value: f64) -> f64 {
        (value - self.min[feature]) / (self.max[feature] - self.min[feature])
    }

    pub fn inverse(&self, feature: usize, scaled: f64) -> f64 {
        self.min[feature] + scaled * (self.max[feature] - self.min[feature])
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| self.transform(j, v))
            .collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| self.inverse(j, v))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Row-major feature matrix, `n x m`.
    pub rows: Vec<Vec<f64>>,
    /// Binary labels in `{0, 1}`.
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    /// Per-feature resolution; empty until the dataset is scaled.
    pub eps: Vec<f64>,
    /// Present once the rows are in scaled units.
    pub scaler: Option<Scaler>,
    /// Original label text mapped to 0 and 1.
    pub label_values: [String; 2],
    /// Names of constant columns removed at ingestion.
    pub dropped: Vec<String>,
}

impl Dataset {
    /// Builds an unscaled dataset, validating shapes and labels.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(FccaError::Data(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let m = feature_names.len();
        if m == 0 {
            return Err(FccaError::Data("zero retained features".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(FccaError::Data(format!(
                    "row {i} has {} values, expected {m}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(FccaError::Data(format!("row {i} has a non-finite value")));
            }
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(FccaError::Data(format!("label {bad} is not in {{0, 1}}")));
        }
        Ok(Dataset {
            rows,
            labels,
            feature_names,
            eps: Vec::new(),
            scaler: None,
            label_values: ["0".into(), "1".into()],
            dropped: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Rows selected by `indices`, in that order. Scaler and eps are kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            eps: self.eps.clone(),
            scaler: self.scaler.clone(),
            label_values: self.label_values.clone(),
            dropped: self.dropped.clone(),
        }
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// Maps a scaled value back to original units; identity when unscaled.
    pub fn to_original(&self, feature: usize, value: f64) -> f64 {
        match &self.scaler {
            Some(s) => s.inverse(feature, value),
            None => value,
        }
    }
}

/// Reads a numeric CSV with a header row.
///
/// The label column defaults to the last column. Its two distinct values are
/// mapped to 0 and 1 in ascending order (numeric order when every label
/// parses as a number, lexicographic otherwise). Constant columns are dropped
/// and listed in [`Dataset::dropped`].
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| FccaError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 2 {
        return Err(FccaError::Data(format!(
            "{} needs at least one feature column and a label column",
            path.display()
        )));
    }
    let label_idx = match label_column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            FccaError::Data(format!("label column {name:?} not found in header"))
        })?,
        None => headers.len() - 1,
    };

    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(FccaError::Data(format!(
                "row {} has {} cells, header has {}",
                r + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = &record[c];
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| FccaError::NonNumeric {
                    row: r + 1,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                })?;
            row.push(value);
        }
        rows.push(row);
        raw_labels.push(record[label_idx].to_string());
    }
    if rows.is_empty() {
        return Err(FccaError::Data(format!("{} has no data rows", path.display())));
    }

    let (labels, label_values) = map_labels(&raw_labels)?;

    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (k, &c) in feature_cols.iter().enumerate() {
        let first = rows[0][k];
        if rows.iter().all(|row| row[k] == first) {
            dropped.push(headers[c].clone());
        } else {
            keep.push(k);
        }
    }
    if !dropped.is_empty() {
        log::warn!("dropped: {}", dropped.join(", "));
    }
    if keep.is_empty() {
        return Err(FccaError::Data("zero retained features".into()));
    }
    let rows = rows
        .into_iter()
        .map(|row| keep.iter().map(|&k| row[k]).collect())
        .collect();
    let names = keep
        .iter()
        .map(|&k| headers[feature_cols[k]].clone())
        .collect();

    let mut ds = Dataset::new(rows, labels, names)?;
    ds.label_values = label_values;
    ds.dropped = dropped;
    Ok(ds)
}

fn map_labels(raw: &[String]) -> Result<(Vec<u8>, [String; 2])> {
    let distinct: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    if distinct.len() != 2 {
        return Err(FccaError::Data(format!(
            "label column must hold exactly two distinct values, found {}",
            distinct.len()
        )));
    }
    let mut values: Vec<&str> = distinct.into_iter().collect();
    let numeric: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        if nums[1] < nums[0] {
            values.swap(0, 1);
        }
    }
    let labels = raw.iter().map(|v| u8::from(v == values[1])).collect();
    Ok((labels, [values[0].to_string(), values[1].to_string()]))
}

/// Maps each feature linearly onto `[0, 1]` and computes `eps`.
pub fn scale_minmax(ds: &Dataset) -> Result<Dataset> {
    let m = ds.n_features();
    let mut min = vec![f64::INFINITY; m];
    let mut max = vec![f64::NEG_INFINITY; m];
    for row in &ds.rows {
        for j in 0..m {
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    for j in 0..m {
        if !(max[j] > min[j]) {
            return Err(FccaError::Data(format!(
                "feature {:?} has zero range",
                ds.feature_names[j]
            )));
        }
    }
    let local = Scaler { min, max };
    let rows: Vec<Vec<f64>> = ds
        .rows
        .iter()
        .map(|row| {
            local
                .transform_row(row)
                .into_iter()
                .map(|v| v.clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    // Compose with an existing scaler so `inverse` still lands in original units.
    let scaler = match &ds.scaler {
        None => local,
        Some(prev) => Scaler {
            min: (0..m).map(|j| prev.inverse(j, local.min[j])).collect(),
            max: (0..m).map(|j| prev.inverse(j, local.max[j])).collect(),
        },
    };
    let eps = compute_feature_eps(&rows, m);
    Ok(Dataset {
        rows,
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
        eps,
        scaler: Some(scaler),
        label_values: ds.label_values.clone(),
        dropped: ds.dropped.clone(),
    })
}

/// Smallest gap between consecutive distinct values of each feature.
///
/// A feature with a single distinct value (possible on a training fold) gets
/// resolution 1.0, which leaves no room to move it inside `[0, 1]`.
pub fn compute_feature_eps(rows: &[Vec<f64>], m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| {
            let mut values: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            values
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min)
        })
        .map(|gap| if gap.is_finite() { gap } else { 1.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_three_rows() {
        let f = write_csv("a,b,y\n1,2,0\n3,4,1\n5,7,0\n");
        let ds = load_csv(f.path(), None).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
    }

    #[test]
    fn drops_constant_column() {
        let f = write_csv("a,b,y\n5.0,2,0\n5.0,4,1\n5.0,7,0\n");
        let ds = load_csv(f.path(), None).unwrap();
        assert_eq!(ds.n_features(), 1);
        assert_eq!(ds.feature_names, vec!["b"]);
        assert_eq!(ds.dropped, vec!["a"]);
    }

    #[test]
    fn maps_labels_in_ascending_order() {
        let f = write_csv("a,y\n1,7\n2,2\n3,7\n");
        let ds = load_csv(f.path(), None).unwrap();
        assert_eq!(ds.labels, vec![1, 0, 1]);
        assert_eq!(ds.label_values, ["2".to_string(), "7".to_string()]);

        // numeric, not lexicographic: 10 > 9
        let f = write_csv("a,y\n1,10\n2,9\n");
        let ds = load_csv(f.path(), None).unwrap();
        assert_eq!(ds.labels, vec![1, 0]);
    }

    #[test]
    fn named_label_column() {
        let f = write_csv("y,a,b\ng,1,2\nb,3,4\n");
        let ds = load_csv(f.path(), Some("y")).unwrap();
        assert_eq!(ds.feature_names, vec!["a", "b"]);
        assert_eq!(ds.labels, vec![1, 0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = write_csv("a,y\n1,0\nx,1\n");
        match load_csv(f.path(), None) {
            Err(FccaError::NonNumeric { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write_csv("a,y\n1,0\n,1\n");
        assert!(matches!(load_csv(f.path(), None), Err(FccaError::NonNumeric { .. })));
        let f = write_csv("a,y\n1,0\n2,1\n3,2\n");
        assert!(matches!(load_csv(f.path(), None), Err(FccaError::Data(_))));
        let f = write_csv("a,y\n1,0\n1,1\n");
        assert!(matches!(load_csv(f.path(), None), Err(FccaError::Data(_))));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", None),
            Err(FccaError::Io { .. })
        ));
    }

    #[test]
    fn scales_linearly() {
        let ds = Dataset::new(
            vec![vec![2.0, 0.0], vec![4.0, 0.25], vec![6.0, 1.0]],
            vec![0, 1, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let s = scale_minmax(&ds).unwrap();
        assert_eq!(s.column(0), vec![0.0, 0.5, 1.0]);
        for (a, b) in s.column(1).iter().zip([0.0, 0.25, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.eps, vec![0.5, 0.25]);
    }

    #[test]
    fn feature_eps_examples() {
        let rows = |v: &[f64]| v.iter().map(|&x| vec![x]).collect::<Vec<_>>();
        assert!((compute_feature_eps(&rows(&[0.0, 0.2, 0.5, 1.0]), 1)[0] - 0.2).abs() < 1e-15);
        assert_eq!(compute_feature_eps(&rows(&[0.0, 0.0, 0.5, 1.0]), 1), vec![0.5]);
        assert_eq!(compute_feature_eps(&rows(&[0.0, 1.0]), 1), vec![1.0]);
        assert_eq!(compute_feature_eps(&rows(&[0.3, 0.3]), 1), vec![1.0]);
    }

    #[test]
    fn rescaling_composes_scalers() {
        let ds = Dataset::new(
            vec![vec![10.0], vec![20.0], vec![30.0]],
            vec![0, 1, 1],
            vec!["a".into()],
        )
        .unwrap();
        let s = scale_minmax(&ds).unwrap();
        let sub = s.subset(&[0, 1]);
        let s2 = scale_minmax(&sub).unwrap();
        assert_eq!(s2.column(0), vec![0.0, 1.0]);
        assert!((s2.to_original(0, 1.0) - 20.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scale_inverse_round_trip(
                data in proptest::collection::vec(
                    proptest::collection::vec(-1e3f64..1e3, 3), 2..40)
            ) {
                let n = data.len();
                let labels = (0..n).map(|i| (i % 2) as u8).collect();
                let ds = Dataset::new(data.clone(), labels, vec!["a".into(), "b".into(), "c".into()]).unwrap();
                prop_assume!((0..3).all(|j| {
                    let c = ds.column(j);
                    c.iter().any(|&v| v != c[0])
                }));
                let s = scale_minmax(&ds).unwrap();
                let scaler = s.scaler.as_ref().unwrap();
                for (orig, scaled) in data.iter().zip(&s.rows) {
                    for &v in scaled {
                        prop_assert!((0.0..=1.0).contains(&v));
                    }
                    let back = scaler.inverse_row(scaled);
                    for (a, b) in orig.iter().zip(back) {
                        prop_assert!((a - b).abs() < 1e-9);
                    }
                }
                for &e in &s.eps {
                    prop_assert!(e > 0.0 && e <= 1.0);
                }
            }
        }
    }
}
