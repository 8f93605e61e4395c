//! Binarization against selected thresholds, with the compression rate
//! `eta` and inconsistency rate `delta` of the resulting partition.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{FccaError, Result};
use crate::thresholds::QuantileSelection;

/// Column `x[feature] > threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinColumn {
    pub feature: usize,
    pub name: String,
    pub threshold: f64,
}

impl BinColumn {
    pub fn label(&self) -> String {
        format!("{}:{}", self.name, self.threshold)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinDataset {
    /// `rows[i][c]` is 1 when row `i` lies above column `c`'s threshold.
    pub rows: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
    /// Ordered by feature, then ascending threshold.
    pub columns: Vec<BinColumn>,
    /// Names of features without any selected threshold.
    pub dropped: Vec<String>,
}

impl BinDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// `(count of label 0, count of label 1)` per occupied pattern.
    pub fn cells(&self) -> BTreeMap<&[u8], [usize; 2]> {
        let mut cells: BTreeMap<&[u8], [usize; 2]> = BTreeMap::new();
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            cells.entry(row.as_slice()).or_default()[y as usize] += 1;
        }
        cells
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| FccaError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header: Vec<String> = self.columns.iter().map(BinColumn::label).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, y) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(u8::to_string).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| FccaError::io(path, e))?;
        Ok(())
    }

    /// Reads [`BinDataset::write_csv`] output. Feature indices follow the
    /// order in which feature names first appear in the header.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| FccaError::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let header = r.headers()?.clone();
        if header.len() < 2 || header.get(header.len() - 1) != Some("label") {
            return Err(FccaError::Data("binarized CSV needs columns `name:t` then `label`".into()));
        }
        let mut names: Vec<String> = Vec::new();
        let mut columns = Vec::new();
        for h in header.iter().take(header.len() - 1) {
            let (name, t) = h
                .rsplit_once(':')
                .ok_or_else(|| FccaError::Data(format!("column `{h}` is not `name:threshold`")))?;
            let threshold: f64 = t
                .parse()
                .map_err(|_| FccaError::Data(format!("bad threshold in column `{h}`")))?;
            let feature = match names.iter().position(|n| n == name) {
                Some(f) => f,
                None => {
                    names.push(name.to_string());
                    names.len() - 1
                }
            };
            columns.push(BinColumn {
                feature,
                name: name.to_string(),
                threshold,
            });
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut bits = Vec::with_capacity(columns.len());
            for (c, cell) in rec.iter().enumerate() {
                let v = match cell.trim() {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(FccaError::NonNumeric {
                            row: i + 1,
                            column: header.get(c).unwrap_or("").to_string(),
                            value: other.to_string(),
                        })
                    }
                };
                bits.push(v);
            }
            labels.push(bits.pop().expect("label column"));
            rows.push(bits);
        }
        Ok(BinDataset {
            rows,
            labels,
            columns,
            dropped: Vec::new(),
        })
    }
}

/// Binarizes every row against the selected thresholds.
pub fn binarize(ds: &Dataset, sel: &QuantileSelection) -> Result<BinDataset> {
    if sel.tau.len() != ds.n_features() {
        return Err(FccaError::Dimension {
            expected: ds.n_features(),
            got: sel.tau.len(),
        });
    }
    if sel.n_thresholds() == 0 {
        return Err(FccaError::Data("no thresholds selected".into()));
    }
    let mut columns = Vec::new();
    let mut dropped = Vec::new();
    for (j, ts) in sel.tau.iter().enumerate() {
        if ts.is_empty() {
            dropped.push(ds.feature_names[j].clone());
        }
        let mut ts = ts.clone();
        ts.sort_by(f64::total_cmp);
        for t in ts {
            columns.push(BinColumn {
                feature: j,
                name: ds.feature_names[j].clone(),
                threshold: t,
            });
        }
    }
    let rows = ds
        .rows
        .par_iter()
        .map(|x| {
            columns
                .iter()
                .map(|c| u8::from(x[c.feature] > c.threshold))
                .collect()
        })
        .collect();
    Ok(BinDataset {
        rows,
        labels: ds.labels.clone(),
        columns,
        dropped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretizationMetrics {
    /// Compression rate `1 - distinct_cells / n`.
    pub eta: f64,
    /// Inconsistency rate: share of rows holding their cell's minority label.
    pub delta: f64,
    pub distinct_cells: usize,
    pub n_columns: usize,
    pub dropped_features: Vec<String>,
}

pub fn metrics(bds: &BinDataset) -> DiscretizationMetrics {
    let n = bds.n_rows();
    let cells = bds.cells();
    let minority: usize = cells.values().map(|c| c[0].min(c[1])).sum();
    let (eta, delta) = if n == 0 {
        (0.0, 0.0)
    } else {
        (
            1.0 - cells.len() as f64 / n as f64,
            minority as f64 / n as f64,
        )
    };
    DiscretizationMetrics {
        eta,
        delta,
        distinct_cells: cells.len(),
        n_columns: bds.n_columns(),
        dropped_features: bds.dropped.clone(),
    }
}

/// Training accuracy of predicting each cell's majority label (ties to 0);
/// no classifier on these columns can do better.
pub fn cell_majority_accuracy(bds: &BinDataset) -> f64 {
    let n = bds.n_rows();
    if n == 0 {
        return 0.0;
    }
    let correct: usize = bds.cells().values().map(|c| c[0].max(c[1])).sum();
    correct as f64 / n as f64
}

/// True when a surrogate's training accuracy respects the `1 - delta` ceiling.
pub fn consistency_ceiling_check(m: &DiscretizationMetrics, train_accuracy: f64) -> bool {
    train_accuracy <= 1.0 - m.delta + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let m = rows[0].len();
        Dataset::new(rows, labels, (0..m).map(|j| format!("f{j}")).collect()).unwrap()
    }

    #[test]
    fn bits_follow_le_rule() {
        let d = ds(vec![vec![0.4, 0.1], vec![0.3, 0.9]], vec![0, 1]);
        let sel = QuantileSelection::from_thresholds(vec![vec![0.6, 0.3], vec![]]);
        let b = binarize(&d, &sel).unwrap();
        assert_eq!(b.rows, vec![vec![1, 0], vec![0, 0]]);
        assert_eq!(b.columns[0].threshold, 0.3);
        assert_eq!(b.dropped, vec!["f1".to_string()]);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let d = ds(vec![vec![0.4]], vec![0]);
        let sel = QuantileSelection::from_thresholds(vec![vec![]]);
        assert!(binarize(&d, &sel).is_err());
    }

    #[test]
    fn metric_examples() {
        let b = BinDataset {
            rows: vec![vec![0], vec![0], vec![0], vec![1]],
            labels: vec![0, 0, 1, 1],
            columns: vec![BinColumn {
                feature: 0,
                name: "a".into(),
                threshold: 0.5,
            }],
            dropped: vec![],
        };
        let m = metrics(&b);
        assert_eq!(m.distinct_cells, 2);
        assert_eq!(m.eta, 0.5);
        assert_eq!(m.delta, 0.25);
        assert_eq!(cell_majority_accuracy(&b), 0.75);
        assert!(consistency_ceiling_check(&m, 0.75));
        assert!(!consistency_ceiling_check(&m, 0.76));

        let three = BinDataset {
            rows: vec![vec![0, 0], vec![0, 1], vec![1, 1], vec![1, 1]],
            labels: vec![0, 0, 1, 1],
            ..b
        };
        assert_eq!(metrics(&three).eta, 0.25);
    }

    #[test]
    fn csv_round_trip() {
        let d = ds(vec![vec![0.4, 0.1], vec![0.3, 0.9]], vec![0, 1]);
        let sel = QuantileSelection::from_thresholds(vec![vec![0.35], vec![0.5, 0.05]]);
        let b = binarize(&d, &sel).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bin.csv");
        b.write_csv(&p).unwrap();
        let head = std::fs::read_to_string(&p).unwrap();
        assert!(head.starts_with("f0:0.35,f1:0.05,f1:0.5,label\n"));
        let back = BinDataset::read_csv(&p).unwrap();
        assert_eq!(back.rows, b.rows);
        assert_eq!(back.labels, b.labels);
        assert_eq!(back.columns, b.columns);
    }

    proptest! {
        #[test]
        fn step_pattern_and_bounds(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 2), 2..40),
            ts in proptest::collection::vec(0.01f64..0.99, 1..6),
            seed in any::<u64>(),
        ) {
            let n = rows.len();
            let labels: Vec<u8> = (0..n).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
            let d = ds(rows, labels);
            let sel = QuantileSelection::from_thresholds(vec![ts.clone(), ts]);
            let b = binarize(&d, &sel).unwrap();
            for row in &b.rows {
                for pair in b.columns.windows(2).zip(row.windows(2)) {
                    if pair.0[0].feature == pair.0[1].feature {
                        prop_assert!(pair.1[0] >= pair.1[1]);
                    }
                }
            }
            let m = metrics(&b);
            prop_assert!((0.0..=0.5).contains(&m.delta));
            prop_assert!((0.0..1.0).contains(&m.eta));
            prop_assert!((cell_majority_accuracy(&b) - (1.0 - m.delta)).abs() < 1e-12);

            let mut perm = b.clone();
            perm.rows.reverse();
            perm.labels.reverse();
            prop_assert_eq!(metrics(&perm), m);
        }

        #[test]
        fn dropping_thresholds_coarsens(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 2), 2..40),
            ts in proptest::collection::vec(0.01f64..0.99, 2..6),
            seed in any::<u64>(),
        ) {
            let n = rows.len();
            let labels: Vec<u8> = (0..n).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
            let d = ds(rows, labels);
            let fine = QuantileSelection::from_thresholds(vec![ts.clone(), ts.clone()]);
            let coarse = QuantileSelection::from_thresholds(vec![ts[..1].to_vec(), ts[1..2].to_vec()]);
            let mf = metrics(&binarize(&d, &fine).unwrap());
            let mc = metrics(&binarize(&d, &coarse).unwrap());
            prop_assert!(mc.eta >= mf.eta);
            prop_assert!(mc.delta >= mf.delta);
        }
    }
}
