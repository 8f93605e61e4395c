use super::{sigmoid, Ensemble, EnsembleKind, Node, Tree};
use crate::data::Dataset;
use crate::error::{FccaError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GbParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Kept for reproducible configs; the fitter itself is deterministic.
    pub seed: u64,
}

impl Default for GbParams {
    fn default() -> Self {
        GbParams {
            n_estimators: 100,
            max_depth: 1,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

/// Stagewise logistic-loss boosting of squared-error regression trees.
///
/// Each stage fits the negative gradient `y - p`, then replaces every leaf
/// value by one Newton step `sum(y - p) / sum(p (1 - p))` over its rows.
/// `F0` is the log-odds of the class-1 frequency.
pub fn train_gb(ds: &Dataset, params: &GbParams) -> Result<Ensemble> {
    if params.max_depth == 0 {
        return Err(FccaError::Config("boosting depth must be >= 1".into()));
    }
    let n = ds.n_rows();
    let [c0, c1] = ds.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(FccaError::Model("single-class training labels".into()));
    }
    let prior = c1 as f64 / n as f64;
    let init_raw = (prior / (1.0 - prior)).ln();
    let sorted = presort(&ds.rows, ds.n_features());

    let mut raw = vec![init_raw; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    for _ in 0..params.n_estimators {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            residual[i] = f64::from(ds.labels[i]) - p;
            hessian[i] = p * (1.0 - p);
        }
        let fitter = RegressionFitter {
            rows: &ds.rows,
            sorted: &sorted,
            residual: &residual,
            hessian: &hessian,
        };
        let tree = fitter.fit(params.max_depth);
        for (i, row) in ds.rows.iter().enumerate() {
            raw[i] += params.learning_rate * tree.leaf_value(row);
        }
        trees.push(tree);
    }
    Ok(Ensemble {
        kind: EnsembleKind::Gb,
        trees,
        learning_rate: params.learning_rate,
        init_raw,
        n_features: ds.n_features(),
    })
}

/// Row indices sorted by value, once per feature.
pub(crate) fn presort(rows: &[Vec<f64>], m: usize) -> Vec<Vec<usize>> {
    (0..m)
        .map(|j| {
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            idx.sort_by(|&a, &b| rows[a][j].total_cmp(&rows[b][j]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

struct RegressionFitter<'a> {
    rows: &'a [Vec<f64>],
    sorted: &'a [Vec<usize>],
    residual: &'a [f64],
    hessian: &'a [f64],
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl RegressionFitter<'_> {
    fn fit(&self, max_depth: usize) -> Tree {
        let mut nodes = Vec::new();
        let active = vec![true; self.rows.len()];
        self.grow(&mut nodes, &active, max_depth);
        Tree { nodes }
    }

    fn grow(&self, nodes: &mut Vec<Node>, active: &[bool], depth_left: usize) -> usize {
        let idx = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        let split = if depth_left > 0 {
            self.best_split(active)
        } else {
            None
        };
        match split {
            Some(s) => {
                let go_left: Vec<bool> = (0..self.rows.len())
                    .map(|i| active[i] && self.rows[i][s.feature] <= s.threshold)
                    .collect();
                let go_right: Vec<bool> = (0..self.rows.len())
                    .map(|i| active[i] && !go_left[i])
                    .collect();
                let left = self.grow(nodes, &go_left, depth_left - 1);
                let right = self.grow(nodes, &go_right, depth_left - 1);
                nodes[idx] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                    gain: s.gain,
                };
            }
            None => nodes[idx] = Node::Leaf { value: self.newton_value(active) },
        }
        idx
    }

    fn newton_value(&self, active: &[bool]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in (0..self.rows.len()).filter(|&i| active[i]) {
            num += self.residual[i];
            den += self.hessian[i];
        }
        if den.abs() < 1e-150 {
            0.0
        } else {
            num / den
        }
    }

    /// Exhaustive search over midpoints of consecutive distinct values,
    /// maximizing the squared-error reduction. Ties keep the first candidate
    /// (lowest feature, then lowest threshold).
    fn best_split(&self, active: &[bool]) -> Option<BestSplit> {
        let (mut total, mut count) = (0.0, 0usize);
        for i in (0..self.rows.len()).filter(|&i| active[i]) {
            total += self.residual[i];
            count += 1;
        }
        if count < 2 {
            return None;
        }
        let parent = total * total / count as f64;
        let mut best: Option<BestSplit> = None;
        for (j, order) in self.sorted.iter().enumerate() {
            let members: Vec<usize> = order.iter().copied().filter(|&i| active[i]).collect();
            let (mut left_sum, mut left_n) = (0.0, 0usize);
            for w in members.windows(2) {
                left_sum += self.residual[w[0]];
                left_n += 1;
                let (a, b) = (self.rows[w[0]][j], self.rows[w[1]][j]);
                if a == b {
                    continue;
                }
                let right_sum = total - left_sum;
                let right_n = count - left_n;
                let gain = left_sum * left_sum / left_n as f64
                    + right_sum * right_sum / right_n as f64
                    - parent;
                if gain > best.as_ref().map_or(0.0, |s| s.gain) {
                    best = Some(BestSplit {
                        feature: j,
                        threshold: 0.5 * (a + b),
                        gain,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TargetModel;

    fn separable() -> Dataset {
        Dataset::new(
            (0..10).map(|i| vec![i as f64 / 9.0]).collect(),
            (0..10).map(|i| u8::from(i >= 5)).collect(),
            vec!["x".into()],
        )
        .unwrap()
    }

    #[test]
    fn separable_reaches_full_accuracy() {
        let ds = separable();
        let model = TargetModel::Ensemble(train_gb(&ds, &GbParams::default()).unwrap());
        assert_eq!(model.accuracy(&ds.rows, &ds.labels), 1.0);
    }

    #[test]
    fn first_stump_splits_at_midpoint() {
        let ds = separable();
        let e = train_gb(&ds, &GbParams::default()).unwrap();
        assert_eq!(e.trees.len(), 100);
        assert!(e.trees.iter().all(|t| t.depth() == 1));
        let (f, c, _) = e.trees[0].splits().next().unwrap();
        assert_eq!(f, 0);
        assert!((c - 0.5 * (4.0 / 9.0 + 5.0 / 9.0)).abs() < 1e-15);
        assert_eq!(e.init_raw, 0.0);
    }

    #[test]
    fn single_class_is_an_error() {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![1, 1], vec!["x".into()]).unwrap();
        assert!(matches!(train_gb(&ds, &GbParams::default()), Err(FccaError::Model(_))));
    }

    #[test]
    fn deeper_trees_fit_interaction() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let mut r = Vec::new();
        let mut y = Vec::new();
        for _ in 0..5 {
            for row in &rows {
                y.push(u8::from(row[0] > 0.5 && row[1] > 0.5));
                r.push(row.clone());
            }
        }
        let ds = Dataset::new(r, y, vec!["a".into(), "b".into()]).unwrap();
        let params = GbParams {
            max_depth: 2,
            n_estimators: 30,
            learning_rate: 0.5,
            seed: 0,
        };
        let e = train_gb(&ds, &params).unwrap();
        assert_eq!(e.trees[0].depth(), 2);
        let model = TargetModel::Ensemble(e);
        assert_eq!(model.accuracy(&ds.rows, &ds.labels), 1.0);
    }
}
