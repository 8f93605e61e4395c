use super::{majority, objective, Certificate, ColumnSource, SurrogateNode, SurrogateTree};
use crate::discretize::BinDataset;
use crate::error::{FccaError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Only used to report the objective.
    pub lambda_reg: f64,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: 3,
            min_leaf: 1,
            lambda_reg: 0.0,
        }
    }
}

fn gini_mass(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    n - ((c0 * c0 + c1 * c1) as f64) / n
}

/// Greedy top-down Gini tree over midpoint thresholds. Ties keep the lowest
/// column, then the lowest threshold. A node becomes a leaf when pure, at the
/// depth limit, or when no split has positive gain.
pub fn train_cart(
    rows: &[Vec<f64>],
    labels: &[u8],
    sources: Vec<ColumnSource>,
    params: &CartParams,
) -> Result<SurrogateTree> {
    if rows.is_empty() {
        return Err(FccaError::Data("cannot train a tree on zero rows".into()));
    }
    if params.max_depth == 0 {
        return Err(FccaError::Config("tree depth must be >= 1".into()));
    }
    let mut b = Builder {
        rows,
        labels,
        min_leaf: params.min_leaf.max(1),
        nodes: Vec::new(),
        errors: 0,
    };
    let all: Vec<usize> = (0..rows.len()).collect();
    b.grow(&all, params.max_depth);
    let mut tree = SurrogateTree {
        nodes: b.nodes,
        sources,
        lambda_reg: params.lambda_reg,
        objective: 0.0,
        certificate: Certificate::Greedy,
    };
    tree.objective = objective(b.errors, rows.len(), tree.n_leaves(), params.lambda_reg);
    Ok(tree)
}

pub fn train_cart_bin(bds: &BinDataset, params: &CartParams) -> Result<SurrogateTree> {
    let rows: Vec<Vec<f64>> = bds
        .rows
        .iter()
        .map(|r| r.iter().map(|&b| f64::from(b)).collect())
        .collect();
    train_cart(&rows, &bds.labels, ColumnSource::from_bin(bds), params)
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [u8],
    min_leaf: usize,
    nodes: Vec<SurrogateNode>,
    errors: usize,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> (usize, usize) {
        let c1 = idx.iter().filter(|&&i| self.labels[i] == 1).count();
        (idx.len() - c1, c1)
    }

    fn grow(&mut self, idx: &[usize], depth_left: usize) -> usize {
        let at = self.nodes.len();
        let (c0, c1) = self.counts(idx);
        let label = majority(c0, c1);
        self.nodes.push(SurrogateNode::Leaf { label });
        let split = if depth_left > 0 && c0 > 0 && c1 > 0 {
            self.best_split(idx, c0, c1)
        } else {
            None
        };
        match split {
            None => {
                self.errors += c0.min(c1);
            }
            Some((column, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.rows[i][column] <= threshold);
                let left = self.grow(&l, depth_left - 1);
                let right = self.grow(&r, depth_left - 1);
                self.nodes[at] = SurrogateNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                };
            }
        }
        at
    }

    fn best_split(&self, idx: &[usize], c0: usize, c1: usize) -> Option<(usize, f64)> {
        let parent = gini_mass(c0, c1);
        let m = self.rows[0].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for col in 0..m {
            order.sort_by(|&a, &b| self.rows[a][col].total_cmp(&self.rows[b][col]).then(a.cmp(&b)));
            let (mut l0, mut l1) = (0usize, 0usize);
            for k in 0..order.len() - 1 {
                if self.labels[order[k]] == 1 {
                    l1 += 1;
                } else {
                    l0 += 1;
                }
                let (a, b) = (self.rows[order[k]][col], self.rows[order[k + 1]][col]);
                if a == b || k + 1 < self.min_leaf || order.len() - k - 1 < self.min_leaf {
                    continue;
                }
                let gain = parent - gini_mass(l0, l1) - gini_mass(c0 - l0, c1 - l1);
                if gain > best.map_or(1e-12, |b| b.2) {
                    best = Some((col, 0.5 * (a + b), gain));
                }
            }
        }
        best.map(|(c, t, _)| (c, t))
    }
}
