//! Surrogate decision trees: greedy Gini CART and certified-optimal
//! depth-bounded trees minimizing `errors / n + lambda_reg * leaves`.

mod cart;
mod optimal;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::discretize::BinDataset;

pub use cart::{train_cart, train_cart_bin, CartParams};
pub use optimal::{train_optimal, MAX_OPTIMAL_COLUMNS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SurrogateNode {
    /// Rows with `x[column] > threshold` go right.
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { label: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Optimal,
    Greedy,
}

/// What a column means in terms of an original feature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnSource {
    pub feature: usize,
    pub name: String,
    /// Binarization threshold; `None` for raw continuous columns, whose
    /// thresholds live in the split nodes.
    pub threshold: Option<f64>,
}

impl ColumnSource {
    pub fn from_bin(bds: &BinDataset) -> Vec<ColumnSource> {
        bds.columns
            .iter()
            .map(|c| ColumnSource {
                feature: c.feature,
                name: c.name.clone(),
                threshold: Some(c.threshold),
            })
            .collect()
    }

    pub fn continuous(names: &[String]) -> Vec<ColumnSource> {
        names
            .iter()
            .enumerate()
            .map(|(j, n)| ColumnSource {
                feature: j,
                name: n.clone(),
                threshold: None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateTree {
    /// Root at index 0.
    pub nodes: Vec<SurrogateNode>,
    pub sources: Vec<ColumnSource>,
    pub lambda_reg: f64,
    /// Training objective `errors / n + lambda_reg * leaves`.
    pub objective: f64,
    pub certificate: Certificate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TreeEval {
    pub accuracy: f64,
    pub n_leaves: usize,
    /// Distinct original features tested anywhere in the tree.
    pub n_features_used: usize,
    pub depth: usize,
}

impl SurrogateTree {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                SurrogateNode::Leaf { label } => return label,
                SurrogateNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => i = if x[column] > threshold { right } else { left },
            }
        }
    }

    pub fn predict_bits(&self, x: &[u8]) -> u8 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                SurrogateNode::Leaf { label } => return label,
                SurrogateNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => i = if f64::from(x[column]) > threshold { right } else { left },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, SurrogateNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[SurrogateNode], i: usize) -> usize {
            match nodes[i] {
                SurrogateNode::Leaf { .. } => 0,
                SurrogateNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn features_used(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                SurrogateNode::Split { column, .. } => Some(self.sources[*column].feature),
                SurrogateNode::Leaf { .. } => None,
            })
            .collect()
    }

    fn summary(&self, correct: usize, n: usize) -> TreeEval {
        TreeEval {
            accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
            n_leaves: self.n_leaves(),
            n_features_used: self.features_used().len(),
            depth: self.depth(),
        }
    }

    pub fn evaluate(&self, rows: &[Vec<f64>], labels: &[u8]) -> TreeEval {
        let correct = rows
            .iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        self.summary(correct, rows.len())
    }

    pub fn evaluate_bin(&self, bds: &BinDataset) -> TreeEval {
        let correct = bds
            .rows
            .iter()
            .zip(&bds.labels)
            .filter(|(x, &y)| self.predict_bits(x) == y)
            .count();
        self.summary(correct, bds.n_rows())
    }

    fn describe(&self, column: usize, threshold: f64) -> String {
        let src = &self.sources[column];
        format!("feature `{}` > {}", src.name, src.threshold.unwrap_or(threshold))
    }

    pub fn to_json(&self) -> Value {
        fn node(t: &SurrogateTree, i: usize) -> Value {
            match t.nodes[i] {
                SurrogateNode::Leaf { label } => json!({ "leaf": label }),
                SurrogateNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => json!({
                    "test": t.describe(column, threshold),
                    "column": column,
                    "feature": t.sources[column].feature,
                    "threshold": t.sources[column].threshold.unwrap_or(threshold),
                    "false": node(t, left),
                    "true": node(t, right),
                }),
            }
        }
        json!({
            "certificate": self.certificate,
            "objective": self.objective,
            "lambda_reg": self.lambda_reg,
            "depth": self.depth(),
            "leaves": self.n_leaves(),
            "root": node(self, 0),
        })
    }

    /// Indented `if` / `else` rendering.
    pub fn to_text(&self) -> String {
        fn go(t: &SurrogateTree, i: usize, indent: usize, out: &mut String) {
            let pad = "  ".repeat(indent);
            match t.nodes[i] {
                SurrogateNode::Leaf { label } => {
                    let _ = writeln!(out, "{pad}predict {label}");
                }
                SurrogateNode::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "{pad}if {}:", t.describe(column, threshold));
                    go(t, right, indent + 1, out);
                    let _ = writeln!(out, "{pad}else:");
                    go(t, left, indent + 1, out);
                }
            }
        }
        let mut out = String::new();
        go(self, 0, 0, &mut out);
        out
    }
}

/// `errors / n + lambda * leaves`.
pub fn objective(errors: usize, n: usize, leaves: usize, lambda: f64) -> f64 {
    errors as f64 / n as f64 + lambda * leaves as f64
}

/// Majority label, ties to 0.
pub(crate) fn majority(c0: usize, c1: usize) -> u8 {
    u8::from(c1 > c0)
}

/// Training objective of any tree on a binarized dataset.
pub fn tree_objective(tree: &SurrogateTree, bds: &BinDataset, lambda: f64) -> f64 {
    let errors = bds
        .rows
        .iter()
        .zip(&bds.labels)
        .filter(|(x, &y)| tree.predict_bits(x) != y)
        .count();
    objective(errors, bds.n_rows(), tree.n_leaves(), lambda)
}
