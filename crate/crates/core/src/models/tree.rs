use serde::{Deserialize, Serialize};

/// A node of an axis-aligned binary tree. Inputs with `x[feature] <= threshold`
/// go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Training impurity decrease of this split.
        gain: f64,
    },
    /// Gradient boosting: the leaf's raw-score value. Random forest: the
    /// class-1 weight (the class-0 weight is `1 - value`).
    Leaf { value: f64 },
}

/// Root is `nodes[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

/// Interval `(lo, hi]` a leaf imposes on one feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub feature: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        v > self.lo && v <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafBox {
    pub node: usize,
    pub value: f64,
    /// One entry per feature tested on the path, sorted by feature.
    pub bounds: Vec<Interval>,
}

impl LeafBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds.iter().all(|b| b.contains(x[b.feature]))
    }
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn leaf_node(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if x[feature] <= threshold { left } else { right },
                Node::Leaf { .. } => return idx,
            }
        }
    }

    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_node(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_node returns a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Split { left, right, .. } => 1 + rec(t, left).max(rec(t, right)),
                Node::Leaf { .. } => 0,
            }
        }
        rec(self, 0)
    }

    pub fn splits(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Split {
                feature,
                threshold,
                gain,
                ..
            } => Some((feature, threshold, gain)),
            Node::Leaf { .. } => None,
        })
    }

    /// Sorted, de-duplicated features this tree splits on.
    pub fn features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.splits().map(|(j, _, _)| j).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Every leaf with the box of inputs that reach it.
    pub fn leaf_boxes(&self) -> Vec<LeafBox> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::<Interval>::new())];
        while let Some((idx, bounds)) = stack.pop() {
            match self.nodes[idx] {
                Node::Leaf { value } => {
                    let mut bounds = bounds;
                    bounds.sort_by_key(|b| b.feature);
                    out.push(LeafBox {
                        node: idx,
                        value,
                        bounds,
                    });
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let narrow = |bounds: &Vec<Interval>, lo: f64, hi: f64| {
                        let mut b = bounds.clone();
                        match b.iter_mut().find(|i| i.feature == feature) {
                            Some(i) => {
                                i.lo = i.lo.max(lo);
                                i.hi = i.hi.min(hi);
                            }
                            None => b.push(Interval { feature, lo, hi }),
                        }
                        b
                    };
                    stack.push((right, narrow(&bounds, threshold, f64::INFINITY)));
                    stack.push((left, narrow(&bounds, f64::NEG_INFINITY, threshold)));
                }
            }
        }
        out.sort_by_key(|l| l.node);
        out
    }
}
