use std::collections::HashMap;
use std::rc::Rc;

use super::{majority, objective, Certificate, ColumnSource, SurrogateNode, SurrogateTree};
use crate::discretize::BinDataset;
use crate::error::{FccaError, Result};

/// Larger column sets are refused rather than risking the memo table.
pub const MAX_OPTIMAL_COLUMNS: usize = 1024;

/// Objectives closer than this are ties.
const TIE: f64 = 1e-12;

const LEAF_TOKEN: u32 = u32::MAX;

enum Shape {
    Leaf(u8),
    Split(u32, Rc<Shape>, Rc<Shape>),
}

#[derive(Clone)]
struct Sol {
    errors: usize,
    leaves: usize,
    shape: Rc<Shape>,
    /// Preorder column sequence with leaf markers; breaks objective ties.
    seq: Rc<Vec<u32>>,
}

struct Solver {
    n: usize,
    lambda: f64,
    words: usize,
    /// Per column: rows whose bit is 1.
    ones: Vec<Vec<u64>>,
    label1: Vec<u64>,
    /// Distinct full row pattern of each row.
    pattern: Vec<usize>,
    n_patterns: usize,
    memo: HashMap<(Vec<u64>, usize), Sol>,
}

/// Globally optimal tree of depth at most `max_depth` over the binary columns,
/// minimizing `errors / n + lambda_reg * leaves`.
///
/// Memoized recursion on (row subset, remaining depth). A subset's
/// inconsistency (minority count within each full row pattern) lower-bounds
/// the errors of any subtree on it, which prunes splits and lets a leaf win
/// without search. Ties prefer fewer leaves, then the lexicographically
/// smallest preorder column sequence. Splits with an empty side are never
/// taken, so no path repeats a column.
pub fn train_optimal(bds: &BinDataset, max_depth: usize, lambda_reg: f64) -> Result<SurrogateTree> {
    let n = bds.n_rows();
    let c = bds.n_columns();
    if n == 0 {
        return Err(FccaError::Data("cannot train a tree on zero rows".into()));
    }
    if c == 0 {
        return Err(FccaError::Data("optimal tree needs at least one column".into()));
    }
    if c > MAX_OPTIMAL_COLUMNS {
        return Err(FccaError::Config(format!(
            "{c} columns exceed the optimal-tree limit of {MAX_OPTIMAL_COLUMNS}"
        )));
    }
    if !(lambda_reg >= 0.0 && lambda_reg.is_finite()) {
        return Err(FccaError::Config("lambda_reg must be finite and non-negative".into()));
    }
    let words = n.div_ceil(64);
    let mut ones = vec![vec![0u64; words]; c];
    let mut label1 = vec![0u64; words];
    for (i, row) in bds.rows.iter().enumerate() {
        for (col, &b) in row.iter().enumerate() {
            if b == 1 {
                ones[col][i / 64] |= 1 << (i % 64);
            }
        }
        if bds.labels[i] == 1 {
            label1[i / 64] |= 1 << (i % 64);
        }
    }
    let mut ids: HashMap<&[u8], usize> = HashMap::new();
    let pattern: Vec<usize> = bds
        .rows
        .iter()
        .map(|r| {
            let next = ids.len();
            *ids.entry(r.as_slice()).or_insert(next)
        })
        .collect();
    let mut solver = Solver {
        n,
        lambda: lambda_reg,
        words,
        ones,
        label1,
        pattern,
        n_patterns: ids.len(),
        memo: HashMap::new(),
    };
    let mut all = vec![u64::MAX; words];
    if n % 64 != 0 {
        all[words - 1] = (1u64 << (n % 64)) - 1;
    }
    let sol = solver.best(&all, max_depth);
    let mut nodes = Vec::new();
    flatten(&sol.shape, &mut nodes);
    Ok(SurrogateTree {
        nodes,
        sources: ColumnSource::from_bin(bds),
        lambda_reg,
        objective: objective(sol.errors, n, sol.leaves, lambda_reg),
        certificate: Certificate::Optimal,
    })
}

fn flatten(shape: &Shape, nodes: &mut Vec<SurrogateNode>) -> usize {
    let at = nodes.len();
    match shape {
        Shape::Leaf(label) => nodes.push(SurrogateNode::Leaf { label: *label }),
        Shape::Split(col, l, r) => {
            nodes.push(SurrogateNode::Leaf { label: 0 });
            let left = flatten(l, nodes);
            let right = flatten(r, nodes);
            nodes[at] = SurrogateNode::Split {
                column: *col as usize,
                threshold: 0.5,
                left,
                right,
            };
        }
    }
    at
}

fn count(set: &[u64]) -> usize {
    set.iter().map(|w| w.count_ones() as usize).sum()
}

fn count_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

impl Solver {
    fn obj(&self, s: &Sol) -> f64 {
        objective(s.errors, self.n, s.leaves, self.lambda)
    }

    fn better(&self, a: &Sol, b: &Sol) -> bool {
        let (oa, ob) = (self.obj(a), self.obj(b));
        if oa < ob - TIE {
            return true;
        }
        if oa > ob + TIE {
            return false;
        }
        (a.leaves, &a.seq) < (b.leaves, &b.seq)
    }

    fn inconsistency(&self, set: &[u64]) -> usize {
        let mut counts = vec![[0usize; 2]; self.n_patterns];
        for (w, &word) in set.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let i = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let y = (self.label1[i / 64] >> (i % 64)) & 1;
                counts[self.pattern[i]][y as usize] += 1;
            }
        }
        counts.iter().map(|c| c[0].min(c[1])).sum()
    }

    fn leaf(&self, set: &[u64]) -> Sol {
        let total = count(set);
        let c1 = count_and(set, &self.label1);
        let c0 = total - c1;
        Sol {
            errors: c0.min(c1),
            leaves: 1,
            shape: Rc::new(Shape::Leaf(majority(c0, c1))),
            seq: Rc::new(vec![LEAF_TOKEN]),
        }
    }

    fn best(&mut self, set: &[u64], depth: usize) -> Sol {
        let leaf = self.leaf(set);
        if depth == 0 || leaf.errors == 0 {
            return leaf;
        }
        let floor = objective(self.inconsistency(set), self.n, 2, self.lambda);
        if floor >= self.obj(&leaf) - TIE {
            return leaf;
        }
        let key = (set.to_vec(), depth);
        if let Some(s) = self.memo.get(&key) {
            return s.clone();
        }
        let mut best = leaf;
        let mut left = vec![0u64; self.words];
        let mut right = vec![0u64; self.words];
        for col in 0..self.ones.len() {
            for w in 0..self.words {
                right[w] = set[w] & self.ones[col][w];
                left[w] = set[w] & !self.ones[col][w];
            }
            if right.iter().all(|&w| w == 0) || left.iter().all(|&w| w == 0) {
                continue;
            }
            let lb_left = objective(self.inconsistency(&left), self.n, 1, self.lambda);
            let lb_right = objective(self.inconsistency(&right), self.n, 1, self.lambda);
            let cap = self.obj(&best) + TIE;
            if lb_left + lb_right > cap {
                continue;
            }
            let sl = self.best(&left, depth - 1);
            if self.obj(&sl) + lb_right > cap {
                continue;
            }
            let sr = self.best(&right, depth - 1);
            let mut seq = Vec::with_capacity(1 + sl.seq.len() + sr.seq.len());
            seq.push(col as u32);
            seq.extend_from_slice(&sl.seq);
            seq.extend_from_slice(&sr.seq);
            let cand = Sol {
                errors: sl.errors + sr.errors,
                leaves: sl.leaves + sr.leaves,
                shape: Rc::new(Shape::Split(col as u32, sl.shape.clone(), sr.shape.clone())),
                seq: Rc::new(seq),
            };
            if self.better(&cand, &best) {
                best = cand;
            }
        }
        self.memo.insert(key, best.clone());
        best
    }
}

#[cfg(test)]
mod tests {
    use super::super::{train_cart_bin, tree_objective, CartParams};
    use super::*;
    use crate::discretize::{cell_majority_accuracy, metrics, BinColumn};
    use proptest::prelude::*;

    fn bds(rows: Vec<Vec<u8>>, labels: Vec<u8>) -> BinDataset {
        let c = rows[0].len();
        BinDataset {
            rows,
            labels,
            columns: (0..c)
                .map(|k| BinColumn {
                    feature: k,
                    name: format!("c{k}"),
                    threshold: 0.5,
                })
                .collect(),
            dropped: vec![],
        }
    }

    /// Every tree of depth <= `d` over the columns, as (errors, leaves).
    fn brute_force(b: &BinDataset, d: usize, lambda: f64) -> f64 {
        fn go(b: &BinDataset, rows: &[usize], d: usize) -> Vec<(usize, usize)> {
            let c1 = rows.iter().filter(|&&i| b.labels[i] == 1).count();
            let mut out = vec![(c1.min(rows.len() - c1), 1)];
            if d == 0 {
                return out;
            }
            for col in 0..b.n_columns() {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| b.rows[i][col] == 0);
                let left = go(b, &l, d - 1);
                let right = go(b, &r, d - 1);
                for &(el, ll) in &left {
                    for &(er, lr) in &right {
                        out.push((el + er, ll + lr));
                    }
                }
            }
            out
        }
        let all: Vec<usize> = (0..b.n_rows()).collect();
        go(b, &all, d)
            .into_iter()
            .map(|(e, l)| objective(e, b.n_rows(), l, lambda))
            .fold(f64::INFINITY, f64::min)
    }

    fn xor() -> BinDataset {
        bds(
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn xor_is_solved_at_depth_two() {
        let t = train_optimal(&xor(), 2, 0.0).unwrap();
        let e = t.evaluate_bin(&xor());
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.n_leaves, 4);
        assert_eq!(t.certificate, Certificate::Optimal);
    }

    #[test]
    fn heavy_regularization_gives_single_leaf() {
        let t = train_optimal(&xor(), 3, 1.0).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.nodes, vec![SurrogateNode::Leaf { label: 0 }]);
    }

    #[test]
    fn no_columns_is_an_error() {
        let b = BinDataset {
            rows: vec![vec![]],
            labels: vec![0],
            columns: vec![],
            dropped: vec![],
        };
        assert!(train_optimal(&b, 2, 0.0).is_err());
    }

    #[test]
    fn objective_is_recomputable() {
        let b = xor();
        let t = train_optimal(&b, 2, 0.1).unwrap();
        assert!((tree_objective(&t, &b, 0.1) - t.objective).abs() < 1e-15);
    }

    fn instance() -> impl Strategy<Value = BinDataset> {
        (1usize..=8, 1usize..=64).prop_flat_map(|(c, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(0u8..=1, c), n),
                proptest::collection::vec(0u8..=1, n),
            )
                .prop_map(|(rows, labels)| bds(rows, labels))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn matches_exhaustive_enumeration(b in instance(), d in 1usize..=2, lam in prop_oneof![Just(0.0), 0.0f64..0.05]) {
            let t = train_optimal(&b, d, lam).unwrap();
            let oracle = brute_force(&b, d, lam);
            prop_assert!((t.objective - oracle).abs() <= 1e-9, "optimal {} oracle {}", t.objective, oracle);
            prop_assert!((tree_objective(&t, &b, lam) - t.objective).abs() <= 1e-12);
            prop_assert!(t.depth() <= d);
        }

        #[test]
        fn dominates_cart_and_respects_ceiling(b in instance(), d in 1usize..=3, lam in 0.0f64..0.05) {
            let opt = train_optimal(&b, d, lam).unwrap();
            let cart = train_cart_bin(&b, &CartParams { max_depth: d, min_leaf: 1, lambda_reg: lam }).unwrap();
            prop_assert!(opt.objective <= tree_objective(&cart, &b, lam) + 1e-12);
            let m = metrics(&b);
            for t in [&opt, &cart] {
                prop_assert!(t.evaluate_bin(&b).accuracy <= 1.0 - m.delta + 1e-12);
            }
            prop_assert!((cell_majority_accuracy(&b) - (1.0 - m.delta)).abs() < 1e-12);
        }

        #[test]
        fn deeper_never_worse(b in instance(), lam in 0.0f64..0.05) {
            let o1 = train_optimal(&b, 1, lam).unwrap().objective;
            let o2 = train_optimal(&b, 2, lam).unwrap().objective;
            let o3 = train_optimal(&b, 3, lam).unwrap().objective;
            prop_assert!(o2 <= o1 + 1e-12);
            prop_assert!(o3 <= o2 + 1e-12);
        }
    }
}
