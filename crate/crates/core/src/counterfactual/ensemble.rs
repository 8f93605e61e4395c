use super::candidates::{Incumbent, COST_TOL};
use super::{build_candidates, CandidateGrid, CeProblem, CeSolution};
use crate::error::Result;
use crate::models::Ensemble;

/// Slack on the accumulated-score feasibility tests; the final check always
/// recomputes the raw score through the model.
const SCORE_TOL: f64 = 1e-12;

struct LeafInfo {
    /// Signed contribution: positive moves toward the target class.
    contrib: f64,
    /// `compat[pos][k]`: candidate `k` of `TreeInfo::features[pos]` lies in
    /// this leaf's interval.
    compat: Vec<Vec<bool>>,
    /// `min_cost[pos]`: cheapest compatible candidate of that feature.
    min_cost: Vec<f64>,
}

struct TreeInfo {
    features: Vec<usize>,
    leaves: Vec<LeafInfo>,
}

enum NodeEval {
    Infeasible,
    /// Leaving every free feature at `x0` already reaches the margin.
    Origin,
    Bound(f64),
}

struct Search<'a> {
    prob: &'a CeProblem,
    model: &'a Ensemble,
    grid: CandidateGrid,
    trees: Vec<TreeInfo>,
    order: Vec<usize>,
    /// Position of each feature in `order`.
    rank: Vec<usize>,
    assign: Vec<Option<usize>>,
    base: f64,
    best: Option<Incumbent>,
    nodes: u64,
}

/// Minimum-cost counterfactual over the candidate grid of a tree ensemble.
///
/// Depth-first branch-and-bound over features ordered by their best possible
/// score gain. Each node bounds the cost to close the remaining score gap
/// with the LP relaxation of a multiple-choice knapsack over the free
/// features; gains are exact for trees whose only free feature is the one
/// being moved, and a tree with several free features is charged to one of
/// them with its best compatible leaf.
pub fn solve_ensemble_ce(model: &Ensemble, prob: &CeProblem) -> Result<CeSolution> {
    prob.validate_shape(model.n_features)?;
    prob.check_label(u8::from(model.raw(&prob.x0) >= 0.0))?;
    let grid = build_candidates(model, prob)?;
    let sign = prob.direction();
    let trees: Vec<TreeInfo> = model
        .trees
        .iter()
        .map(|t| {
            let features = t.features();
            let leaves = t
                .leaf_boxes()
                .into_iter()
                .map(|lb| {
                    let compat = features
                        .iter()
                        .map(|&j| {
                            let iv = lb.bounds.iter().find(|b| b.feature == j);
                            grid.features[j]
                                .values
                                .iter()
                                .map(|&v| iv.map_or(true, |b| b.contains(v)))
                                .collect()
                        })
                        .collect();
                    let min_cost = features
                        .iter()
                        .zip(&compat)
                        .map(|(&j, ok): (&usize, &Vec<bool>)| {
                            let f = &grid.features[j];
                            ok.iter()
                                .zip(&f.costs)
                                .filter(|(&c, _)| c)
                                .map(|(_, &c)| c)
                                .fold(f64::INFINITY, f64::min)
                        })
                        .collect();
                    LeafInfo {
                        contrib: sign * model.contribution(lb.value),
                        compat,
                        min_cost,
                    }
                })
                .collect();
            TreeInfo { features, leaves }
        })
        .collect();
    let m = prob.n_features();
    let mut assign: Vec<Option<usize>> = grid
        .features
        .iter()
        .map(|f| (f.values.len() == 1).then_some(f.origin))
        .collect();
    let mut search = Search {
        prob,
        model,
        grid,
        trees,
        order: Vec::new(),
        rank: vec![0; m],
        assign: Vec::new(),
        base: sign * model.base(),
        best: None,
        nodes: 0,
    };

    // Branch on the features that can move the score most first.
    let root_gain = {
        search.assign = assign.clone();
        search.gains().gamma
    };
    let mut order: Vec<usize> = (0..m).filter(|&j| assign[j].is_none()).collect();
    let best_gain = |j: usize| root_gain[j].iter().cloned().fold(0.0, f64::max);
    order.sort_by(|&a, &b| best_gain(b).total_cmp(&best_gain(a)).then(a.cmp(&b)));
    for (r, &j) in order.iter().enumerate() {
        search.rank[j] = r;
    }
    search.order = order;
    search.assign = std::mem::take(&mut assign);

    search.greedy();
    search.dfs(0, 0.0);
    let nodes = search.nodes;
    Ok(match search.best {
        Some(b) => CeSolution::optimal(prob, b.x, b.score, nodes),
        None => CeSolution::infeasible(prob, nodes),
    })
}

/// Score bounds at a search node.
struct NodeGains {
    /// Per free feature and candidate: gain credited to that move.
    gamma: Vec<Vec<f64>>,
    /// Part of `gamma` from trees whose only free feature is `j`.
    single: Vec<Vec<f64>>,
    /// Trees with several free features: `(tree, score at origin, reachable leaves)`.
    multi: Vec<(usize, f64, Vec<usize>)>,
    /// Score with every free feature at `x0`.
    current: f64,
    /// Best reachable score.
    optimistic: f64,
}

impl Search<'_> {
    fn gains(&self) -> NodeGains {
        let mut multi = Vec::new();
        let mut single: Vec<Vec<f64>> = self
            .assign
            .iter()
            .enumerate()
            .map(|(j, a)| match a {
                None => vec![0.0; self.grid.features[j].values.len()],
                Some(_) => Vec::new(),
            })
            .collect();
        let mut gamma: Vec<Vec<f64>> = self
            .assign
            .iter()
            .enumerate()
            .map(|(j, a)| match a {
                None => vec![0.0; self.grid.features[j].values.len()],
                Some(_) => Vec::new(),
            })
            .collect();
        let mut current = self.base;
        let mut optimistic = self.base;
        let mut reach: Vec<bool> = Vec::new();
        let mut free: Vec<usize> = Vec::new();
        for (t, tree) in self.trees.iter().enumerate() {
            free.clear();
            for (pos, &j) in tree.features.iter().enumerate() {
                if self.assign[j].is_none() {
                    free.push(pos);
                }
            }
            reach.clear();
            reach.extend(tree.leaves.iter().map(|leaf| {
                tree.features.iter().enumerate().all(|(pos, &j)| match self.assign[j] {
                    Some(k) => leaf.compat[pos][k],
                    None => true,
                })
            }));
            let mut cur = f64::NAN;
            let mut best = f64::NEG_INFINITY;
            for (leaf, _) in tree.leaves.iter().zip(&reach).filter(|(_, &r)| r) {
                best = best.max(leaf.contrib);
                let at_origin = free.iter().all(|&pos| {
                    let j = tree.features[pos];
                    leaf.compat[pos][self.grid.features[j].origin]
                });
                if at_origin {
                    cur = leaf.contrib;
                }
            }
            debug_assert!(cur.is_finite());
            current += cur;
            optimistic += best;
            match free.len() {
                0 => {}
                1 => {
                    let pos = free[0];
                    let j = tree.features[pos];
                    for (k, g) in gamma[j].iter_mut().enumerate() {
                        let leaf = tree
                            .leaves
                            .iter()
                            .zip(&reach)
                            .find(|(l, &r)| r && l.compat[pos][k])
                            .map(|(l, _)| l.contrib)
                            .unwrap_or(cur);
                        *g += leaf - cur;
                        single[j][k] += leaf - cur;
                    }
                }
                _ => {
                    // The reached leaf must agree with every free feature, so
                    // the tree's gain is bounded through any one of them. Use
                    // the one whose origin candidate leaves the least slack.
                    let top = |pos: usize, k: usize| {
                        tree.leaves
                            .iter()
                            .zip(&reach)
                            .filter(|(l, &r)| r && l.compat[pos][k])
                            .map(|(l, _)| l.contrib)
                            .fold(f64::NEG_INFINITY, f64::max)
                    };
                    let pos = free
                        .iter()
                        .copied()
                        .min_by(|&a, &b| {
                            let (ja, jb) = (tree.features[a], tree.features[b]);
                            let oa = top(a, self.grid.features[ja].origin);
                            let ob = top(b, self.grid.features[jb].origin);
                            oa.total_cmp(&ob).then(self.rank[ja].cmp(&self.rank[jb]))
                        })
                        .expect("at least two free features");
                    let j = tree.features[pos];
                    for (k, g) in gamma[j].iter_mut().enumerate() {
                        *g += top(pos, k) - cur;
                    }
                    let leaves = reach.iter().enumerate().filter(|(_, &r)| r).map(|(l, _)| l).collect();
                    multi.push((t, cur, leaves));
                }
            }
        }
        NodeGains {
            gamma,
            single,
            multi,
            current,
            optimistic,
        }
    }

    /// Second relaxation: every feature's cost is split evenly between the
    /// trees with several free features that test it and, when present, the
    /// group of single-free-feature trees on it. Each multi-feature tree then
    /// picks one reachable leaf, paying its share of the cheapest compatible
    /// candidate of every free feature.
    fn shared_cost_bound(&self, g: &NodeGains, gap: f64) -> Option<f64> {
        let m = self.assign.len();
        let mut share = vec![0usize; m];
        let has_single: Vec<bool> = g.single.iter().map(|s| s.iter().any(|&v| v != 0.0)).collect();
        for j in 0..m {
            share[j] = usize::from(has_single[j]);
        }
        for (t, _, _) in &g.multi {
            for &j in &self.trees[*t].features {
                if self.assign[j].is_none() {
                    share[j] += 1;
                }
            }
        }
        let mut owned: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for j in (0..m).filter(|&j| has_single[j]) {
            let w = 1.0 / share[j] as f64;
            let costs = self.grid.features[j].costs.iter().map(|c| c * w).collect();
            owned.push((costs, g.single[j].clone()));
        }
        for (t, cur, leaves) in &g.multi {
            let tree = &self.trees[*t];
            let (costs, gains) = leaves
                .iter()
                .map(|&l| {
                    let leaf = &tree.leaves[l];
                    let cost: f64 = tree
                        .features
                        .iter()
                        .enumerate()
                        .filter(|(_, &j)| self.assign[j].is_none())
                        .map(|(pos, &j)| leaf.min_cost[pos] / share[j] as f64)
                        .sum();
                    (cost, leaf.contrib - cur)
                })
                .filter(|(c, _): &(f64, f64)| c.is_finite())
                .unzip();
            owned.push((costs, gains));
        }
        let items: Vec<(&[f64], &[f64])> = owned.iter().map(|(c, g)| (c.as_slice(), g.as_slice())).collect();
        knapsack_lp_bound(gap, &items)
    }

    fn evaluate(&self, acc_cost: f64) -> NodeEval {
        let g = self.gains();
        let margin = self.prob.margin;
        if g.optimistic < margin - SCORE_TOL {
            return NodeEval::Infeasible;
        }
        if g.current >= margin {
            return NodeEval::Origin;
        }
        let gap = margin - g.current - SCORE_TOL;
        let items: Vec<(&[f64], &[f64])> = g
            .gamma
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_empty())
            .map(|(j, v)| (self.grid.features[j].costs.as_slice(), v.as_slice()))
            .collect();
        let Some(lb) = knapsack_lp_bound(gap, &items) else {
            return NodeEval::Infeasible;
        };
        if g.multi.is_empty() {
            return NodeEval::Bound(acc_cost + lb);
        }
        match self.shared_cost_bound(&g, gap) {
            Some(lb2) => NodeEval::Bound(acc_cost + lb.max(lb2)),
            None => NodeEval::Infeasible,
        }
    }

    fn pruned(&self, bound: f64) -> bool {
        self.best
            .as_ref()
            .is_some_and(|b| bound > b.cost + COST_TOL * (1.0 + b.cost.abs()))
    }

    fn current_indices(&self) -> Vec<usize> {
        self.assign
            .iter()
            .zip(&self.grid.features)
            .map(|(a, f)| a.unwrap_or(f.origin))
            .collect()
    }

    /// Offers the completion with free features at `x0`; true when feasible.
    fn consider(&mut self, idx: Vec<usize>) -> bool {
        let x = self.grid.point(&idx);
        let score = self.prob.direction() * self.model.raw(&x);
        if score < self.prob.margin {
            return false;
        }
        let moved = idx
            .iter()
            .zip(&self.grid.features)
            .filter(|(&k, f)| k != f.origin)
            .count();
        let cand = Incumbent {
            cost: self.prob.cost_of(&x),
            moved,
            idx,
            x,
            score,
        };
        Incumbent::offer(&mut self.best, cand);
        true
    }

    fn dfs(&mut self, depth: usize, acc_cost: f64) {
        self.nodes += 1;
        let bound = match self.evaluate(acc_cost) {
            NodeEval::Infeasible => return,
            NodeEval::Origin => {
                if self.consider(self.current_indices()) {
                    return;
                }
                acc_cost
            }
            NodeEval::Bound(b) => b,
        };
        if depth == self.order.len() || self.pruned(bound) {
            return;
        }
        let j = self.order[depth];
        let f = &self.grid.features[j];
        let mut children: Vec<usize> = (0..f.values.len()).collect();
        children.sort_by(|&a, &b| f.costs[a].total_cmp(&f.costs[b]).then(a.cmp(&b)));
        let costs = f.costs.clone();
        for k in children {
            let child_cost = acc_cost + costs[k];
            if self.pruned(child_cost) {
                continue;
            }
            self.assign[j] = Some(k);
            self.dfs(depth + 1, child_cost);
        }
        self.assign[j] = None;
    }

    /// Seeds the incumbent by repeatedly taking the move with the best score
    /// gain per unit cost, or the cheapest move that reaches the margin.
    fn greedy(&mut self) {
        let sign = self.prob.direction();
        let mut idx: Vec<usize> = self.grid.features.iter().map(|f| f.origin).collect();
        let mut x = self.grid.point(&idx);
        let mut score = sign * self.model.raw(&x);
        let max_steps = self.order.len() * 4 + 1;
        for _ in 0..max_steps {
            if score >= self.prob.margin {
                break;
            }
            let mut finishing: Option<(f64, usize, usize, f64)> = None;
            let mut improving: Option<(f64, usize, usize, f64)> = None;
            for &j in &self.order {
                let f = &self.grid.features[j];
                let old = x[j];
                for k in 0..f.values.len() {
                    if k == idx[j] {
                        continue;
                    }
                    x[j] = f.values[k];
                    let s = sign * self.model.raw(&x);
                    let dc = f.costs[k] - f.costs[idx[j]];
                    if s >= self.prob.margin {
                        let total = self.prob.cost_of(&x);
                        if finishing.map_or(true, |b| total < b.0) {
                            finishing = Some((total, j, k, s));
                        }
                    } else if s > score {
                        let ratio = (s - score) / dc.max(1e-12);
                        if improving.map_or(true, |b| ratio > b.0) {
                            improving = Some((ratio, j, k, s));
                        }
                    }
                }
                x[j] = old;
            }
            match finishing.or(improving) {
                Some((_, j, k, s)) => {
                    idx[j] = k;
                    x[j] = self.grid.features[j].values[k];
                    score = s;
                }
                None => break,
            }
        }
        if score >= self.prob.margin {
            self.consider(idx);
        }
    }
}

/// Lower bound on the cost of gaining at least `gap` when each item picks
/// exactly one `(cost, gain)` option: the LP relaxation, solved greedily over
/// the upper concave hull of every item's options. `None` when even the
/// largest gains fall short.
fn knapsack_lp_bound(gap: f64, items: &[(&[f64], &[f64])]) -> Option<f64> {
    let mut free_gain = 0.0;
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for &(costs, gains) in items {
        let g0 = costs
            .iter()
            .zip(gains)
            .filter(|(&c, _)| c <= 0.0)
            .map(|(_, &g)| g)
            .fold(0.0, f64::max);
        free_gain += g0;
        let mut pts: Vec<(f64, f64)> = costs
            .iter()
            .zip(gains)
            .filter(|(&c, &g)| c > 0.0 && g > g0)
            .map(|(&c, &g)| (c, g))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let mut hull: Vec<(f64, f64)> = vec![(0.0, g0)];
        for p in pts {
            if p.1 <= hull.last().unwrap().1 {
                continue;
            }
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // Drop b when it lies on or below the chord a -> p.
                if (b.1 - a.1) * (p.0 - a.0) <= (p.1 - a.1) * (b.0 - a.0) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        for w in hull.windows(2) {
            segments.push((w[1].0 - w[0].0, w[1].1 - w[0].1));
        }
    }
    let mut need = gap - free_gain;
    if need <= 0.0 {
        return Some(0.0);
    }
    segments.sort_by(|a, b| (b.1 / b.0).total_cmp(&(a.1 / a.0)));
    let mut cost = 0.0;
    for (dc, dg) in segments {
        if dg >= need {
            return Some(cost + dc * need / dg);
        }
        cost += dc;
        need -= dg;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::test_models::*;
    use super::super::{brute_force_oracle, CeStatus};
    use super::*;
    use crate::models::{EnsembleKind, Node, TargetModel, Tree};
    use proptest::prelude::*;

    fn solve(model: &TargetModel, prob: &CeProblem) -> CeSolution {
        match model {
            TargetModel::Ensemble(e) => solve_ensemble_ce(e, prob).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_stump_moves_just_past_split() {
        let model = single_stump();
        let p = CeProblem::new(&model, vec![0.3], vec![0.01]).unwrap();
        let s = solve(&model, &p);
        assert_eq!(s.status, CeStatus::Optimal);
        assert!((s.x_ce[0] - 0.51).abs() < 1e-15);
        assert!((s.cost - 0.31).abs() < 1e-12);
        assert_eq!(s.changed, vec![0]);
        assert!(s.margin_achieved >= 1e-4);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        // Every leaf votes class 0 in both trees.
        let model = TargetModel::Ensemble(gb(
            vec![stump(0, 0.5, -1.0, -0.5), stump(1, 0.5, -1.0, -0.2)],
            0.0,
            1.0,
            2,
        ));
        let p = CeProblem::new(&model, vec![0.3, 0.3], vec![0.01, 0.01]).unwrap();
        assert_eq!(solve(&model, &p).status, CeStatus::Infeasible);
    }

    #[test]
    fn box_can_make_target_infeasible() {
        let model = single_stump();
        let p = CeProblem::new(&model, vec![0.3], vec![0.01])
            .unwrap()
            .with_box(vec![0.0], vec![0.505]);
        assert_eq!(solve(&model, &p).status, CeStatus::Infeasible);
    }

    #[test]
    fn picks_cheaper_of_two_features() {
        let model = TargetModel::Ensemble(gb(
            vec![stump(0, 0.8, -0.5, 1.0), stump(1, 0.4, -0.5, 1.0)],
            0.0,
            1.0,
            2,
        ));
        let p = CeProblem::new(&model, vec![0.3, 0.3], vec![0.01, 0.01]).unwrap();
        let s = solve(&model, &p);
        assert_eq!(s.changed, vec![1]);
        assert_eq!(s.x_ce[0], 0.3);
        assert!((s.x_ce[1] - 0.41).abs() < 1e-15);
    }

    #[test]
    fn forest_needs_majority_of_trees() {
        let trees = vec![
            stump(0, 0.5, 0.0, 1.0),
            stump(1, 0.5, 0.0, 1.0),
            stump(2, 0.5, 0.0, 1.0),
        ];
        let model = TargetModel::Ensemble(Ensemble {
            kind: EnsembleKind::Rf,
            trees,
            learning_rate: 1.0,
            init_raw: 0.0,
            n_features: 3,
        });
        let p = CeProblem::new(&model, vec![0.45, 0.3, 0.1], vec![0.01; 3]).unwrap();
        let s = solve(&model, &p);
        // Two of three trees must flip: the two closest features move.
        assert_eq!(s.changed, vec![0, 1]);
        let o = brute_force_oracle(&model, &p, 0).unwrap();
        assert!((s.cost - o.cost).abs() < 1e-12);
    }

    #[test]
    fn knapsack_bound_matches_hand_computation() {
        let costs = [0.0, 1.0, 3.0];
        let gains = [0.0, 2.0, 3.0];
        let items: Vec<(&[f64], &[f64])> = vec![(&costs, &gains)];
        assert_eq!(knapsack_lp_bound(1.0, &items), Some(0.5));
        assert_eq!(knapsack_lp_bound(2.5, &items), Some(2.0));
        assert_eq!(knapsack_lp_bound(3.5, &items), None);
    }

    fn random_tree(depth: usize, m: usize, rng: &mut impl FnMut() -> f64, nodes: &mut Vec<Node>) -> usize {
        let idx = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        if depth == 0 {
            nodes[idx] = Node::Leaf { value: rng() * 2.0 - 1.0 };
            return idx;
        }
        let feature = ((rng() * m as f64) as usize).min(m - 1);
        let threshold = ((0.05 + 0.9 * rng()) * 20.0).round() / 20.0;
        let left = random_tree(depth - 1, m, rng, nodes);
        let right = random_tree(depth - 1, m, rng, nodes);
        nodes[idx] = Node::Split {
            feature,
            threshold,
            left,
            right,
            gain: 1.0,
        };
        idx
    }

    fn random_model(seed: u64, n_trees: usize, depth: usize, m: usize, kind: EnsembleKind) -> Ensemble {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let trees = (0..n_trees)
            .map(|_| {
                let mut nodes = Vec::new();
                random_tree(depth, m, &mut rng, &mut nodes);
                if kind == EnsembleKind::Rf {
                    for n in nodes.iter_mut() {
                        if let Node::Leaf { value } = n {
                            *value = (*value + 1.0) / 2.0;
                        }
                    }
                }
                Tree { nodes }
            })
            .collect();
        Ensemble {
            kind,
            trees,
            learning_rate: 0.5,
            init_raw: 0.1,
            n_features: m,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_brute_force_on_small_ensembles(
            seed in 0u64..10_000,
            depth in 1usize..3,
            rf in any::<bool>(),
            x0 in proptest::collection::vec(0.0f64..1.0, 3),
            l0 in 0.0f64..0.5,
            l2 in 0.0f64..1.0,
        ) {
            let kind = if rf { EnsembleKind::Rf } else { EnsembleKind::Gb };
            let e = random_model(seed, 4, depth, 3, kind);
            let model = TargetModel::Ensemble(e);
            let p = CeProblem::new(&model, x0, vec![0.01; 3]).unwrap().with_costs(l0, 1.0, l2);
            let s = solve(&model, &p);
            let o = brute_force_oracle(&model, &p, 0).unwrap();
            prop_assert_eq!(s.status, o.status);
            if s.is_optimal() {
                prop_assert!((s.cost - o.cost).abs() <= 1e-9, "solver {} oracle {}", s.cost, o.cost);
                prop_assert_eq!(&s.x_ce, &o.x_ce);
                prop_assert!(s.margin_achieved >= p.margin);
                prop_assert_ne!(model.predict(&s.x_ce).unwrap().label, p.y0);
            }
        }

        #[test]
        fn matches_brute_force_on_deeper_forests(
            seed in 0u64..10_000,
            rf in any::<bool>(),
            x0 in proptest::collection::vec(0.0f64..1.0, 4),
            l0 in 0.0f64..0.5,
        ) {
            let kind = if rf { EnsembleKind::Rf } else { EnsembleKind::Gb };
            let model = TargetModel::Ensemble(random_model(seed, 6, 3, 4, kind));
            let p = CeProblem::new(&model, x0, vec![0.01; 4]).unwrap().with_costs(l0, 1.0, 0.0);
            let s = solve(&model, &p);
            let o = brute_force_oracle(&model, &p, 0).unwrap();
            prop_assert_eq!(s.status, o.status);
            if s.is_optimal() {
                prop_assert!((s.cost - o.cost).abs() <= 1e-9, "solver {} oracle {}", s.cost, o.cost);
            }
        }
    }
}
