use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gb::presort;
use super::{Ensemble, EnsembleKind, Node, Tree};
use crate::data::Dataset;
use crate::error::{FccaError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features sampled per node; `None` means `floor(sqrt(m))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_trees: 20,
            max_depth: 3,
            max_features: None,
            seed: 0,
        }
    }
}

/// Bootstrap-aggregated Gini trees. Each leaf stores the class-1 fraction of
/// the bootstrap rows reaching it, so its class weights sum to one.
pub fn train_rf(ds: &Dataset, params: &RfParams) -> Result<Ensemble> {
    let [c0, c1] = ds.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(FccaError::Model("single-class training labels".into()));
    }
    if params.n_trees == 0 {
        return Err(FccaError::Config("forest needs at least one tree".into()));
    }
    let m = ds.n_features();
    let n = ds.n_rows();
    let max_features = params
        .max_features
        .unwrap_or_else(|| (m as f64).sqrt().floor() as usize)
        .clamp(1, m);
    let sorted = presort(&ds.rows, m);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let mut weight = vec![0.0; n];
        for _ in 0..n {
            weight[rng.gen_range(0..n)] += 1.0;
        }
        let mut builder = GiniBuilder {
            ds,
            sorted: &sorted,
            weight: &weight,
            max_features,
            rng: &mut rng,
            nodes: Vec::new(),
        };
        let active: Vec<bool> = weight.iter().map(|&w| w > 0.0).collect();
        builder.grow(&active, params.max_depth);
        trees.push(Tree {
            nodes: builder.nodes,
        });
    }
    Ok(Ensemble {
        kind: EnsembleKind::Rf,
        trees,
        learning_rate: 1.0,
        init_raw: 0.0,
        n_features: m,
    })
}

struct GiniBuilder<'a, R: Rng> {
    ds: &'a Dataset,
    sorted: &'a [Vec<usize>],
    weight: &'a [f64],
    max_features: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

fn gini_mass(w0: f64, w1: f64) -> f64 {
    let w = w0 + w1;
    if w <= 0.0 {
        0.0
    } else {
        w - (w0 * w0 + w1 * w1) / w
    }
}

impl<R: Rng> GiniBuilder<'_, R> {
    fn class_weights(&self, active: &[bool]) -> (f64, f64) {
        let (mut w0, mut w1) = (0.0, 0.0);
        for (i, _) in active.iter().enumerate().filter(|(_, &a)| a) {
            if self.ds.labels[i] == 1 {
                w1 += self.weight[i];
            } else {
                w0 += self.weight[i];
            }
        }
        (w0, w1)
    }

    fn grow(&mut self, active: &[bool], depth_left: usize) -> usize {
        let idx = self.nodes.len();
        let (w0, w1) = self.class_weights(active);
        self.nodes.push(Node::Leaf {
            value: w1 / (w0 + w1),
        });
        if depth_left == 0 || w0 == 0.0 || w1 == 0.0 {
            return idx;
        }
        let m = self.ds.n_features();
        let mut features = index::sample(self.rng, m, self.max_features).into_vec();
        features.sort_unstable();
        let parent = gini_mass(w0, w1);
        let mut best: Option<(usize, f64, f64)> = None;
        for &j in &features {
            let members: Vec<usize> = self.sorted[j]
                .iter()
                .copied()
                .filter(|&i| active[i])
                .collect();
            let (mut l0, mut l1) = (0.0, 0.0);
            for w in members.windows(2) {
                if self.ds.labels[w[0]] == 1 {
                    l1 += self.weight[w[0]];
                } else {
                    l0 += self.weight[w[0]];
                }
                let (a, b) = (self.ds.rows[w[0]][j], self.ds.rows[w[1]][j]);
                if a == b {
                    continue;
                }
                let gain = parent - gini_mass(l0, l1) - gini_mass(w0 - l0, w1 - l1);
                if gain > best.map_or(1e-12, |b| b.2) {
                    best = Some((j, 0.5 * (a + b), gain));
                }
            }
        }
        if let Some((feature, threshold, gain)) = best {
            let go_left: Vec<bool> = (0..active.len())
                .map(|i| active[i] && self.ds.rows[i][feature] <= threshold)
                .collect();
            let go_right: Vec<bool> = (0..active.len())
                .map(|i| active[i] && !go_left[i])
                .collect();
            let left = self.grow(&go_left, depth_left - 1);
            let right = self.grow(&go_right, depth_left - 1);
            self.nodes[idx] = Node::Split {
                feature,
                threshold,
                left,
                right,
                gain,
            };
        }
        idx
    }
}
