use super::CeProblem;
use crate::error::{FccaError, Result};
use crate::models::Ensemble;

/// Admissible values of one feature, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureCandidates {
    pub values: Vec<f64>,
    /// Per-coordinate cost of each value.
    pub costs: Vec<f64>,
    /// Index of `x0_j` in `values`.
    pub origin: usize,
    /// Number of splits on this feature strictly below each value; two values
    /// with the same cell route identically through every tree.
    pub cells: Vec<usize>,
    /// Distinct split thresholds on this feature, ascending.
    pub splits: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateGrid {
    pub features: Vec<FeatureCandidates>,
}

impl CandidateGrid {
    /// Number of points in the Cartesian grid, saturating.
    pub fn size(&self) -> u128 {
        self.features
            .iter()
            .fold(1u128, |acc, f| acc.saturating_mul(f.values.len() as u128))
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.features)
            .map(|(&k, f)| f.values[k])
            .collect()
    }
}

/// Candidate values per feature: `x0_j` itself plus `c +/- eps_j` for every
/// split `c` on feature `j`, keeping only values inside the box that sit at
/// least `eps_j` away from every split on `j`. Immutable features keep only
/// `x0_j`.
pub fn build_candidates(model: &Ensemble, prob: &CeProblem) -> Result<CandidateGrid> {
    let m = prob.n_features();
    if model.n_features != m {
        return Err(FccaError::Dimension {
            expected: model.n_features,
            got: m,
        });
    }
    let mut splits: Vec<Vec<f64>> = vec![Vec::new(); m];
    for tree in &model.trees {
        for (j, c, _) in tree.splits() {
            splits[j].push(c);
        }
    }
    let mut features = Vec::with_capacity(m);
    for (j, mut s) in splits.into_iter().enumerate() {
        s.sort_by(f64::total_cmp);
        s.dedup();
        let x0 = prob.x0[j];
        if !(prob.lower[j] <= x0 && x0 <= prob.upper[j]) {
            return Err(FccaError::InvalidProblem(format!("x0[{j}] lies outside its box")));
        }
        let eps = prob.eps[j];
        let mut values = vec![x0];
        if !prob.immutable[j] {
            // Relative slack absorbs the rounding in `c +/- eps`.
            let clear = eps * (1.0 - 1e-9);
            for &c in &s {
                for v in [c - eps, c + eps] {
                    if v >= prob.lower[j]
                        && v <= prob.upper[j]
                        && s.iter().all(|&c2| (v - c2).abs() >= clear)
                    {
                        values.push(v);
                    }
                }
            }
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        let origin = values.iter().position(|&v| v == x0).expect("x0 is a candidate");
        let costs = values.iter().map(|&v| prob.coord_cost(j, v)).collect();
        let cells = values
            .iter()
            .map(|&v| s.partition_point(|&c| c < v))
            .collect();
        features.push(FeatureCandidates {
            values,
            costs,
            origin,
            cells,
            splits: s,
        });
    }
    Ok(CandidateGrid { features })
}

/// Best feasible grid point seen so far. Lower cost wins; costs within
/// `1e-12` tie, and ties go to fewer moved features, then to the
/// lexicographically smallest candidate-index vector.
#[derive(Clone, Debug)]
pub(crate) struct Incumbent {
    pub cost: f64,
    pub moved: usize,
    pub idx: Vec<usize>,
    pub x: Vec<f64>,
    pub score: f64,
}

pub(crate) const COST_TOL: f64 = 1e-12;

impl Incumbent {
    pub fn offer(best: &mut Option<Incumbent>, cand: Incumbent) -> bool {
        let better = match best {
            None => true,
            Some(b) => {
                if cand.cost < b.cost - COST_TOL {
                    true
                } else if cand.cost <= b.cost + COST_TOL {
                    (cand.moved, &cand.idx) < (b.moved, &b.idx)
                } else {
                    false
                }
            }
        };
        if better {
            *best = Some(cand);
        }
        better
    }
}
