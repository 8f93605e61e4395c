use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{FccaError, Result};

/// Seeded k-fold partition of a cross-validation pool, with an optional
/// external test set holding the rows left out of the pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index per row; `None` for rows in `external_test`.
    pub assignments: Vec<Option<usize>>,
    pub external_test: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn new(n: usize, k: usize, cap: Option<usize>, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(FccaError::Config(format!("fold count must be >= 2, got {k}")));
        }
        if let Some(c) = cap {
            if c == 0 {
                return Err(FccaError::Config("training cap must be positive".into()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut external_test = Vec::new();
        if let Some(c) = cap.filter(|&c| c < n) {
            order.shuffle(&mut rng);
            external_test = order.split_off(c);
            external_test.sort_unstable();
            order.sort_unstable();
        }
        if k > order.len() {
            return Err(FccaError::Config(format!(
                "{k} folds requested but the pool holds {} rows",
                order.len()
            )));
        }
        order.shuffle(&mut rng);
        let mut assignments = vec![None; n];
        for (pos, &i) in order.iter().enumerate() {
            assignments[i] = Some(pos % k);
        }
        Ok(FoldPlan {
            k,
            assignments,
            external_test,
            seed,
        })
    }

    pub fn pool(&self) -> Vec<usize> {
        self.rows_where(|a| a.is_some())
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.rows_where(|a| matches!(a, Some(f) if f != fold))
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.rows_where(|a| a == Some(fold))
    }

    fn rows_where(&self, pred: impl Fn(Option<usize>) -> bool) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| pred(a))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn make_folds(ds: &Dataset, k: usize, cap: Option<usize>, seed: u64) -> Result<FoldPlan> {
    FoldPlan::new(ds.n_rows(), k, cap, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_partition() {
        let plan = FoldPlan::new(10, 5, None, 1).unwrap();
        assert!(plan.external_test.is_empty());
        for f in 0..5 {
            assert_eq!(plan.test_indices(f).len(), 2);
            assert_eq!(plan.train_indices(f).len(), 8);
        }
    }

    #[test]
    fn capped_pool() {
        let plan = FoldPlan::new(7000, 5, Some(5000), 3).unwrap();
        assert_eq!(plan.pool().len(), 5000);
        assert_eq!(plan.external_test.len(), 2000);
        let pool: std::collections::HashSet<_> = plan.pool().into_iter().collect();
        assert!(plan.external_test.iter().all(|i| !pool.contains(i)));
        let total: usize = (0..5).map(|f| plan.test_indices(f).len()).sum();
        assert_eq!(total, 5000);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = FoldPlan::new(100, 4, Some(60), 42).unwrap();
        let b = FoldPlan::new(100, 4, Some(60), 42).unwrap();
        assert_eq!(a, b);
        let c = FoldPlan::new(100, 4, Some(60), 43).unwrap();
        assert_ne!(a.assignments, c.assignments);
    }

    #[test]
    fn rejects_too_many_folds() {
        assert!(FoldPlan::new(3, 5, None, 0).is_err());
        assert!(FoldPlan::new(10, 1, None, 0).is_err());
        assert!(FoldPlan::new(100, 5, Some(4), 0).is_err());
    }
}
