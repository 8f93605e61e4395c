use std::fmt::Write as _;

use serde::Serialize;

use super::config::{RunConfig, TargetKind};
use crate::surrogate::{SurrogateTree, TreeEval};

pub const REPORT_FORMAT: &str = "fcca-report-v1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeReport {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub external_accuracy: Option<f64>,
    pub leaves: usize,
    pub depth: usize,
    pub features_used: usize,
    pub objective: f64,
}

impl TreeReport {
    pub fn new(tree: &SurrogateTree, train: TreeEval, test: TreeEval, external: Option<TreeEval>) -> Self {
        TreeReport {
            train_accuracy: train.accuracy,
            test_accuracy: test.accuracy,
            external_accuracy: external.map(|e| e.accuracy),
            leaves: train.n_leaves,
            depth: train.depth,
            features_used: train.n_features_used,
            objective: tree.objective,
        }
    }
}

/// Binarization and surrogate results for one threshold set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscReport {
    pub n_thresholds: usize,
    /// Aligned with [`RunReport::feature_names`].
    pub thresholds_per_feature: Vec<usize>,
    pub n_columns: usize,
    pub eta: f64,
    pub delta: f64,
    pub distinct_cells: usize,
    pub dropped_features: usize,
    pub test_eta: f64,
    pub test_delta: f64,
    pub cart: TreeReport,
    pub optimal: TreeReport,
    /// Both surrogates stay within the `1 - delta` training ceiling.
    pub ceiling_ok: bool,
    /// The optimal tree's objective is no worse than CART's.
    pub dominance_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QReport {
    pub q: f64,
    pub f_q: f64,
    #[serde(flatten)]
    pub result: DiscReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetReport {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub external_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CeReport {
    /// Size of the query set M.
    pub queried: usize,
    pub optimal: usize,
    pub infeasible: usize,
    /// Problems the solver rejected.
    pub failed: usize,
    pub mean_cost: Option<f64>,
    pub mean_changed_features: Option<f64>,
    /// SHA-256 over the counterfactual batch.
    pub batch_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BagReport {
    pub distinct: usize,
    pub total: usize,
    pub discarded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub lambda_reg: f64,
    pub target: TargetReport,
    pub counterfactuals: CeReport,
    pub thresholds: BagReport,
    /// CART on the unbinarized training fold.
    pub cart_continuous: TreeReport,
    pub per_q: Vec<QReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gtre: Option<GtreInfo>,
}

/// Reference-ensemble threshold baseline, compared against the
/// counterfactual thresholds at `Q = 0` on the same fold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GtreInfo {
    pub initial_thresholds: usize,
    pub kept_thresholds: usize,
    pub pruning_steps: usize,
    pub fcca_thresholds: usize,
    pub shared_thresholds: usize,
    /// Jaccard index of the two threshold sets.
    pub threshold_jaccard: f64,
    /// Jaccard index of the occupied heatmap cells.
    pub heatmap_jaccard: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }

    fn of_options(values: &[Option<f64>]) -> Option<Stat> {
        let v: Option<Vec<f64>> = values.iter().copied().collect();
        v.filter(|v| !v.is_empty()).map(|v| Stat::of(&v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QAggregate {
    pub q: f64,
    pub eta: Stat,
    pub delta: Stat,
    pub n_columns: Stat,
    pub cart_train: Stat,
    pub cart_test: Stat,
    pub optimal_train: Stat,
    pub optimal_test: Stat,
    pub optimal_external: Option<Stat>,
    pub optimal_leaves: Stat,
    pub optimal_features_used: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub target_train: Stat,
    pub target_test: Stat,
    pub target_external: Option<Stat>,
    pub cart_continuous_test: Stat,
    pub per_q: Vec<QAggregate>,
}

pub fn aggregate(folds: &[FoldReport]) -> Aggregate {
    let col = |f: &dyn Fn(&FoldReport) -> f64| -> Stat { Stat::of(&folds.iter().map(f).collect::<Vec<_>>()) };
    let n_q = folds.first().map_or(0, |f| f.per_q.len());
    let per_q = (0..n_q)
        .map(|k| {
            let qcol = |f: &dyn Fn(&QReport) -> f64| -> Stat {
                Stat::of(&folds.iter().map(|r| f(&r.per_q[k])).collect::<Vec<_>>())
            };
            QAggregate {
                q: folds[0].per_q[k].q,
                eta: qcol(&|q| q.result.eta),
                delta: qcol(&|q| q.result.delta),
                n_columns: qcol(&|q| q.result.n_columns as f64),
                cart_train: qcol(&|q| q.result.cart.train_accuracy),
                cart_test: qcol(&|q| q.result.cart.test_accuracy),
                optimal_train: qcol(&|q| q.result.optimal.train_accuracy),
                optimal_test: qcol(&|q| q.result.optimal.test_accuracy),
                optimal_external: Stat::of_options(
                    &folds
                        .iter()
                        .map(|r| r.per_q[k].result.optimal.external_accuracy)
                        .collect::<Vec<_>>(),
                ),
                optimal_leaves: qcol(&|q| q.result.optimal.leaves as f64),
                optimal_features_used: qcol(&|q| q.result.optimal.features_used as f64),
            }
        })
        .collect();
    Aggregate {
        target_train: col(&|f| f.target.train_accuracy),
        target_test: col(&|f| f.target.test_accuracy),
        target_external: Stat::of_options(
            &folds.iter().map(|f| f.target.external_accuracy).collect::<Vec<_>>(),
        ),
        cart_continuous_test: col(&|f| f.cart_continuous.test_accuracy),
        per_q,
    }
}

/// Run settings echoed into the report; paths are left out so reports from
/// different output directories compare equal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub target: TargetKind,
    pub gb_n_estimators: usize,
    pub gb_max_depth: usize,
    pub gb_learning_rate: f64,
    pub rf_n_trees: usize,
    pub rf_max_depth: usize,
    pub rf_max_features: Option<usize>,
    pub linear_c: f64,
    pub linear_epochs: usize,
    pub p0: f64,
    pub p1: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub margin: f64,
    pub global_eps: bool,
    pub q: Vec<f64>,
    pub depth: usize,
    pub lambda_reg: Option<f64>,
    pub folds: usize,
    pub fold: Option<usize>,
    pub cap: Option<usize>,
    pub seed: u64,
    pub gtre_prune: bool,
    pub gtre_tolerance: f64,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        ConfigEcho {
            target: c.target,
            gb_n_estimators: c.gb.n_estimators,
            gb_max_depth: c.gb.max_depth,
            gb_learning_rate: c.gb.learning_rate,
            rf_n_trees: c.rf.n_trees,
            rf_max_depth: c.rf.max_depth,
            rf_max_features: c.rf.max_features,
            linear_c: c.linear.c,
            linear_epochs: c.linear.epochs,
            p0: c.p0,
            p1: c.p1,
            lambda0: c.lambda0,
            lambda1: c.lambda1,
            lambda2: c.lambda2,
            margin: c.margin,
            global_eps: c.global_eps,
            q: c.q.clone(),
            depth: c.depth,
            lambda_reg: c.lambda_reg,
            folds: c.folds,
            fold: c.fold,
            cap: c.cap,
            seed: c.seed,
            gtre_prune: c.gtre_prune,
            gtre_tolerance: c.gtre_tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub format: String,
    /// `fcca` or `gtre`.
    pub mode: String,
    pub dataset: String,
    pub n_rows: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub dropped_features: Vec<String>,
    pub n_external: usize,
    pub config: ConfigEcho,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (fold, Q).
    pub fn folds_csv(&self) -> String {
        let mut s = String::from(
            "fold,q,f_q,n_columns,eta,delta,target_test,cart_train,cart_test,optimal_train,optimal_test,optimal_leaves,optimal_features_used,ce_optimal,ce_batch_hash\n",
        );
        for f in &self.folds {
            for q in &f.per_q {
                let r = &q.result;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    f.fold,
                    q.q,
                    q.f_q,
                    r.n_columns,
                    r.eta,
                    r.delta,
                    f.target.test_accuracy,
                    r.cart.train_accuracy,
                    r.cart.test_accuracy,
                    r.optimal.train_accuracy,
                    r.optimal.test_accuracy,
                    r.optimal.leaves,
                    r.optimal.features_used,
                    f.counterfactuals.optimal,
                    f.counterfactuals.batch_hash,
                );
            }
        }
        s
    }

    /// Mean tradeoff table: one row per Q.
    pub fn tradeoff_csv(&self) -> String {
        let mut s = String::from("q,eta,delta,train_accuracy,test_accuracy,eta_std,delta_std,train_std,test_std\n");
        for a in &self.aggregate.per_q {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                a.q,
                a.eta.mean,
                a.delta.mean,
                a.optimal_train.mean,
                a.optimal_test.mean,
                a.eta.std,
                a.delta.std,
                a.optimal_train.std,
                a.optimal_test.std,
            );
        }
        s
    }
}

/// Wall-clock seconds per phase; kept out of the report so reports stay
/// byte-identical across runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FoldTimings {
    pub fold: usize,
    pub fit_target: f64,
    pub select_m: f64,
    pub counterfactuals: f64,
    pub thresholds: f64,
    pub per_q: Vec<f64>,
    pub total: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_matches_hand_values() {
        let s = Stat::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Stat::of(&[4.0]).std, 0.0);
        assert_eq!(Stat::of_options(&[Some(1.0), None]), None);
    }
}
