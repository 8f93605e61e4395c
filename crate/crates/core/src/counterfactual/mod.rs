//! Certified-optimal counterfactual explanations.
//!
//! For a point `x0` classified as `y0`, find the cheapest `x_ce` in the
//! plausibility box whose predicted label is `y_ce = 1 - y0`, where cost is
//! `lambda0 |d|_0 + lambda1 |d|_1 + lambda2 |d|_2^2` with `d = x_ce - x0`.
//!
//! Tree ensembles are solved by branch-and-bound over a per-feature candidate
//! grid (see [`build_candidates`]); every moved coordinate clears each split on
//! its feature by at least `eps_j`, and the raw score must clear zero by the
//! margin `margin` in the direction of `y_ce`. Linear models are solved by
//! branch-and-bound over supports with a closed-form continuous inner solve.

mod candidates;
mod ensemble;
mod linear;
mod oracle;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Scaler;
use crate::error::{FccaError, Result};
use crate::models::TargetModel;

pub use candidates::{build_candidates, CandidateGrid, FeatureCandidates};
pub use ensemble::solve_ensemble_ce;
pub use linear::solve_linear_ce;
pub use oracle::brute_force_oracle;

pub const DEFAULT_MARGIN: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct CeProblem {
    pub x0: Vec<f64>,
    pub y0: u8,
    pub y_ce: u8,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Per-feature resolution: moved coordinates clear splits by this much.
    pub eps: Vec<f64>,
    /// Raw-score slack required past the decision boundary.
    pub margin: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub immutable: Vec<bool>,
}

impl CeProblem {
    /// Problem for `x0` with the default costs `(0.1, 1, 0)`, margin `1e-4`,
    /// box `[0, 1]^m` and every feature mutable. `y0` is the model's label.
    pub fn new(model: &TargetModel, x0: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        let y0 = model.predict(&x0)?.label;
        let m = x0.len();
        Ok(CeProblem {
            x0,
            y0,
            y_ce: 1 - y0,
            lambda0: 0.1,
            lambda1: 1.0,
            lambda2: 0.0,
            eps,
            margin: DEFAULT_MARGIN,
            lower: vec![0.0; m],
            upper: vec![1.0; m],
            immutable: vec![false; m],
        })
    }

    pub fn with_costs(mut self, lambda0: f64, lambda1: f64, lambda2: f64) -> Self {
        self.lambda0 = lambda0;
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_immutable(mut self, immutable: Vec<bool>) -> Self {
        self.immutable = immutable;
        self
    }

    pub fn n_features(&self) -> usize {
        self.x0.len()
    }

    /// `+1` when the counterfactual must reach class 1, `-1` for class 0.
    pub fn direction(&self) -> f64 {
        if self.y_ce == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn coord_cost(&self, j: usize, value: f64) -> f64 {
        let d = (value - self.x0[j]).abs();
        if d == 0.0 {
            return 0.0;
        }
        self.lambda0 + self.lambda1 * d + self.lambda2 * d * d
    }

    /// Total cost, summed in feature order.
    pub fn cost_of(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, &v)| self.coord_cost(j, v))
            .sum()
    }

    pub fn validate(&self, model: &TargetModel) -> Result<()> {
        self.validate_shape(model.n_features())?;
        let label = model.predict(&self.x0)?.label;
        self.check_label(label)
    }

    pub(crate) fn check_label(&self, label: u8) -> Result<()> {
        if label != self.y0 {
            return Err(FccaError::InvalidProblem(format!(
                "model labels x0 as {label}, problem says {}",
                self.y0
            )));
        }
        Ok(())
    }

    pub(crate) fn validate_shape(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(FccaError::InvalidProblem(msg));
        if self.x0.len() != m
            || self.eps.len() != m
            || self.lower.len() != m
            || self.upper.len() != m
            || self.immutable.len() != m
        {
            return bad(format!("all per-feature vectors must have length {m}"));
        }
        if ![self.lambda0, self.lambda1, self.lambda2]
            .iter()
            .all(|l| l.is_finite() && *l >= 0.0)
        {
            return bad("cost weights must be finite and non-negative".into());
        }
        if !(self.margin > 0.0) {
            return bad("margin must be positive".into());
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) {
            return bad("every eps_j must be positive".into());
        }
        if self.y0 > 1 || self.y_ce != 1 - self.y0 {
            return bad("target label must differ from the original label".into());
        }
        for j in 0..m {
            if !(self.lower[j] <= self.x0[j] && self.x0[j] <= self.upper[j]) {
                return bad(format!("x0[{j}] lies outside its box"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CeStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CeSolution {
    pub status: CeStatus,
    /// The counterfactual; equals `x0` when infeasible.
    pub x_ce: Vec<f64>,
    /// `f64::INFINITY` when infeasible.
    pub cost: f64,
    /// Features with `|x0_j - x_ce_j| > eps_j`.
    pub changed: Vec<usize>,
    /// Features with `x_ce_j != x0_j`.
    pub moved: Vec<usize>,
    /// Raw score times the target direction; at least `margin` when optimal.
    pub margin_achieved: f64,
    pub nodes_explored: u64,
}

impl CeSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == CeStatus::Optimal
    }

    pub(crate) fn infeasible(prob: &CeProblem, nodes_explored: u64) -> Self {
        CeSolution {
            status: CeStatus::Infeasible,
            x_ce: prob.x0.clone(),
            cost: f64::INFINITY,
            changed: Vec::new(),
            moved: Vec::new(),
            margin_achieved: f64::NEG_INFINITY,
            nodes_explored,
        }
    }

    pub(crate) fn optimal(
        prob: &CeProblem,
        x_ce: Vec<f64>,
        margin_achieved: f64,
        nodes_explored: u64,
    ) -> Self {
        let changed = (0..x_ce.len())
            .filter(|&j| (prob.x0[j] - x_ce[j]).abs() > prob.eps[j])
            .collect();
        let moved = (0..x_ce.len()).filter(|&j| prob.x0[j] != x_ce[j]).collect();
        CeSolution {
            status: CeStatus::Optimal,
            cost: prob.cost_of(&x_ce),
            x_ce,
            changed,
            moved,
            margin_achieved,
            nodes_explored,
        }
    }
}

/// Dispatches to the ensemble or linear solver.
pub fn solve(model: &TargetModel, prob: &CeProblem) -> Result<CeSolution> {
    match model {
        TargetModel::Ensemble(e) => solve_ensemble_ce(e, prob),
        TargetModel::Linear(l) => solve_linear_ce(l, prob),
    }
}

/// Solves every problem in parallel; results keep the input order.
pub fn solve_batch(model: &TargetModel, problems: &[CeProblem]) -> Vec<Result<CeSolution>> {
    problems.par_iter().map(|p| solve(model, p)).collect()
}

/// Writes one row per solution: index, status, cost, changed feature names,
/// then `x_ce` in scaled units and, when a scaler is given, original units.
pub fn write_ce_csv(
    path: impl AsRef<Path>,
    rows: &[(usize, &CeSolution)],
    feature_names: &[String],
    scaler: Option<&Scaler>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| FccaError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec![
        "index".to_string(),
        "status".into(),
        "cost".into(),
        "changed_features".into(),
    ];
    header.extend(feature_names.iter().map(|n| format!("{n}_scaled")));
    if scaler.is_some() {
        header.extend(feature_names.iter().map(|n| format!("{n}_original")));
    }
    w.write_record(&header)?;
    for (index, sol) in rows {
        let status = match sol.status {
            CeStatus::Optimal => "optimal",
            CeStatus::Infeasible => "infeasible",
        };
        let changed: Vec<&str> = sol
            .changed
            .iter()
            .map(|&j| feature_names[j].as_str())
            .collect();
        let mut rec = vec![
            index.to_string(),
            status.to_string(),
            sol.cost.to_string(),
            changed.join(";"),
        ];
        rec.extend(sol.x_ce.iter().map(|v| v.to_string()));
        if let Some(s) = scaler {
            rec.extend(s.inverse_row(&sol.x_ce).iter().map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| FccaError::io(path, e))?;
    Ok(())
}

/// Reads back `(index, status, x_ce scaled)` from [`write_ce_csv`] output.
pub fn read_ce_csv(path: impl AsRef<Path>, m: usize) -> Result<Vec<(usize, CeStatus, Vec<f64>)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| FccaError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| FccaError::Data(format!("bad value in column {k}, row {}", row + 1)))
        };
        let index = parse(0)? as usize;
        let status = match rec.get(1) {
            Some("optimal") => CeStatus::Optimal,
            Some("infeasible") => CeStatus::Infeasible,
            other => return Err(FccaError::Data(format!("unknown status {other:?}"))),
        };
        let x = (0..m).map(|j| parse(4 + j)).collect::<Result<Vec<_>>>()?;
        out.push((index, status, x));
    }
    Ok(out)
}
