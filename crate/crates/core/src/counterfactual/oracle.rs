use super::candidates::Incumbent;
use super::{build_candidates, CeProblem, CeSolution};
use crate::error::{FccaError, Result};
use crate::models::{LinearModel, TargetModel};

/// Grids larger than this are refused.
const MAX_POINTS: u128 = 50_000_000;

/// Exhaustive reference solver, for checking the exact solvers.
///
/// Ensembles: every point of the Cartesian candidate grid is evaluated through
/// the model. Linear models: every point of the uniform grid with
/// `grid_steps + 1` values per axis (plus `x0_j` and the box bounds) is
/// evaluated, and each point is also completed along every single axis to the
/// exact value that reaches the margin. `grid_steps` is ignored for ensembles.
pub fn brute_force_oracle(model: &TargetModel, prob: &CeProblem, grid_steps: usize) -> Result<CeSolution> {
    prob.validate(model)?;
    let axes: Vec<Vec<f64>> = match model {
        TargetModel::Ensemble(e) => build_candidates(e, prob)?
            .features
            .into_iter()
            .map(|f| f.values)
            .collect(),
        TargetModel::Linear(_) => {
            if grid_steps == 0 {
                return Err(FccaError::InvalidProblem("linear oracle needs grid_steps > 0".into()));
            }
            (0..prob.n_features())
                .map(|j| {
                    if prob.immutable[j] {
                        return vec![prob.x0[j]];
                    }
                    let (lo, hi) = (prob.lower[j], prob.upper[j]);
                    let mut v: Vec<f64> = (0..=grid_steps)
                        .map(|i| lo + (hi - lo) * i as f64 / grid_steps as f64)
                        .collect();
                    v.push(prob.x0[j]);
                    v.push(hi);
                    v.sort_by(f64::total_cmp);
                    v.dedup();
                    v
                })
                .collect()
        }
    };
    let size = axes
        .iter()
        .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128));
    if size > MAX_POINTS {
        return Err(FccaError::InvalidProblem(format!("oracle grid too large ({size} points)")));
    }
    let sign = prob.direction();
    let score = |x: &[f64]| sign * model.predict_unchecked(x).raw;
    let mut best: Option<Incumbent> = None;
    let mut offer = |x: Vec<f64>, idx: Vec<usize>, s: f64| {
        let moved = x.iter().zip(&prob.x0).filter(|(a, b)| a != b).count();
        let cand = Incumbent {
            cost: prob.cost_of(&x),
            moved,
            idx,
            x,
            score: s,
        };
        Incumbent::offer(&mut best, cand);
    };
    let mut idx = vec![0usize; axes.len()];
    let mut count = 0u64;
    loop {
        let x: Vec<f64> = idx.iter().zip(&axes).map(|(&k, a)| a[k]).collect();
        let s = score(&x);
        count += 1;
        if s >= prob.margin {
            offer(x, idx.clone(), s);
        } else if let TargetModel::Linear(l) = model {
            for (j, y) in axis_completions(l, prob, &x) {
                let mut xc = x.clone();
                xc[j] = y;
                let sc = score(&xc);
                if sc >= prob.margin {
                    // Off-grid points rank after grid points at equal cost.
                    let mut key = idx.clone();
                    key[j] = usize::MAX;
                    offer(xc, key, sc);
                }
            }
        }
        // Mixed-radix increment.
        let mut d = 0;
        loop {
            if d == idx.len() {
                return Ok(match best {
                    Some(b) => CeSolution::optimal(prob, b.x, b.score, count),
                    None => CeSolution::infeasible(prob, count),
                });
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// For each mutable axis, the value that puts the decision exactly on the
/// margin with every other coordinate fixed, nudged up until the recomputed
/// score clears it. Values outside the box are skipped.
fn axis_completions(model: &LinearModel, prob: &CeProblem, x: &[f64]) -> Vec<(usize, f64)> {
    let sign = prob.direction();
    let s = sign * model.decision(x);
    let mut out = Vec::new();
    for j in 0..x.len() {
        let a = sign * model.w[j];
        if prob.immutable[j] || a == 0.0 {
            continue;
        }
        let mut y = x[j] + (prob.margin - s) / a;
        let mut xc = x.to_vec();
        for _ in 0..8 {
            xc[j] = y;
            if sign * model.decision(&xc) >= prob.margin {
                break;
            }
            y = if a > 0.0 { y.next_up() } else { y.next_down() };
        }
        if y >= prob.lower[j] && y <= prob.upper[j] {
            out.push((j, y));
        }
    }
    out
}
