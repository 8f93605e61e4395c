use super::{CeProblem, CeSolution};
use crate::error::{FccaError, Result};
use crate::models::LinearModel;

/// One feature that can push the decision value toward the target.
#[derive(Clone, Copy, Debug)]
struct Mover {
    feature: usize,
    /// `|w_j|`: score gained per unit of movement.
    rate: f64,
    /// Largest movement allowed by the box in the useful direction.
    cap: f64,
    /// `+1` or `-1`.
    dir: f64,
}

/// Exact minimum-cost counterfactual for a linear model.
///
/// Branch-and-bound over the set of moved features (the `lambda0` term),
/// with the convex continuous problem on each support solved in closed form:
/// greedy filling by `|w_j|` without the quadratic term, KKT water-filling
/// with it.
pub fn solve_linear_ce(model: &LinearModel, prob: &CeProblem) -> Result<CeSolution> {
    prob.validate_shape(model.w.len())?;
    prob.check_label(u8::from(model.decision(&prob.x0) >= 0.0))?;
    let sign = prob.direction();
    let required = prob.margin - sign * model.decision(&prob.x0);
    if !(required > 0.0) {
        return Err(FccaError::InvalidProblem("x0 already satisfies the target".into()));
    }
    let mut movers: Vec<Mover> = (0..model.w.len())
        .filter(|&j| !prob.immutable[j] && model.w[j] != 0.0)
        .filter_map(|j| {
            let a = sign * model.w[j];
            let dir = a.signum();
            let cap = if dir > 0.0 {
                prob.upper[j] - prob.x0[j]
            } else {
                prob.x0[j] - prob.lower[j]
            };
            (cap > 0.0).then_some(Mover {
                feature: j,
                rate: a.abs(),
                cap,
                dir,
            })
        })
        .collect();
    movers.sort_by(|a, b| {
        (b.rate * b.cap)
            .total_cmp(&(a.rate * a.cap))
            .then(b.rate.total_cmp(&a.rate))
            .then(a.feature.cmp(&b.feature))
    });
    let total: f64 = movers.iter().map(|mv| mv.rate * mv.cap).sum();
    if total < required {
        return Ok(CeSolution::infeasible(prob, 1));
    }

    // A hair of slack keeps the recomputed decision value past the margin.
    let target = required * (1.0 + 1e-12) + 1e-15;
    let mut search = SupportSearch {
        prob,
        movers: &movers,
        target,
        included: Vec::new(),
        best: None,
        nodes: 0,
    };
    search.branch(0);
    let nodes = search.nodes;
    let Some((_, t)) = search.best else {
        return Ok(CeSolution::infeasible(prob, nodes));
    };
    let mut x = prob.x0.clone();
    for (mv, &tj) in movers.iter().zip(&t) {
        if tj > 0.0 {
            let v = prob.x0[mv.feature] + mv.dir * tj;
            x[mv.feature] = v.clamp(prob.lower[mv.feature], prob.upper[mv.feature]);
        }
    }
    let score = sign * model.decision(&x);
    if score < prob.margin {
        return Err(FccaError::Infeasible(format!(
            "linear counterfactual lost the margin to rounding ({score:e})"
        )));
    }
    Ok(CeSolution::optimal(prob, x, score, nodes))
}

struct SupportSearch<'a> {
    prob: &'a CeProblem,
    movers: &'a [Mover],
    target: f64,
    included: Vec<usize>,
    /// Cost and per-mover movement of the incumbent.
    best: Option<(f64, Vec<f64>)>,
    nodes: u64,
}

impl SupportSearch<'_> {
    fn branch(&mut self, pos: usize) {
        self.nodes += 1;
        let lambda0 = self.prob.lambda0;
        let mut allowed = self.included.clone();
        allowed.extend(pos..self.movers.len());
        let Some((relaxed, _)) = self.continuous(&allowed) else {
            return;
        };
        let Some(extra) = self.min_extra(pos) else {
            return;
        };
        let bound = lambda0 * (self.included.len() + extra) as f64 + relaxed;
        if let Some((best, _)) = &self.best {
            if bound >= *best - 1e-15 {
                return;
            }
        }
        if pos == self.movers.len() {
            let support = self.included.clone();
            if let Some((cost, t)) = self.continuous(&support) {
                let used = t.iter().filter(|&&v| v > 0.0).count();
                let total = lambda0 * used as f64 + cost;
                if self.best.as_ref().map_or(true, |(b, _)| total < *b) {
                    self.best = Some((total, t));
                }
            }
            return;
        }
        self.included.push(pos);
        self.branch(pos + 1);
        self.included.pop();
        self.branch(pos + 1);
    }

    /// Fewest undecided movers that must join the support to make the
    /// target reachable at full capacity.
    fn min_extra(&self, pos: usize) -> Option<usize> {
        let mut reach: f64 = self
            .included
            .iter()
            .map(|&i| self.movers[i].rate * self.movers[i].cap)
            .sum();
        if reach >= self.target {
            return Some(0);
        }
        // Undecided movers are already sorted by capacity gain.
        for (k, mv) in self.movers[pos..].iter().enumerate() {
            reach += mv.rate * mv.cap;
            if reach >= self.target {
                return Some(k + 1);
            }
        }
        None
    }

    /// Minimum of `sum lambda1 t + lambda2 t^2` over movers in `support`
    /// subject to `sum rate t >= target`, `0 <= t <= cap`. Returns the cost
    /// and movement per mover (zero outside the support).
    fn continuous(&self, support: &[usize]) -> Option<(f64, Vec<f64>)> {
        let (l1, l2) = (self.prob.lambda1, self.prob.lambda2);
        let reach: f64 = support
            .iter()
            .map(|&i| self.movers[i].rate * self.movers[i].cap)
            .sum();
        if reach < self.target {
            return None;
        }
        let mut t = vec![0.0; self.movers.len()];
        if l2 == 0.0 {
            let mut order = support.to_vec();
            order.sort_by(|&a, &b| {
                self.movers[b]
                    .rate
                    .total_cmp(&self.movers[a].rate)
                    .then(self.movers[a].feature.cmp(&self.movers[b].feature))
            });
            let mut need = self.target;
            for i in order {
                if need <= 0.0 {
                    break;
                }
                let mv = self.movers[i];
                let step = (need / mv.rate).min(mv.cap);
                t[i] = step;
                need -= step * mv.rate;
            }
        } else {
            let mu = water_level(support.iter().map(|&i| self.movers[i]), self.target, l1, l2);
            for &i in support {
                let mv = self.movers[i];
                t[i] = ((mu * mv.rate - l1) / (2.0 * l2)).clamp(0.0, mv.cap);
            }
        }
        let cost = t.iter().map(|&v| l1 * v + l2 * v * v).sum();
        Some((cost, t))
    }
}

/// Multiplier `mu` with `sum rate * clamp((mu rate - l1) / 2 l2, 0, cap) = target`.
/// The left side is piecewise linear and nondecreasing in `mu`, so the root
/// is found exactly on the segment between consecutive breakpoints.
fn water_level(movers: impl Iterator<Item = Mover> + Clone, target: f64, l1: f64, l2: f64) -> f64 {
    let supply = |mu: f64| -> f64 {
        movers
            .clone()
            .map(|mv| mv.rate * ((mu * mv.rate - l1) / (2.0 * l2)).clamp(0.0, mv.cap))
            .sum()
    };
    let mut breaks: Vec<f64> = movers
        .clone()
        .flat_map(|mv| [l1 / mv.rate, (l1 + 2.0 * l2 * mv.cap) / mv.rate])
        .collect();
    breaks.sort_by(f64::total_cmp);
    let mut lo = 0.0;
    let mut s_lo = supply(lo);
    for &b in &breaks {
        let s_b = supply(b);
        if s_b >= target {
            if s_b == s_lo {
                return b;
            }
            return lo + (b - lo) * (target - s_lo) / (s_b - s_lo);
        }
        lo = b;
        s_lo = s_b;
    }
    lo
}
